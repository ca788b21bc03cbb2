#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "digest.hpp"
#include "error.hpp"

namespace sdnid {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw Error(ErrorCode::kInvalidArgument, "config: bad value '" + value + "' for " + key);
}

double parse_double(const std::string& key, const std::string& text) {
  const std::string s = trim(text);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) bad_value(key, text);
  return v;
}

long long parse_integer(const std::string& key, const std::string& text) {
  const std::string s = trim(text);
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) bad_value(key, text);
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  const std::string s = trim(text);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  bad_value(key, text);
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

struct Field {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
Field int_field(T RunConfig::*member) {
  return {[member](RunConfig& c, const std::string& v) {
            c.*member = static_cast<T>(parse_integer("integer", v));
          },
          [member](const RunConfig& c) { return std::to_string(c.*member); }};
}

Field double_field(double RunConfig::*member) {
  return {[member](RunConfig& c, const std::string& v) { c.*member = parse_double("real", v); },
          [member](const RunConfig& c) { return format_double(c.*member); }};
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> t;
    t["nx"] = int_field(&RunConfig::nx);
    t["na"] = int_field(&RunConfig::na);
    t["nb"] = int_field(&RunConfig::nb);
    t["hidden"] = int_field(&RunConfig::hidden);
    t["depth"] = int_field(&RunConfig::depth);
    t["output_uses_input"] = {
        [](RunConfig& c, const std::string& v) {
          c.output_uses_input = parse_bool("output_uses_input", v);
        },
        [](const RunConfig& c) { return std::string(c.output_uses_input ? "true" : "false"); }};
    t["batch"] = int_field(&RunConfig::batch);
    t["seq_len"] = int_field(&RunConfig::seq_len);
    t["max_steps"] = int_field(&RunConfig::max_steps);
    t["lr_schedule"] = {
        [](RunConfig& c, const std::string& v) {
          std::vector<std::pair<long, double>> sched;
          std::stringstream ss(v);
          std::string item;
          while (std::getline(ss, item, ',')) {
            const auto colon = item.find(':');
            if (colon == std::string::npos) bad_value("lr_schedule", v);
            sched.emplace_back(static_cast<long>(parse_integer("lr_schedule", item.substr(0, colon))),
                               parse_double("lr_schedule", item.substr(colon + 1)));
          }
          c.lr_schedule = std::move(sched);
        },
        [](const RunConfig& c) {
          std::string out;
          for (std::size_t i = 0; i < c.lr_schedule.size(); ++i) {
            if (i) out += ",";
            out += std::to_string(c.lr_schedule[i].first) + ":" +
                   format_double(c.lr_schedule[i].second);
          }
          return out;
        }};
    t["weight_decay"] = double_field(&RunConfig::weight_decay);
    t["lambda_n"] = double_field(&RunConfig::lambda_n);
    t["lambda_d"] = double_field(&RunConfig::lambda_d);
    t["patience"] = int_field(&RunConfig::patience);
    t["val_interval"] = int_field(&RunConfig::val_interval);
    t["ts"] = double_field(&RunConfig::ts);
    t["tau_mode"] = {[](RunConfig& c, const std::string& v) {
                       const std::string s = trim(v);
                       if (s == "fixed") c.tau_mode = TauMode::kFixed;
                       else if (s == "trainable") c.tau_mode = TauMode::kTrainable;
                       else if (s == "bla") c.tau_mode = TauMode::kBla;
                       else bad_value("tau_mode", v);
                     },
                     [](const RunConfig& c) { return std::string(to_string(c.tau_mode)); }};
    t["tau_kind"] = {[](RunConfig& c, const std::string& v) {
                       const std::string s = trim(v);
                       if (s == "scalar") c.tau_kind = TauKind::kScalar;
                       else if (s == "vector") c.tau_kind = TauKind::kVector;
                       else bad_value("tau_kind", v);
                     },
                     [](const RunConfig& c) { return std::string(to_string(c.tau_kind)); }};
    t["tau_init_ratio"] = double_field(&RunConfig::tau_init_ratio);
    t["tau_eps_factor"] = double_field(&RunConfig::tau_eps_factor);
    t["substeps"] = int_field(&RunConfig::substeps);
    t["divergence_limit"] = double_field(&RunConfig::divergence_limit);
    t["bla_order"] = int_field(&RunConfig::bla_order);
    t["bla_lag"] = int_field(&RunConfig::bla_lag);
    t["seed"] = int_field(&RunConfig::seed);
    return t;
  }();
  return table;
}

}  // namespace

const char* to_string(TauMode mode) {
  switch (mode) {
    case TauMode::kFixed: return "fixed";
    case TauMode::kTrainable: return "trainable";
    case TauMode::kBla: return "bla";
  }
  return "?";
}

const char* to_string(TauKind kind) {
  return kind == TauKind::kScalar ? "scalar" : "vector";
}

double RunConfig::learning_rate(long step) const {
  double lr = lr_schedule.empty() ? 0.0 : lr_schedule.front().second;
  for (const auto& [start, rate] : lr_schedule) {
    if (step >= start) lr = rate;
  }
  return lr;
}

void RunConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::kInvalidArgument, std::string("config: ") + what);
  };
  require(nx >= 1, "nx must be >= 1");
  require(na >= 1 && nb >= 1, "na and nb must be >= 1");
  require(hidden >= 1, "hidden must be >= 1");
  require(depth >= 1, "depth must be >= 1");
  require(batch >= 1, "batch must be >= 1");
  require(seq_len >= 1, "seq_len must be >= 1");
  require(max_steps >= 0, "max_steps must be >= 0");
  require(!lr_schedule.empty(), "lr_schedule must not be empty");
  require(std::is_sorted(lr_schedule.begin(), lr_schedule.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; }),
          "lr_schedule must be sorted by step");
  require(weight_decay >= 0.0 && lambda_n >= 0.0 && lambda_d >= 0.0,
          "penalty weights must be >= 0");
  require(patience >= 1, "patience must be >= 1");
  require(val_interval >= 1, "val_interval must be >= 1");
  require(ts > 0.0, "ts must be > 0");
  require(tau_init_ratio > 0.0, "tau_init_ratio must be > 0");
  require(tau_eps_factor > 0.0, "tau_eps_factor must be > 0");
  require(substeps >= 1, "substeps must be >= 1");
  require(divergence_limit > 0.0, "divergence_limit must be > 0");
  require(bla_order >= 1, "bla_order must be >= 1");
  require(bla_lag >= 1, "bla_lag must be >= 1");
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto& table = fields();
  auto it = table.find(trim(key));
  if (it == table.end()) {
    throw Error(ErrorCode::kInvalidArgument, "config: unknown key '" + key + "'");
  }
  try {
    it->second.set(*this, value);
  } catch (const Error&) {
    bad_value(trim(key), value);
  }
}

std::string RunConfig::get(const std::string& key) const {
  const auto& table = fields();
  auto it = table.find(trim(key));
  if (it == table.end()) {
    throw Error(ErrorCode::kInvalidArgument, "config: unknown key '" + key + "'");
  }
  return it->second.get(*this);
}

std::vector<std::string> RunConfig::keys() {
  std::vector<std::string> out;
  for (const auto& [k, f] : fields()) out.push_back(k);
  return out;
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& [k, f] : fields()) out += k + " = " + f.get(*this) + "\n";
  return out;
}

std::string RunConfig::hash() const { return sha256_hex(to_text()).substr(0, 16); }

RunConfig parse_config(const std::string& text, RunConfig base) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kInvalidArgument,
                  "config line " + std::to_string(lineno) + ": expected key = value");
    }
    base.set(line.substr(0, eq), line.substr(eq + 1));
  }
  return base;
}

RunConfig load_config(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

}  // namespace sdnid
