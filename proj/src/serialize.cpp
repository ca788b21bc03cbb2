#include "serialize.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "error.hpp"

namespace sdnid::io {
namespace {

using nlohmann::json;

constexpr const char* kCheckpointFormat = "sdnid-checkpoint";
constexpr const char* kLinearFormat = "sdnid-linear-ss";
constexpr int kVersion = 1;

json matrix_json(const Eigen::MatrixXd& m) {
  json data = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Eigen::MatrixXd matrix_from(const json& j, const std::string& what) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const json& data = j.at("data");
  if (rows < 0 || cols < 0 || static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw Error(ErrorCode::kData, what + ": data size does not match its shape");
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      const json& v = data[static_cast<std::size_t>(r * cols + c)];
      if (!v.is_number()) throw Error(ErrorCode::kData, what + ": non-numeric entry");
      m(r, c) = v.get<double>();
    }
  }
  return m;
}

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.begin(), v.end()); }

Eigen::VectorXd vector_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json parse(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kData, what + " is not valid JSON: " + e.what());
  }
}

template <typename F>
auto guarded(const std::string& what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kData, what + ": " + e.what());
  }
}

}  // namespace

std::string checkpoint_to_text(const Checkpoint& ckpt) {
  const nn::Dims& d = ckpt.params.dims;
  json tensors = json::array();
  for (const auto& t : ckpt.params.tensors) {
    json e = matrix_json(t.value);
    e["name"] = t.name;
    e["bias"] = t.bias;
    tensors.push_back(e);
  }
  json doc = {
      {"format", kCheckpointFormat},
      {"version", kVersion},
      {"config_hash", ckpt.config.hash()},
      {"seed", ckpt.config.seed},
      {"config", ckpt.config.to_text()},
      {"dims",
       {{"nx", d.nx},
        {"nu", d.nu},
        {"ny", d.ny},
        {"na", d.na},
        {"nb", d.nb},
        {"hidden", d.hidden},
        {"depth", d.depth},
        {"output_uses_input", d.output_uses_input},
        {"tau_kind", to_string(d.tau_kind)}}},
      {"tau", vector_json(ckpt.params.raw_tau().reshaped())},
      {"tau_trainable", ckpt.tau_trainable},
      {"tensors", tensors},
      {"scalers",
       {{"u_mean", vector_json(ckpt.u_scaler.mean)},
        {"u_std", vector_json(ckpt.u_scaler.stddev)},
        {"y_mean", vector_json(ckpt.y_scaler.mean)},
        {"y_std", vector_json(ckpt.y_scaler.stddev)}}},
      {"u_names", ckpt.u_names},
      {"y_names", ckpt.y_names},
      {"manifest", ckpt.manifest},
  };
  return doc.dump(1) + "\n";
}

Checkpoint checkpoint_from_text(const std::string& text) {
  const json doc = parse(text, "checkpoint");
  return guarded("checkpoint", [&] {
    if (doc.at("format").get<std::string>() != kCheckpointFormat) {
      throw Error(ErrorCode::kData, "not a checkpoint document");
    }
    if (doc.at("version").get<int>() != kVersion) {
      throw Error(ErrorCode::kData, "unsupported checkpoint version");
    }
    Checkpoint c;
    c.config = parse_config(doc.at("config").get<std::string>());
    if (c.config.hash() != doc.at("config_hash").get<std::string>()) {
      throw Error(ErrorCode::kData, "checkpoint config hash mismatch");
    }
    const json& jd = doc.at("dims");
    nn::Dims d;
    d.nx = jd.at("nx").get<int>();
    d.nu = jd.at("nu").get<int>();
    d.ny = jd.at("ny").get<int>();
    d.na = jd.at("na").get<int>();
    d.nb = jd.at("nb").get<int>();
    d.hidden = jd.at("hidden").get<int>();
    d.depth = jd.at("depth").get<int>();
    d.output_uses_input = jd.at("output_uses_input").get<bool>();
    const auto kind = jd.at("tau_kind").get<std::string>();
    if (kind == "scalar") {
      d.tau_kind = TauKind::kScalar;
    } else if (kind == "vector") {
      d.tau_kind = TauKind::kVector;
    } else {
      throw Error(ErrorCode::kData, "unknown tau kind '" + kind + "'");
    }
    c.params = nn::init_params(d, c.config.ts, c.config.tau_init_ratio, 0);
    const json& tensors = doc.at("tensors");
    if (tensors.size() != c.params.tensors.size()) {
      throw Error(ErrorCode::kData, "checkpoint tensor count does not match its dims");
    }
    for (const json& t : tensors) {
      const auto name = t.at("name").get<std::string>();
      const auto idx = c.params.find(name);
      if (!idx) throw Error(ErrorCode::kData, "unknown tensor '" + name + "'");
      Eigen::MatrixXd m = matrix_from(t, name);
      Eigen::MatrixXd& dst = c.params.at(*idx);
      if (m.rows() != dst.rows() || m.cols() != dst.cols()) {
        throw Error(ErrorCode::kData, "tensor '" + name + "' has the wrong shape");
      }
      dst = std::move(m);
    }
    if (!c.params.all_finite()) throw Error(ErrorCode::kData, "checkpoint holds non-finite values");
    const json& s = doc.at("scalers");
    c.u_scaler = {vector_from(s.at("u_mean")), vector_from(s.at("u_std"))};
    c.y_scaler = {vector_from(s.at("y_mean")), vector_from(s.at("y_std"))};
    if (c.u_scaler.mean.size() != d.nu || c.y_scaler.mean.size() != d.ny) {
      throw Error(ErrorCode::kData, "checkpoint scalers do not match its dims");
    }
    c.u_names = doc.at("u_names").get<std::vector<std::string>>();
    c.y_names = doc.at("y_names").get<std::vector<std::string>>();
    c.tau_trainable = doc.at("tau_trainable").get<bool>();
    c.manifest = doc.at("manifest").get<std::string>();
    return c;
  });
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  write_file(path, checkpoint_to_text(ckpt));
}

Checkpoint load_checkpoint(const std::string& path) { return checkpoint_from_text(read_file(path)); }

std::string linear_to_text(const bla::LinearSS& model, double ts) {
  const json doc = {{"format", kLinearFormat},
                    {"version", kVersion},
                    {"ts", ts},
                    {"order", model.order()},
                    {"A", matrix_json(model.A)},
                    {"B", matrix_json(model.B)},
                    {"C", matrix_json(model.C)},
                    {"D", matrix_json(model.D)},
                    {"tustin_fallback", model.tustin_fallback},
                    {"stable", model.stable}};
  return doc.dump(1) + "\n";
}

bla::LinearSS linear_from_text(const std::string& text) {
  const json doc = parse(text, "linear model");
  return guarded("linear model", [&] {
    if (doc.at("format").get<std::string>() != kLinearFormat) {
      throw Error(ErrorCode::kData, "not a linear model document");
    }
    bla::LinearSS m;
    m.A = matrix_from(doc.at("A"), "A");
    m.B = matrix_from(doc.at("B"), "B");
    m.C = matrix_from(doc.at("C"), "C");
    m.D = matrix_from(doc.at("D"), "D");
    m.tustin_fallback = doc.at("tustin_fallback").get<bool>();
    m.stable = doc.at("stable").get<bool>();
    if (m.A.rows() != m.A.cols() || m.B.rows() != m.A.rows() || m.C.cols() != m.A.rows() ||
        m.D.rows() != m.C.rows() || m.D.cols() != m.B.cols()) {
      throw Error(ErrorCode::kData, "linear model matrices have inconsistent shapes");
    }
    return m;
  });
}

std::string manifest_to_text(const Manifest& m) {
  const json doc = {{"command", m.command},     {"seed", m.config.seed},
                    {"config", m.config.to_text()}, {"config_hash", m.config.hash()},
                    {"revision", m.revision},   {"inputs", m.inputs},
                    {"outputs", m.outputs},     {"notes", m.notes}};
  return doc.dump(1) + "\n";
}

void save_manifest(const std::string& path, const Manifest& m) {
  write_file(path, manifest_to_text(m));
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path + "'");
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "write to '" + path + "' failed");
}

}  // namespace sdnid::io
