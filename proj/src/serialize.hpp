#pragma once

// JSON documents for checkpoints, linear models and run manifests. Doubles are
// written in shortest round-trip form, so save/load is lossless.

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bla.hpp"
#include "config.hpp"
#include "data.hpp"
#include "nn.hpp"

namespace sdnid::io {

struct Checkpoint {
  nn::ModelParams params;
  RunConfig config;
  data::Scaler u_scaler;
  data::Scaler y_scaler;
  std::vector<std::string> u_names;
  std::vector<std::string> y_names;
  bool tau_trainable = false;
  std::string manifest;  // path of the manifest that produced it
};

std::string checkpoint_to_text(const Checkpoint& ckpt);
Checkpoint checkpoint_from_text(const std::string& text);
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

std::string linear_to_text(const bla::LinearSS& model, double ts);
bla::LinearSS linear_from_text(const std::string& text);

struct Manifest {
  std::string command;
  RunConfig config;
  std::string revision;
  std::map<std::string, std::string> inputs;   // path -> sha256
  std::map<std::string, std::string> outputs;  // role -> path
  std::map<std::string, std::string> notes;
};

std::string manifest_to_text(const Manifest& m);
void save_manifest(const std::string& path, const Manifest& m);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

}  // namespace sdnid::io
