#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uavfl/lsnet/model.hpp"

namespace uavfl::harness {

struct SyntheticDataConfig {
  int train_per_class = 200;
  int test_per_class = 50;
  std::vector<double> snr_grid_db{-10.0, 0.0, 10.0};
  double interference_prob = 0.5;
  double min_burst_fill = 1.0;
};

struct ExternalDataConfig {
  std::string path;
  std::string manifest;
};

/// Declarative description of one experiment run; serialized verbatim into
/// the run manifest so any run can be reproduced from it.
struct ExperimentConfig {
  std::string mode = "central";  // "central" or "federated"
  std::optional<SyntheticDataConfig> synthetic;
  std::optional<ExternalDataConfig> external;
  std::vector<std::string> known_classes;
  std::vector<std::string> unknown_classes;

  lsnet::LSNetConfig model;  // num_classes is overwritten from known_classes

  double alpha = 0.1;
  double lambda = 0.1;
  std::string score = "min-distance";  // or "softmin"

  // centralized optimizer
  double lr = 0.01;
  double momentum = 0.9;
  bool cosine = true;
  int epochs = 10;
  int batch = 64;

  // federated settings
  int clients = 5;
  int per_round = 5;
  int rounds = 50;
  int local_epochs = 1;
  double fed_lr = 0.05;
  int fed_batch = 64;
  std::string norm_policy = "adaptive";  // "none", "fixed", "adaptive"
  double norm_policy_value = 10.0;

  int eval_cadence = 0;
  std::uint64_t seed = 1;
  std::string out_dir = "run";

  void validate() const;
};

nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const nlohmann::json& j);

/// Loads either a raw config file or a run manifest (whose "config" key
/// holds the snapshot).
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace uavfl::harness
