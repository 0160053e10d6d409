#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <set>

#include "uavfl/fedsim/update.hpp"
#include "uavfl/lsnet/train.hpp"

namespace uavfl::fedsim {

struct LocalTrainConfig {
  int epochs = 1;  // local epochs per round
  int batch = 64;
  double lr = 0.05;
  double momentum = 0.0;
  bool cosine = false;
  lsnet::LossConfig loss;
};

struct NormPolicyConfig {
  enum class Kind { None, Fixed, Adaptive } kind = Kind::Adaptive;
  /// Fixed: the bound itself. Adaptive: multiple of the previous round's
  /// median accepted-update distance (first round unbounded).
  double value = 10.0;
};

struct FedConfig {
  int n_clients = 5;
  int per_round = 5;
  int rounds = 50;
  LocalTrainConfig local;
  NormPolicyConfig norm_policy;
  int eval_cadence = 0;  // evaluate every k rounds; 0 = final round only
  std::uint64_t seed = 0;

  /// Test fixture: corrupts the listed clients' submissions after signing,
  /// exercising the verification path end to end.
  std::set<std::uint32_t> tamper_clients;
  std::function<void(SignedUpdate&)> tamper_hook;
};

struct VerdictRecord {
  std::uint32_t client = 0;
  bool accepted = false;
  std::string reason;
  double distance = 0.0;  // L2 distance from the broadcast global model
};

struct RoundRecord {
  int round = 0;
  std::vector<std::uint32_t> selected;
  std::vector<VerdictRecord> verdicts;
  bool aggregated = false;
  double aggregate_norm = 0.0;
  std::optional<double> accuracy;
  std::optional<double> auroc_value;
};

struct EvalContext {
  const lsnet::SpecDataset* test_known = nullptr;
  const lsnet::SpecDataset* test_unknown = nullptr;
  caloss::ScoreKind score_kind = caloss::ScoreKind::MinDistance;
};

struct FederationResult {
  lsnet::ParameterSet<float> global;
  std::vector<RoundRecord> history;
  KeyRegistry registry;  // the public keys verification ran against
};

/// Disjoint, class-balanced shards; per-class remainders go to the lowest
/// client ids. Deterministic in (labels, seed).
std::vector<std::vector<int>> partition_indices(const std::vector<int>& labels, int n_clients,
                                                std::uint64_t seed);

lsnet::SpecDataset subset(const lsnet::SpecDataset& data, const std::vector<int>& idx);
rfgen::LabeledDataset subset(const rfgen::LabeledDataset& data, const std::vector<int>& idx);

/// Uniform sample of m distinct client ids, reproducible from (seed, round).
std::vector<std::uint32_t> select_clients(int n_clients, int m, int round, std::uint64_t seed);

/// Shared derivation so the centralized trainer and federated clients can
/// run the same seed schedule.
inline std::uint64_t train_seed_of(std::uint64_t master) {
  return derive_seed(master, 0x747261696eull);
}

/// SGD on the CA loss over one shard starting from the broadcast global
/// parameters; returns the updated parameters and the shard size. Throws
/// lsnet::TrainingDiverged on a non-finite loss (no update submitted).
std::pair<lsnet::ParameterSet<float>, std::uint64_t> local_train(
    const lsnet::ParameterSet<float>& global, const lsnet::SpecDataset& shard,
    const lsnet::LSNetConfig& model_cfg, const LocalTrainConfig& cfg, std::uint64_t train_seed,
    std::uint32_t client_id, long global_epoch_base);

/// Full simulation of the select -> broadcast -> train -> sign -> verify ->
/// aggregate loop with an audit history; optionally appends one JSON record
/// per round to history_path and saves a checkpoint at every evaluation
/// round into checkpoint_dir.
FederationResult run_federation(const FedConfig& cfg, const lsnet::LSNetConfig& model_cfg,
                                std::uint64_t model_seed, const lsnet::SpecDataset& train_data,
                                const EvalContext& eval = {},
                                const std::filesystem::path* history_path = nullptr,
                                const std::filesystem::path* checkpoint_dir = nullptr);

/// Writes the audit history as one JSON record per line.
void write_history(const std::filesystem::path& path, const std::vector<RoundRecord>& history);

}  // namespace uavfl::fedsim
