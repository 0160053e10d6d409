#pragma once

#include <optional>

#include "uavfl/harness/config.hpp"

namespace uavfl::harness {

/// Stage-tagged failure; the CLI maps the stage to its exit code.
struct StageError : std::runtime_error {
  std::string stage;
  StageError(std::string st, const std::string& msg)
      : std::runtime_error(st + ": " + msg), stage(std::move(st)) {}
};

struct RunResult {
  std::filesystem::path run_dir;
  double final_accuracy = 0.0;
  std::optional<double> final_auroc;
};

/// Executes gen-or-load data -> spectrograms -> training -> evaluation and
/// writes the run directory: run.json manifest, metrics.csv, confusion.csv,
/// score CSVs, round_log.jsonl (federated) and checkpoints. Deterministic
/// for a fixed config+seed. Partial outputs are kept on failure and the
/// manifest records the failing stage.
RunResult run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& run_dir);

/// Evaluates a saved checkpoint against the config's dataset and writes
/// eval outputs into run_dir.
RunResult evaluate_checkpoint(const ExperimentConfig& cfg, const std::filesystem::path& ckpt,
                              const std::filesystem::path& run_dir);

std::string format_value(double v);  // canonical CSV float formatting

}  // namespace uavfl::harness
