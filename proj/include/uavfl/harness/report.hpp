#pragma once

#include <filesystem>

#include "uavfl/harness/svg.hpp"

namespace uavfl::harness {

/// Aggregates a completed run directory into report/: summary.csv, line
/// plots for training progress, an ROC curve when score files exist, and
/// the confusion grid. Deterministic given inputs; throws on an empty or
/// unreported run directory.
void export_report(const std::filesystem::path& run_dir,
                   const std::filesystem::path& out_dir);

}  // namespace uavfl::harness
