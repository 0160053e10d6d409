#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "uavfl/rfgen/emitter.hpp"
#include "uavfl/rfgen/iq_window.hpp"

namespace uavfl::rfgen {

struct DatasetConfig {
  std::vector<std::string> classes;   // defaults to all seven labels
  int per_class = 0;                  // windows per class before the split
  std::vector<double> snr_grid_db;    // assigned round-robin per class
  double train_fraction = 0.8;
  std::optional<int> train_per_class; // explicit split overrides the fraction
  std::optional<int> test_per_class;
  std::uint64_t seed = 0;
  double interference_prob = 0.5;     // chance of WiFi/BT bursts under a drone window
  double min_burst_fill = 1.0;
  double receiver_center_hz = 2.44175e9;
};

struct Record {
  IQWindow iq;
  int label = 0;  // index into LabeledDataset::classes
};

struct LabeledDataset {
  std::vector<std::string> classes;
  std::vector<Record> items;
  std::string split;  // "train", "test" or "all"
  std::map<std::string, int> manifest;  // declared per-class counts

  std::map<std::string, int> count_by_class() const;
};

struct DatasetPair {
  LabeledDataset train, test;
};

/// Deterministically synthesizes a balanced labeled dataset: windows per
/// class with SNRs cycled over the grid, drone windows optionally mixed
/// with WiFi/Bluetooth interference, and a disjoint train/test split.
DatasetPair build_dataset(const DatasetConfig& config);

}  // namespace uavfl::rfgen
