#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "uavfl/rfgen/dataset.hpp"

namespace uavfl::rfgen {

/// Writes one directory per class with raw windows as interleaved
/// little-endian float32 (real, imag) pairs, 16,384 complex samples per
/// record, plus a manifest.json sidecar listing file, label, snr_db, seed.
void write_dataset(const std::filesystem::path& dir, const LabeledDataset& dataset);

struct LoadReport {
  int accepted = 0;
  std::vector<std::pair<std::string, std::string>> rejected;  // (file, reason)
};

struct LoadResult {
  LabeledDataset dataset;
  LoadReport report;
};

/// Ingestion adapter for external recordings. The manifest declares the
/// per-file label, SNR, dtype ("cf32" or "ci16") and endianness
/// ("little"); files sampled at 56 MHz are decimated by 4 on load.
/// Malformed files are rejected per-file with a reason, never fatally.
LoadResult load_external(const std::filesystem::path& root,
                         const std::filesystem::path& manifest_file);

}  // namespace uavfl::rfgen
