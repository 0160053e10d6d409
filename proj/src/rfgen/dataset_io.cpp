#include "uavfl/rfgen/dataset_io.hpp"

#include <bit>
#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "uavfl/core/require.hpp"
#include "uavfl/rfgen/decimate.hpp"

static_assert(std::endian::native == std::endian::little,
              "raw window records are little-endian");

namespace uavfl::rfgen {

namespace fs = std::filesystem;
using nlohmann::json;

void write_dataset(const fs::path& dir, const LabeledDataset& dataset) {
  fs::create_directories(dir);
  json manifest;
  manifest["sample_rate_hz"] = kSampleRateHz;
  manifest["window_len"] = kWindowLength;
  manifest["dtype"] = "cf32";
  manifest["endianness"] = "little";
  manifest["split"] = dataset.split;
  json records = json::array();

  std::map<std::string, int> counters;
  for (const auto& rec : dataset.items) {
    const std::string& label = dataset.classes[static_cast<std::size_t>(rec.label)];
    fs::create_directories(dir / label);
    char name[64];
    std::snprintf(name, sizeof(name), "%s_%06d.iq", label.c_str(), counters[label]++);
    const fs::path rel = fs::path(label) / name;
    std::ofstream out(dir / rel, std::ios::binary);
    require(out.good(), "write_dataset: cannot open " + (dir / rel).string());
    out.write(reinterpret_cast<const char*>(rec.iq.samples.data()),
              static_cast<std::streamsize>(rec.iq.samples.size() * sizeof(std::complex<float>)));
    json jr;
    jr["file"] = rel.generic_string();
    jr["label"] = label;
    if (rec.iq.snr_db) jr["snr_db"] = *rec.iq.snr_db;
    jr["seed"] = rec.iq.seed;
    records.push_back(jr);
  }
  manifest["records"] = records;
  std::ofstream mf(dir / "manifest.json", std::ios::binary);
  require(mf.good(), "write_dataset: cannot open manifest");
  mf << manifest.dump(2) << "\n";
}

namespace {

bool read_cf32(const fs::path& file, Eigen::Index n, CVecF& out) {
  std::ifstream in(file, std::ios::binary | std::ios::ate);
  if (!in.good()) return false;
  const auto size = static_cast<std::uint64_t>(in.tellg());
  if (size != static_cast<std::uint64_t>(n) * sizeof(std::complex<float>)) return false;
  in.seekg(0);
  out.resize(n);
  in.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(size));
  return in.good();
}

bool read_ci16(const fs::path& file, Eigen::Index n, CVecF& out) {
  std::ifstream in(file, std::ios::binary | std::ios::ate);
  if (!in.good()) return false;
  const auto size = static_cast<std::uint64_t>(in.tellg());
  if (size != static_cast<std::uint64_t>(n) * 2 * sizeof(std::int16_t)) return false;
  in.seekg(0);
  std::vector<std::int16_t> raw(static_cast<std::size_t>(n) * 2);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(size));
  if (!in.good()) return false;
  out.resize(n);
  constexpr float kScale = 1.0f / 32768.0f;
  for (Eigen::Index i = 0; i < n; ++i)
    out[i] = std::complex<float>(raw[static_cast<std::size_t>(2 * i)] * kScale,
                                 raw[static_cast<std::size_t>(2 * i + 1)] * kScale);
  return true;
}

}  // namespace

LoadResult load_external(const fs::path& root, const fs::path& manifest_file) {
  std::ifstream mf(manifest_file);
  require(mf.good(), "load_external: cannot open manifest " + manifest_file.string());
  json manifest = json::parse(mf);

  const double fs_hz = manifest.value("sample_rate_hz", kSampleRateHz);
  const std::string dtype = manifest.value("dtype", "cf32");
  const std::string endian = manifest.value("endianness", "little");
  require(endian == "little", "load_external: only little-endian records are supported");
  require(dtype == "cf32" || dtype == "ci16", "load_external: unsupported dtype " + dtype);
  const bool needs_decimate = fs_hz == 4.0 * kSampleRateHz;
  require(fs_hz == kSampleRateHz || needs_decimate,
          "load_external: sample rate must be 14 MHz or 56 MHz");
  const Eigen::Index raw_len = needs_decimate ? 4 * kWindowLength : kWindowLength;

  LoadResult result;
  result.dataset.classes = class_labels();
  result.dataset.split = "all";

  for (const auto& jr : manifest.at("records")) {
    const std::string file = jr.at("file").get<std::string>();
    const std::string label = jr.value("label", "");
    const int cls = class_index(label);
    if (cls < 0) {
      result.report.rejected.emplace_back(file, "unknown-label");
      continue;
    }
    CVecF raw;
    const bool ok = dtype == "cf32" ? read_cf32(root / file, raw_len, raw)
                                    : read_ci16(root / file, raw_len, raw);
    if (!ok) {
      result.report.rejected.emplace_back(file, "length-mismatch");
      continue;
    }
    if (!all_finite(raw)) {
      result.report.rejected.emplace_back(file, "non-finite");
      continue;
    }
    IQWindow w;
    w.samples = needs_decimate ? decimate(raw, 4) : std::move(raw);
    w.sample_rate_hz = kSampleRateHz;
    w.label = label;
    if (jr.contains("snr_db") && !jr["snr_db"].is_null()) w.snr_db = jr["snr_db"].get<double>();
    if (jr.contains("seed")) w.seed = jr["seed"].get<std::uint64_t>();
    result.dataset.items.push_back({std::move(w), cls});
    result.report.accepted += 1;
  }
  for (const auto& [label, n] : result.dataset.count_by_class())
    result.dataset.manifest[label] = n;
  return result;
}

}  // namespace uavfl::rfgen
