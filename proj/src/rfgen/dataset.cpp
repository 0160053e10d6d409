#include "uavfl/rfgen/dataset.hpp"

#include <numeric>

#include "uavfl/core/require.hpp"
#include "uavfl/core/rng.hpp"
#include "uavfl/rfgen/mix.hpp"
#include "uavfl/rfgen/synth.hpp"

namespace uavfl::rfgen {

namespace {
constexpr std::uint64_t kTagWindow = 0x77696e646f77ull;
constexpr std::uint64_t kTagInterf = 0x696e746617ull;
constexpr std::uint64_t kTagMix = 0x6d6978ull;
constexpr std::uint64_t kTagSplit = 0x73706c6974ull;
constexpr std::uint64_t kTagChoice = 0x63686f696365ull;
}  // namespace

std::map<std::string, int> LabeledDataset::count_by_class() const {
  std::map<std::string, int> counts;
  for (const auto& r : items) counts[classes[static_cast<std::size_t>(r.label)]] += 1;
  return counts;
}

DatasetPair build_dataset(const DatasetConfig& config) {
  DatasetConfig cfg = config;
  if (cfg.classes.empty()) cfg.classes = class_labels();
  require(cfg.per_class > 0, "build_dataset: per_class must be positive");
  require(!cfg.snr_grid_db.empty(), "build_dataset: SNR grid must be nonempty");
  for (const auto& c : cfg.classes)
    require(class_index(c) >= 0, "build_dataset: unknown label in config: " + c);

  int n_train, n_test;
  if (cfg.train_per_class || cfg.test_per_class) {
    require(cfg.train_per_class && cfg.test_per_class,
            "build_dataset: explicit split needs both train and test counts");
    n_train = *cfg.train_per_class;
    n_test = *cfg.test_per_class;
    require(n_train + n_test == cfg.per_class,
            "build_dataset: explicit split must sum to per_class");
  } else {
    require(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0,
            "build_dataset: train fraction out of range");
    n_train = static_cast<int>(cfg.train_fraction * cfg.per_class);
    n_test = cfg.per_class - n_train;
  }
  require(n_train >= 0 && n_test >= 0, "build_dataset: negative split counts");

  ChannelSpec channel;
  channel.receiver_center_hz = cfg.receiver_center_hz;
  SynthOptions opts;
  opts.min_burst_fill = cfg.min_burst_fill;
  const EmitterProfile& noise_profile = profile_for("Noise");

  DatasetPair out;
  out.train.classes = out.test.classes = cfg.classes;
  out.train.split = "train";
  out.test.split = "test";

  for (std::size_t ci = 0; ci < cfg.classes.size(); ++ci) {
    const EmitterProfile& profile = profile_for(cfg.classes[ci]);
    const bool is_noise_class = profile.modulation == Modulation::NoiseMix;

    std::vector<Record> windows;
    windows.reserve(static_cast<std::size_t>(cfg.per_class));
    for (int i = 0; i < cfg.per_class; ++i) {
      const std::uint64_t wseed = derive_seed(cfg.seed, kTagWindow, ci, static_cast<std::uint64_t>(i));
      const double snr = cfg.snr_grid_db[static_cast<std::size_t>(i) % cfg.snr_grid_db.size()];
      IQWindow clean = synth_burst(profile, channel, {}, wseed, opts);
      IQWindow mixed;
      if (is_noise_class) {
        // The noise class is its own signal, mixed against AWGN only.
        mixed = mix_to_snr(clean, nullptr, snr, derive_seed(wseed, kTagMix));
      } else {
        Rng choice(derive_seed(wseed, kTagChoice));
        if (choice.bernoulli(cfg.interference_prob)) {
          const IQWindow interf =
              synth_burst(noise_profile, channel, {}, derive_seed(wseed, kTagInterf), opts);
          mixed = mix_to_snr(clean, &interf, snr, derive_seed(wseed, kTagMix));
        } else {
          mixed = mix_to_snr(clean, nullptr, snr, derive_seed(wseed, kTagMix));
        }
      }
      mixed.label = cfg.classes[ci];
      windows.push_back({std::move(mixed), static_cast<int>(ci)});
    }

    std::vector<int> order(windows.size());
    std::iota(order.begin(), order.end(), 0);
    Rng split_rng(derive_seed(cfg.seed, kTagSplit, ci));
    split_rng.shuffle(order);
    for (int i = 0; i < cfg.per_class; ++i) {
      Record& r = windows[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
      (i < n_train ? out.train : out.test).items.push_back(std::move(r));
    }
    out.train.manifest[cfg.classes[ci]] = n_train;
    out.test.manifest[cfg.classes[ci]] = n_test;
  }
  return out;
}

}  // namespace uavfl::rfgen
