#include "uavfl/rfgen/emitter.hpp"

#include <algorithm>

#include "uavfl/core/require.hpp"

namespace uavfl::rfgen {

void EmitterProfile::validate() const {
  for (double d : burst_durations_s)
    require(d > 0.0, "emitter " + label + ": burst duration must be positive");
  require(!burst_durations_s.empty() || modulation == Modulation::NoiseMix,
          "emitter " + label + ": no burst durations");
  if (!burst_durations_s.empty()) {
    const double dmax = *std::max_element(burst_durations_s.begin(), burst_durations_s.end());
    require(repetition_min_s >= dmax,
            "emitter " + label + ": repetition interval shorter than burst duration");
    require(repetition_max_s >= repetition_min_s,
            "emitter " + label + ": repetition range inverted");
  }
  require(!channel_indices.empty() || modulation == Modulation::NoiseMix,
          "emitter " + label + ": no channel indices");
}

namespace {

std::vector<int> k_range(int lo, int hi) {
  std::vector<int> v;
  for (int k = lo; k <= hi; ++k) v.push_back(k);
  return v;
}

std::vector<EmitterProfile> make_default_profiles() {
  // Timing and frequency parameters follow the recorded controller table;
  // bandwidth and modulation shape are synthetic per-class signatures.
  std::vector<EmitterProfile> p;

  {
    EmitterProfile e;
    e.label = "DJI";
    e.center_freq_hz = 2.44175e9;
    e.channel_spacing_hz = 1.7e6;
    e.channel_indices = k_range(-2, 2);
    e.burst_durations_s = {2.18e-3};
    e.repetition_min_s = e.repetition_max_s = 630e-3;
    e.bandwidth_hz = 1.4e6;
    e.modulation = Modulation::BandNoise;  // wideband video-link-like burst
    e.carrier_fraction = 0.20;
    p.push_back(e);
  }
  {
    EmitterProfile e;
    e.label = "FutabaT7";
    e.center_freq_hz = 2.44175e9;
    e.channel_spacing_hz = 2.0e6;
    e.channel_indices = k_range(-2, 2);
    e.burst_durations_s = {1.7e-3};
    e.repetition_min_s = e.repetition_max_s = 288e-3;
    e.bandwidth_hz = 0.8e6;
    e.modulation = Modulation::CpFsk;
    e.fsk_levels = 2;
    e.symbol_rate_hz = 100e3;
    e.freq_deviation_hz = 235e3;
    e.carrier_fraction = 0.25;
    p.push_back(e);
  }
  {
    EmitterProfile e;
    e.label = "FutabaT14";
    e.center_freq_hz = 2.44175e9;
    e.channel_spacing_hz = 3.1e6;
    e.channel_indices = k_range(-1, 1);
    e.burst_durations_s = {1.4e-3};
    e.repetition_min_s = e.repetition_max_s = 330e-3;
    e.bandwidth_hz = 1.0e6;
    e.modulation = Modulation::CpFsk;
    e.fsk_levels = 4;
    e.symbol_rate_hz = 35e3;
    e.freq_deviation_hz = 450e3;
    e.carrier_fraction = 0.25;
    p.push_back(e);
  }
  {
    EmitterProfile e;
    e.label = "Graupner";
    e.center_freq_hz = 2.44175e9;
    e.channel_spacing_hz = 1.0e6;
    e.channel_indices = k_range(-3, 3);
    e.burst_durations_s = {1.9e-3, 3.7e-3};
    e.repetition_min_s = e.repetition_max_s = 750e-3;
    e.bandwidth_hz = 0.5e6;
    e.modulation = Modulation::CpFsk;
    e.fsk_levels = 2;
    e.symbol_rate_hz = 25e3;
    e.freq_deviation_hz = 165e3;
    e.carrier_fraction = 0.25;
    p.push_back(e);
  }
  {
    EmitterProfile e;
    e.label = "Noise";
    e.center_freq_hz = 2.44175e9;
    e.channel_spacing_hz = 0.0;
    e.bandwidth_hz = 10e6;  // WiFi-like component width
    e.modulation = Modulation::NoiseMix;
    e.carrier_fraction = 0.0;
    p.push_back(e);
  }
  {
    EmitterProfile e;
    e.label = "Taranis";
    e.center_freq_hz = 2.440e9;
    e.channel_spacing_hz = 1.5e6;
    e.channel_indices = {-2, -1, 0, 1, 3};
    e.burst_durations_s = {3.1e-3, 4.4e-3};
    e.repetition_min_s = e.repetition_max_s = 420e-3;
    e.bandwidth_hz = 1.3e6;
    e.modulation = Modulation::CpFsk;
    e.fsk_levels = 4;
    e.symbol_rate_hz = 8e3;   // slow staircase texture
    e.freq_deviation_hz = 610e3;
    e.carrier_fraction = 0.25;
    p.push_back(e);
  }
  {
    EmitterProfile e;
    e.label = "Turnigy";
    e.center_freq_hz = 2.445e9;
    e.channel_spacing_hz = 2.0e6;
    e.channel_indices = k_range(-3, 0);
    e.burst_durations_s = {1.3e-3};
    e.repetition_min_s = 61e-3;
    e.repetition_max_s = 2.9;
    e.bandwidth_hz = 0.6e6;
    e.modulation = Modulation::CpFsk;
    e.fsk_levels = 2;
    e.symbol_rate_hz = 55e3;
    e.freq_deviation_hz = 200e3;
    e.carrier_fraction = 0.25;
    p.push_back(e);
  }
  return p;
}

}  // namespace

const std::vector<EmitterProfile>& default_profiles() {
  static const std::vector<EmitterProfile> profiles = make_default_profiles();
  return profiles;
}

const std::vector<std::string>& class_labels() {
  static const std::vector<std::string> labels = [] {
    std::vector<std::string> v;
    for (const auto& p : default_profiles()) v.push_back(p.label);
    return v;
  }();
  return labels;
}

int class_index(const std::string& label) {
  const auto& labels = class_labels();
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == label) return static_cast<int>(i);
  return -1;
}

const EmitterProfile& profile_for(const std::string& label) {
  const int idx = class_index(label);
  require(idx >= 0, "unknown emitter label: " + label);
  return default_profiles()[static_cast<std::size_t>(idx)];
}

}  // namespace uavfl::rfgen
