#pragma once

#include <complex>
#include <string>
#include <vector>

namespace uavfl::rfgen {

/// Parametric burst shapes used as synthetic stand-ins for the real
/// controller waveforms. CpFsk is a constant-envelope continuous-phase
/// FSK burst; BandNoise is a band-limited noise burst; NoiseMix composes
/// WiFi-like wideband and Bluetooth-like hopping bursts.
enum class Modulation { CpFsk, BandNoise, NoiseMix };

struct EmitterProfile {
  std::string label;
  double center_freq_hz = 0.0;
  double channel_spacing_hz = 0.0;
  std::vector<int> channel_indices;       // admissible channel offsets k
  std::vector<double> burst_durations_s;  // one or more listed durations
  double repetition_min_s = 0.0;
  double repetition_max_s = 0.0;
  double bandwidth_hz = 0.0;  // synthetic stand-in parameter
  Modulation modulation = Modulation::CpFsk;
  int fsk_levels = 2;
  double symbol_rate_hz = 0.0;
  double freq_deviation_hz = 0.0;
  double carrier_fraction = 0.15;  // power left in the residual carrier tone

  /// Throws ValidationError on non-positive durations or repetition
  /// shorter than the burst itself.
  void validate() const;
};

struct ChannelSpec {
  std::complex<double> gain{1.0, 0.0};
  double path_loss = 1.0;  // extra scalar amplitude factor, >= 0
  double receiver_center_hz = 2.44175e9;
};

/// The seven emitter classes in canonical (alphabetical) label order:
/// DJI, FutabaT7, FutabaT14, Graupner, Noise, Taranis, Turnigy.
const std::vector<EmitterProfile>& default_profiles();
const EmitterProfile& profile_for(const std::string& label);
const std::vector<std::string>& class_labels();
int class_index(const std::string& label);  // -1 when unknown

}  // namespace uavfl::rfgen
