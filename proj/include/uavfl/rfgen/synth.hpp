#pragma once

#include <cstdint>

#include "uavfl/rfgen/emitter.hpp"
#include "uavfl/rfgen/iq_window.hpp"

namespace uavfl::rfgen {

struct WindowSpec {
  Eigen::Index length = kWindowLength;
  double sample_rate_hz = kSampleRateHz;
};

struct SynthOptions {
  /// Duty-cycle knob: minimum fraction of the window that the burst
  /// on-time must cover when the burst is longer than the window.
  double min_burst_fill = 1.0;
};

/// Synthesizes one clean (noise-free) labeled window containing at least
/// one burst. The burst's baseband center offset is
/// (center_freq - receiver_center) + k * channel_spacing for an
/// rng-chosen channel index k; the on-time is drawn from the profile's
/// burst durations and the window is jittered inside it. Amplitude is
/// scaled by the channel gain; outside the on-time the window is exactly
/// zero.
IQWindow synth_burst(const EmitterProfile& profile, const ChannelSpec& channel,
                     const WindowSpec& spec, std::uint64_t seed,
                     const SynthOptions& options = {});

}  // namespace uavfl::rfgen
