#include "uavfl/rfgen/synth.hpp"

#include <cmath>
#include <numbers>

#include "uavfl/core/require.hpp"
#include "uavfl/core/rng.hpp"

namespace uavfl::rfgen {

namespace {

using std::numbers::pi;
using CD = std::complex<double>;

/// Windowed-sinc (Hamming) lowpass taps; cutoff_hz is the one-sided edge.
std::vector<double> lowpass_taps(double cutoff_hz, double fs_hz, int numtaps = 129) {
  std::vector<double> h(static_cast<std::size_t>(numtaps));
  const double fc = cutoff_hz / fs_hz;  // cycles per sample
  const int m = numtaps - 1;
  double sum = 0.0;
  for (int n = 0; n < numtaps; ++n) {
    const double x = n - m / 2.0;
    const double sinc = x == 0.0 ? 2.0 * fc : std::sin(2.0 * pi * fc * x) / (pi * x);
    const double w = 0.54 - 0.46 * std::cos(2.0 * pi * n / m);
    h[static_cast<std::size_t>(n)] = sinc * w;
    sum += h[static_cast<std::size_t>(n)];
  }
  for (double& v : h) v /= sum;  // unit DC gain
  return h;
}

/// "same"-length FIR filtering with zero boundary handling.
std::vector<CD> fir_same(const std::vector<CD>& x, const std::vector<double>& h) {
  const int n = static_cast<int>(x.size());
  const int m = static_cast<int>(h.size());
  const int half = m / 2;
  std::vector<CD> y(x.size());
  for (int i = 0; i < n; ++i) {
    CD acc{0.0, 0.0};
    const int klo = std::max(0, i + half - (n - 1));
    const int khi = std::min(m - 1, i + half);
    for (int k = klo; k <= khi; ++k) acc += h[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(i + half - k)];
    y[static_cast<std::size_t>(i)] = acc;
  }
  return y;
}

/// Band-limited complex noise of the given bandwidth, unit-ish power.
std::vector<CD> band_noise(Eigen::Index len, double bandwidth_hz, double fs_hz, Rng& rng) {
  std::vector<CD> x(static_cast<std::size_t>(len));
  const double s = std::numbers::sqrt2 / 2.0;
  for (auto& v : x) v = CD(rng.normal() * s, rng.normal() * s);
  if (bandwidth_hz < fs_hz) x = fir_same(x, lowpass_taps(bandwidth_hz / 2.0, fs_hz));
  return x;
}

/// Continuous-phase FSK burst samples for window positions
/// [0, len) that sit at burst-relative offsets starting at burst_pos0.
/// Level spacing is symmetric around the channel center.
std::vector<CD> cpfsk(Eigen::Index len, Eigen::Index burst_pos0, double offset_hz,
                      const EmitterProfile& p, double fs_hz, Rng& rng) {
  const Eigen::Index nsym =
      static_cast<Eigen::Index>(std::ceil((burst_pos0 + len) * p.symbol_rate_hz / fs_hz)) + 1;
  std::vector<double> levels(static_cast<std::size_t>(nsym));
  for (auto& a : levels) {
    const int m = static_cast<int>(rng.below(static_cast<std::uint64_t>(p.fsk_levels)));
    a = p.fsk_levels == 1 ? 0.0 : (2.0 * m - (p.fsk_levels - 1)) / (p.fsk_levels - 1);
  }
  std::vector<CD> y(static_cast<std::size_t>(len));
  double phase = rng.uniform(0.0, 2.0 * pi);
  for (Eigen::Index i = 0; i < len; ++i) {
    const auto sym = static_cast<std::size_t>((burst_pos0 + i) * p.symbol_rate_hz / fs_hz);
    const double f = offset_hz + p.freq_deviation_hz * levels[std::min(sym, levels.size() - 1)];
    phase += 2.0 * pi * f / fs_hz;
    y[static_cast<std::size_t>(i)] = CD(std::cos(phase), std::sin(phase));
  }
  return y;
}

void add_tone(std::vector<CD>& buf, Eigen::Index begin, Eigen::Index len, double amp,
              double offset_hz, double fs_hz, double phase0) {
  for (Eigen::Index i = 0; i < len; ++i) {
    const double ph = phase0 + 2.0 * pi * offset_hz * static_cast<double>(begin + i) / fs_hz;
    buf[static_cast<std::size_t>(begin + i)] += amp * CD(std::cos(ph), std::sin(ph));
  }
}

/// WiFi-like wideband bursts plus Bluetooth-like 1 MHz hopping bursts
/// filling the whole window with intermittent activity.
std::vector<CD> noise_mix(Eigen::Index len, const EmitterProfile& p, double fs_hz, Rng& rng) {
  std::vector<CD> out(static_cast<std::size_t>(len), CD{0.0, 0.0});
  const int n_wifi = 1 + static_cast<int>(rng.below(2));
  for (int b = 0; b < n_wifi; ++b) {
    const auto dur = static_cast<Eigen::Index>(rng.uniform(0.2e-3, 1.0e-3) * fs_hz);
    const Eigen::Index L = std::min(dur, len);
    const Eigen::Index start = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(len - L + 1)));
    const double off = (static_cast<double>(rng.below(3)) - 1.0) * 1e6;
    auto burst = band_noise(L, p.bandwidth_hz, fs_hz, rng);
    for (Eigen::Index i = 0; i < L; ++i) {
      const double ph = 2.0 * pi * off * static_cast<double>(start + i) / fs_hz;
      out[static_cast<std::size_t>(start + i)] += burst[static_cast<std::size_t>(i)] * CD(std::cos(ph), std::sin(ph));
    }
  }
  const int n_bt = 2 + static_cast<int>(rng.below(4));
  EmitterProfile bt;
  bt.symbol_rate_hz = 1e6;
  bt.freq_deviation_hz = 250e3;
  bt.fsk_levels = 2;
  for (int b = 0; b < n_bt; ++b) {
    const auto dur = static_cast<Eigen::Index>(rng.uniform(0.1e-3, 0.4e-3) * fs_hz);
    const Eigen::Index L = std::min(dur, len);
    const Eigen::Index start = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(len - L + 1)));
    const double off = (static_cast<double>(rng.below(13)) - 6.0) * 1e6;
    auto hop = cpfsk(L, 0, off, bt, fs_hz, rng);
    for (Eigen::Index i = 0; i < L; ++i)
      out[static_cast<std::size_t>(start + i)] += hop[static_cast<std::size_t>(i)];
  }
  return out;
}

/// Half-width of the occupied band around the channel offset.
double occupied_halfwidth(const EmitterProfile& p) {
  if (p.modulation == Modulation::CpFsk) return p.freq_deviation_hz + p.symbol_rate_hz;
  return p.bandwidth_hz / 2.0;
}

}  // namespace

IQWindow synth_burst(const EmitterProfile& profile, const ChannelSpec& channel,
                     const WindowSpec& spec, std::uint64_t seed, const SynthOptions& options) {
  profile.validate();
  require(spec.length == kWindowLength && spec.sample_rate_hz == kSampleRateHz,
          "synth_burst: window spec must be 16384 samples at 14 MHz");
  require(options.min_burst_fill > 0.0 && options.min_burst_fill <= 1.0,
          "synth_burst: min_burst_fill out of range");
  require(channel.path_loss >= 0.0, "synth_burst: path loss must be nonnegative");
  require(std::isfinite(channel.gain.real()) && std::isfinite(channel.gain.imag()),
          "synth_burst: channel gain must be finite");

  const double fs = spec.sample_rate_hz;
  const Eigen::Index len = spec.length;
  const double base_offset = profile.center_freq_hz - channel.receiver_center_hz;

  if (profile.modulation != Modulation::NoiseMix) {
    for (int k : profile.channel_indices) {
      const double off = base_offset + k * profile.channel_spacing_hz;
      require_config(std::abs(off) + occupied_halfwidth(profile) < fs / 2.0,
                     "synth_burst: emitter " + profile.label + " channel k=" +
                         std::to_string(k) + " falls outside the Nyquist band");
    }
  }

  Rng rng(derive_seed(seed));
  IQWindow w;
  w.sample_rate_hz = fs;
  w.label = profile.label;
  w.seed = seed;

  std::vector<CD> buf(static_cast<std::size_t>(len), CD{0.0, 0.0});

  if (profile.modulation == Modulation::NoiseMix) {
    buf = noise_mix(len, profile, fs, rng);
    w.support_begin = 0;
    w.support_len = len;
    w.burst_offset_hz = 0.0;
    w.channel_index = 0;
  } else {
    const int k = profile.channel_indices[rng.below(profile.channel_indices.size())];
    const double offset = base_offset + k * profile.channel_spacing_hz;
    const double duration =
        profile.burst_durations_s[rng.below(profile.burst_durations_s.size())];
    // Repetition interval only matters beyond one window; drawing it keeps
    // profiles with a listed range exercised deterministically.
    (void)rng.uniform(profile.repetition_min_s, profile.repetition_max_s);
    const auto burst_len = static_cast<Eigen::Index>(std::llround(duration * fs));

    Eigen::Index sup_begin = 0, sup_len = 0, burst_pos0 = 0;
    if (burst_len >= len) {
      const double fill = rng.uniform(options.min_burst_fill, 1.0);
      sup_len = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::llround(fill * len)));
      const bool head = rng.bernoulli(0.5);
      sup_begin = (sup_len == len || head) ? 0 : len - sup_len;
      burst_pos0 = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(burst_len - sup_len + 1)));
    } else {
      sup_len = burst_len;
      sup_begin = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(len - burst_len + 1)));
      burst_pos0 = 0;
    }

    std::vector<CD> body;
    if (profile.modulation == Modulation::CpFsk) {
      body = cpfsk(sup_len, burst_pos0, offset, profile, fs, rng);
    } else {
      body = band_noise(sup_len, profile.bandwidth_hz, fs, rng);
      for (Eigen::Index i = 0; i < sup_len; ++i) {
        const double ph = 2.0 * pi * offset * static_cast<double>(sup_begin + i) / fs;
        body[static_cast<std::size_t>(i)] *= CD(std::cos(ph), std::sin(ph));
      }
    }
    // Normalize the modulated part, then blend in the residual carrier.
    double pw = 0.0;
    for (const auto& v : body) pw += std::norm(v);
    pw /= static_cast<double>(sup_len);
    const double mod_scale = pw > 0.0 ? std::sqrt((1.0 - profile.carrier_fraction) / pw) : 0.0;
    for (Eigen::Index i = 0; i < sup_len; ++i)
      buf[static_cast<std::size_t>(sup_begin + i)] = mod_scale * body[static_cast<std::size_t>(i)];
    if (profile.carrier_fraction > 0.0)
      add_tone(buf, sup_begin, sup_len, std::sqrt(profile.carrier_fraction), offset, fs,
               rng.uniform(0.0, 2.0 * pi));

    w.support_begin = sup_begin;
    w.support_len = sup_len;
    w.burst_offset_hz = offset;
    w.channel_index = k;
  }

  // Exactly unit mean power over the on-time, then the channel amplitude.
  double pw = 0.0;
  for (Eigen::Index i = 0; i < w.support_len; ++i)
    pw += std::norm(buf[static_cast<std::size_t>(w.support_begin + i)]);
  pw /= static_cast<double>(w.support_len);
  const CD amp = channel.gain * channel.path_loss * (pw > 0.0 ? 1.0 / std::sqrt(pw) : 0.0);

  w.samples.resize(len);
  for (Eigen::Index i = 0; i < len; ++i) {
    const CD v = buf[static_cast<std::size_t>(i)] * amp;
    w.samples[i] = std::complex<float>(static_cast<float>(v.real()), static_cast<float>(v.imag()));
  }
  return w;
}

}  // namespace uavfl::rfgen
