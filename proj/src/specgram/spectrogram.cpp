#include "uavfl/specgram/spectrogram.hpp"

#include <cmath>
#include <numbers>
#include <unsupported/Eigen/FFT>

#include "uavfl/core/require.hpp"

namespace uavfl::specgram {

namespace {

void standardize(Eigen::MatrixXf& m, double* mean_out, double* std_out) {
  const double n = static_cast<double>(m.size());
  const double mean = m.cast<double>().sum() / n;
  const double var = (m.cast<double>().array() - mean).square().sum() / n;
  const double sd = std::sqrt(var);
  m = ((m.cast<double>().array() - mean) / sd).cast<float>();
  *mean_out = mean;
  *std_out = sd;
}

}  // namespace

Spectrogram to_spectrogram(const rfgen::IQWindow& iq, const StftParams& params) {
  const int nfft = params.fft_size;
  const int hop = params.hop;
  require(nfft > 0 && hop > 0, "to_spectrogram: bad STFT parameters");
  require(params.channels == 1 || params.channels == 2,
          "to_spectrogram: channels must be 1 or 2");
  const Eigen::Index len = iq.samples.size();
  require(len >= nfft && (len - nfft) % hop == 0,
          "to_spectrogram: window length does not tile into frames");
  require(rfgen::all_finite(iq.samples), "to_spectrogram: non-finite input");
  const int frames = static_cast<int>((len - nfft) / hop) + 1;

  std::vector<float> win(static_cast<std::size_t>(nfft), 1.0f);
  if (params.window == WindowFn::Hann)
    for (int n = 0; n < nfft; ++n)
      win[static_cast<std::size_t>(n)] = static_cast<float>(
          0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / nfft));

  Spectrogram sg;
  sg.label = iq.label;
  sg.snr_db = iq.snr_db;
  sg.values.resize(nfft, frames);
  if (params.channels == 2) sg.plane2.resize(nfft, frames);

  Eigen::FFT<float> fft;
  std::vector<std::complex<float>> frame(static_cast<std::size_t>(nfft));
  std::vector<std::complex<float>> spec(static_cast<std::size_t>(nfft));
  const int half = nfft / 2;
  for (int m = 0; m < frames; ++m) {
    for (int n = 0; n < nfft; ++n)
      frame[static_cast<std::size_t>(n)] =
          iq.samples[static_cast<Eigen::Index>(m) * hop + n] * win[static_cast<std::size_t>(n)];
    fft.fwd(spec, frame);
    for (int b = 0; b < nfft; ++b) {
      // fftshift: output row b holds input bin (b + half) mod nfft so that
      // DC lands at row nfft/2 and rows carry signed offsets.
      const int src = (b + half) % nfft;
      const std::complex<float> v = spec[static_cast<std::size_t>(src)];
      if (params.channels == 1) {
        sg.values(b, m) = std::log1p(std::abs(v));
      } else {
        sg.values(b, m) = v.real();
        sg.plane2(b, m) = v.imag();
      }
    }
  }

  sg.freq_axis_hz.resize(static_cast<std::size_t>(nfft));
  for (int b = 0; b < nfft; ++b)
    sg.freq_axis_hz[static_cast<std::size_t>(b)] = (b - half) * iq.sample_rate_hz / nfft;
  sg.time_axis_s.resize(static_cast<std::size_t>(frames));
  for (int m = 0; m < frames; ++m)
    sg.time_axis_s[static_cast<std::size_t>(m)] =
        (static_cast<double>(m) * hop + nfft / 2.0) / iq.sample_rate_hz;

  const bool all_zero = (iq.samples.array() == std::complex<float>(0.0f, 0.0f)).all();
  if (all_zero) {
    // Degenerate window: leave the image at exact zero instead of 0/0.
    sg.zero_degenerate = true;
    if (params.channels == 2) sg.plane2.setZero();
    sg.values.setZero();
    return sg;
  }
  if (params.normalize) {
    standardize(sg.values, &sg.norm_mean, &sg.norm_std);
    if (params.channels == 2) {
      double m2, s2;
      standardize(sg.plane2, &m2, &s2);
    }
  }
  return sg;
}

}  // namespace uavfl::specgram
