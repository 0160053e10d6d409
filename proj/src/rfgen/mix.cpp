#include "uavfl/rfgen/mix.hpp"

#include <cmath>

#include "uavfl/core/require.hpp"
#include "uavfl/core/rng.hpp"

namespace uavfl::rfgen {

IQWindow mix_to_snr(const IQWindow& signal, const IQWindow* interference, double snr_db,
                    std::uint64_t seed) {
  require(signal.samples.size() > 0, "mix_to_snr: empty signal");
  require(all_finite(signal.samples), "mix_to_snr: non-finite signal");
  require(std::isfinite(snr_db), "mix_to_snr: non-finite target SNR");
  if (interference) {
    require(interference->samples.size() == signal.samples.size(),
            "mix_to_snr: interference length mismatch");
    require(interference->sample_rate_hz == signal.sample_rate_hz,
            "mix_to_snr: interference sample rate mismatch");
    require(all_finite(interference->samples), "mix_to_snr: non-finite interference");
  }

  const Eigen::Index n = signal.samples.size();
  const double p_sig = mean_power(signal.samples);
  require(p_sig > 0.0, "mix_to_snr: signal has zero power");

  Rng rng(derive_seed(seed));
  CVecD noise(n);
  const double s = std::numbers::sqrt2 / 2.0;
  for (Eigen::Index i = 0; i < n; ++i)
    noise[i] = std::complex<double>(rng.normal() * s, rng.normal() * s);
  if (interference) noise += interference->samples.cast<std::complex<double>>();

  const double p_noise = noise.squaredNorm() / static_cast<double>(n);
  const double beta = std::sqrt(p_sig / (p_noise * std::pow(10.0, snr_db / 10.0)));

  IQWindow out = signal;
  out.snr_db = snr_db;
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::complex<double> v =
        std::complex<double>(signal.samples[i]) + beta * noise[i];
    out.samples[i] = std::complex<float>(static_cast<float>(v.real()),
                                         static_cast<float>(v.imag()));
  }
  return out;
}

}  // namespace uavfl::rfgen
