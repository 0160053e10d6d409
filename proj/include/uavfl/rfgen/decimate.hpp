#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "uavfl/core/require.hpp"

namespace uavfl::rfgen {

struct Biquad {
  double b0, b1, b2, a1, a2;
};

/// Sample-rate reduction by an integer factor: an 8th-order Chebyshev
/// type I lowpass (0.05 dB ripple, cutoff at 0.8 of the output Nyquist)
/// applied as cascaded biquads, then every factor-th sample kept.
class ChebyDecimator {
 public:
  explicit ChebyDecimator(int factor, int order = 8, double ripple_db = 0.05);

  int factor() const { return factor_; }
  const std::vector<Biquad>& sections() const { return sos_; }

  /// Frequency response of the anti-alias filter at freq_hz for an input
  /// sampled at fs_hz.
  std::complex<double> response(double freq_hz, double fs_hz) const;

  template <typename S>
  Eigen::VectorX<std::complex<S>> apply(const Eigen::VectorX<std::complex<S>>& x) const {
    require(x.size() % factor_ == 0, "decimate: input length not divisible by the factor");
    using CD = std::complex<double>;
    std::vector<CD> buf(static_cast<std::size_t>(x.size()));
    for (Eigen::Index i = 0; i < x.size(); ++i) buf[static_cast<std::size_t>(i)] = CD(x[i]);
    for (const Biquad& s : sos_) {
      CD s1{0.0, 0.0}, s2{0.0, 0.0};
      for (auto& v : buf) {
        const CD in = v;
        const CD out = s.b0 * in + s1;
        s1 = s.b1 * in - s.a1 * out + s2;
        s2 = s.b2 * in - s.a2 * out;
        v = out;
      }
    }
    Eigen::VectorX<std::complex<S>> y(x.size() / factor_);
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const CD v = buf[static_cast<std::size_t>(i * factor_)];
      y[i] = std::complex<S>(static_cast<S>(v.real()), static_cast<S>(v.imag()));
    }
    return y;
  }

 private:
  int factor_;
  std::vector<Biquad> sos_;
};

/// One-shot helper with the canonical 56 MHz -> 14 MHz configuration.
template <typename S>
Eigen::VectorX<std::complex<S>> decimate(const Eigen::VectorX<std::complex<S>>& x,
                                         int factor = 4) {
  return ChebyDecimator(factor).apply(x);
}

}  // namespace uavfl::rfgen
