#include "uavfl/rfgen/decimate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace uavfl::rfgen {

namespace {
using CD = std::complex<double>;
using std::numbers::pi;
}  // namespace

ChebyDecimator::ChebyDecimator(int factor, int order, double ripple_db) : factor_(factor) {
  require(factor >= 2, "decimate: factor must be at least 2");
  require(order >= 2 && order % 2 == 0, "decimate: order must be even and >= 2");
  require(ripple_db > 0.0, "decimate: ripple must be positive");

  // Analog Chebyshev type I prototype (cutoff 1 rad/s).
  const double eps = std::sqrt(std::pow(10.0, ripple_db / 10.0) - 1.0);
  const double mu = std::asinh(1.0 / eps) / order;
  std::vector<CD> poles(static_cast<std::size_t>(order));
  for (int k = 1; k <= order; ++k) {
    const double theta = pi * (2.0 * k - 1.0) / (2.0 * order);
    poles[static_cast<std::size_t>(k - 1)] =
        CD(-std::sinh(mu) * std::sin(theta), std::cosh(mu) * std::cos(theta));
  }
  CD prod{1.0, 0.0};
  for (const CD& p : poles) prod *= -p;
  double gain = prod.real() / std::sqrt(1.0 + eps * eps);  // even order: ripple at DC

  // Pre-warp the digital cutoff (0.8 of the output Nyquist) and scale.
  const double wn = 0.8 / factor;
  const double fs = 2.0;
  const double warped = 2.0 * fs * std::tan(pi * wn / fs);
  for (CD& p : poles) p *= warped;
  gain *= std::pow(warped, order);

  // Bilinear transform; every pole contributes a zero at z = -1.
  const double fs2 = 2.0 * fs;
  std::vector<CD> zpoles(poles.size());
  CD denom{1.0, 0.0};
  for (std::size_t i = 0; i < poles.size(); ++i) {
    zpoles[i] = (fs2 + poles[i]) / (fs2 - poles[i]);
    denom *= fs2 - poles[i];
  }
  double zgain = gain / denom.real();
  require(zgain > 0.0, "decimate: unexpected filter gain sign");

  // Pair conjugate poles into biquads; zeros (z+1)^2 per section; gain
  // spread evenly across sections.
  std::vector<CD> upper;
  for (const CD& p : zpoles)
    if (p.imag() > 0.0) upper.push_back(p);
  require(static_cast<int>(upper.size()) == order / 2, "decimate: conjugate pairing failed");
  std::sort(upper.begin(), upper.end(),
            [](const CD& a, const CD& b) { return std::abs(a) < std::abs(b); });

  const double g = std::pow(zgain, 1.0 / (order / 2));
  sos_.clear();
  for (const CD& p : upper) {
    Biquad s;
    s.b0 = g;
    s.b1 = 2.0 * g;
    s.b2 = g;
    s.a1 = -2.0 * p.real();
    s.a2 = std::norm(p);
    sos_.push_back(s);
  }
}

std::complex<double> ChebyDecimator::response(double freq_hz, double fs_hz) const {
  const double w = 2.0 * pi * freq_hz / fs_hz;
  const CD e1 = std::polar(1.0, -w);
  const CD e2 = std::polar(1.0, -2.0 * w);
  CD h{1.0, 0.0};
  for (const Biquad& s : sos_)
    h *= (s.b0 + s.b1 * e1 + s.b2 * e2) / (1.0 + s.a1 * e1 + s.a2 * e2);
  return h;
}

}  // namespace uavfl::rfgen
