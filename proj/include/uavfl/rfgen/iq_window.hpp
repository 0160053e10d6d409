#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <optional>
#include <string>

namespace uavfl::rfgen {

using CVecF = Eigen::VectorX<std::complex<float>>;
using CVecD = Eigen::VectorX<std::complex<double>>;

/// One fixed-length complex-baseband window plus its metadata. The
/// canonical dataset window is 16,384 samples at 14 MHz (about 1.17 ms).
struct IQWindow {
  CVecF samples;
  double sample_rate_hz = 14e6;
  std::optional<double> snr_db;  // nullopt = clean (no noise mixed in)
  std::string label;
  std::uint64_t seed = 0;

  // Synthesis metadata (kept for tests and reports).
  double burst_offset_hz = 0.0;               // chosen baseband channel offset
  int channel_index = 0;                      // chosen k
  Eigen::Index support_begin = 0, support_len = 0;  // burst on-time inside the window
};

inline constexpr Eigen::Index kWindowLength = 16384;
inline constexpr double kSampleRateHz = 14e6;

template <typename Derived>
double mean_power(const Eigen::MatrixBase<Derived>& v) {
  if (v.size() == 0) return 0.0;
  return v.derived().template cast<std::complex<double>>().squaredNorm() /
         static_cast<double>(v.size());
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const auto c = v.derived()[i];
    if (!std::isfinite(static_cast<double>(c.real())) ||
        !std::isfinite(static_cast<double>(c.imag())))
      return false;
  }
  return true;
}

}  // namespace uavfl::rfgen
