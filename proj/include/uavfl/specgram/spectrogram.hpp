#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "uavfl/rfgen/iq_window.hpp"

namespace uavfl::specgram {

enum class WindowFn { Rect, Hann };

struct StftParams {
  int fft_size = 128;
  int hop = 128;  // non-overlapping frames by default
  WindowFn window = WindowFn::Rect;
  int channels = 1;  // 1 = log-magnitude, 2 = (real, imag) planes
  bool normalize = true;
};

/// Two-sided time-frequency image of one IQ window. Rows are fftshifted
/// frequency bins (DC at row fft_size/2, signed baseband offsets), columns
/// are frames. values holds log(1+|X|) standardized to zero mean and unit
/// variance per image; the statistics used are kept as metadata.
struct Spectrogram {
  Eigen::MatrixXf values;
  Eigen::MatrixXf plane2;  // imag plane when channels == 2 (values = real plane)
  std::vector<double> freq_axis_hz;
  std::vector<double> time_axis_s;
  std::string label;
  std::optional<double> snr_db;
  bool zero_degenerate = false;  // all-zero input; standardization skipped
  double norm_mean = 0.0, norm_std = 1.0;
};

/// STFT -> magnitude -> log(1+m) -> per-image standardization. The
/// 16,384-sample window with fft_size = hop = 128 yields a 128x128 image.
Spectrogram to_spectrogram(const rfgen::IQWindow& iq, const StftParams& params = {});

}  // namespace uavfl::specgram
