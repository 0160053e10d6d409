#pragma once

#include <Eigen/Dense>
#include <vector>

namespace uavfl::lsnet {

template <typename S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using VecX = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <typename S>
using RowX = Eigen::Matrix<S, 1, Eigen::Dynamic>;

enum class Mode { Train, Eval };

/// A batch of feature maps. Each image is one (height*width) x channels
/// matrix so that every channel plane is a contiguous column; the flat
/// position index is p = y * width + x.
template <typename S>
struct Batch {
  int channels = 0, height = 0, width = 0;
  std::vector<MatX<S>> imgs;

  int size() const { return static_cast<int>(imgs.size()); }
  Eigen::Index positions() const { return static_cast<Eigen::Index>(height) * width; }

  void resize_like_shape(int b, int c, int h, int w) {
    channels = c;
    height = h;
    width = w;
    imgs.assign(static_cast<std::size_t>(b), MatX<S>::Zero(static_cast<Eigen::Index>(h) * w, c));
  }

  bool all_finite() const {
    for (const auto& m : imgs)
      if (!m.allFinite()) return false;
    return true;
  }
};

/// Deterministic parallel loop over batch images. Work items must be
/// independent; any cross-image reduction is done afterwards in index
/// order so results do not depend on the thread count.
template <class F>
void parallel_images(int n, F&& f) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int i = 0; i < n; ++i) f(i);
}

}  // namespace uavfl::lsnet
