#pragma once

#include <unsupported/Eigen/SpecialFunctions>

#include "uavfl/core/require.hpp"
#include "uavfl/lsnet/param.hpp"

namespace uavfl::lsnet {

// ---------------------------------------------------------------------------
// GELU (exact erf form), usable on any matrix shape.

template <typename S>
void gelu_forward(const MatX<S>& x, MatX<S>& y) {
  const S inv_sqrt2 = S(0.7071067811865475);
  y = (x.array() * S(0.5) * (S(1) + (x.array() * inv_sqrt2).erf())).matrix();
}

template <typename S>
void gelu_backward(const MatX<S>& x, const MatX<S>& dy, MatX<S>& dx) {
  const S inv_sqrt2 = S(0.7071067811865475);
  const S inv_sqrt2pi = S(0.3989422804014327);
  auto phi_cdf = S(0.5) * (S(1) + (x.array() * inv_sqrt2).erf());
  auto phi_pdf = inv_sqrt2pi * (-(x.array().square()) * S(0.5)).exp();
  dx = (dy.array() * (phi_cdf + x.array() * phi_pdf)).matrix();
}

// ---------------------------------------------------------------------------
// im2col / col2im for KxK convolutions on (P x C) images.

template <typename S>
void im2col(const MatX<S>& x, int h, int w, int k, int stride, int pad, MatX<S>& col) {
  const int c = static_cast<int>(x.cols());
  const int ho = (h + 2 * pad - k) / stride + 1;
  const int wo = (w + 2 * pad - k) / stride + 1;
  col.setZero(static_cast<Eigen::Index>(ho) * wo, static_cast<Eigen::Index>(c) * k * k);
  for (int ci = 0; ci < c; ++ci) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const Eigen::Index cc = static_cast<Eigen::Index>(ci) * k * k + ky * k + kx;
        for (int yo = 0; yo < ho; ++yo) {
          const int yi = yo * stride - pad + ky;
          if (yi < 0 || yi >= h) continue;
          // valid xo range for this tap
          int xo0 = 0;
          while (xo0 < wo && xo0 * stride - pad + kx < 0) ++xo0;
          int xo1 = wo;
          while (xo1 > xo0 && (xo1 - 1) * stride - pad + kx >= w) --xo1;
          if (xo1 <= xo0) continue;
          const int n = xo1 - xo0;
          const Eigen::Index dst = static_cast<Eigen::Index>(yo) * wo + xo0;
          const Eigen::Index src =
              static_cast<Eigen::Index>(yi) * w + (xo0 * stride - pad + kx);
          if (stride == 1) {
            col.col(cc).segment(dst, n) = x.col(ci).segment(src, n);
          } else {
            Eigen::Map<const VecX<S>, 0, Eigen::InnerStride<>> m(
                x.col(ci).data() + src, n, Eigen::InnerStride<>(stride));
            col.col(cc).segment(dst, n) = m;
          }
        }
      }
    }
  }
}

template <typename S>
void col2im_add(const MatX<S>& col, int h, int w, int k, int stride, int pad, MatX<S>& x) {
  const int c = static_cast<int>(x.cols());
  const int ho = (h + 2 * pad - k) / stride + 1;
  const int wo = (w + 2 * pad - k) / stride + 1;
  for (int ci = 0; ci < c; ++ci) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const Eigen::Index cc = static_cast<Eigen::Index>(ci) * k * k + ky * k + kx;
        for (int yo = 0; yo < ho; ++yo) {
          const int yi = yo * stride - pad + ky;
          if (yi < 0 || yi >= h) continue;
          int xo0 = 0;
          while (xo0 < wo && xo0 * stride - pad + kx < 0) ++xo0;
          int xo1 = wo;
          while (xo1 > xo0 && (xo1 - 1) * stride - pad + kx >= w) --xo1;
          if (xo1 <= xo0) continue;
          const int n = xo1 - xo0;
          const Eigen::Index src = static_cast<Eigen::Index>(yo) * wo + xo0;
          const Eigen::Index dst =
              static_cast<Eigen::Index>(yi) * w + (xo0 * stride - pad + kx);
          if (stride == 1) {
            x.col(ci).segment(dst, n) += col.col(cc).segment(src, n);
          } else {
            Eigen::Map<VecX<S>, 0, Eigen::InnerStride<>> m(x.col(ci).data() + dst, n,
                                                           Eigen::InnerStride<>(stride));
            m += col.col(cc).segment(src, n);
          }
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// KxK convolution via im2col + GEMM.

template <typename S>
class Conv2d {
 public:
  Conv2d(std::string name, int cin, int cout, int k, int stride, int pad, bool bias)
      : cin_(cin), cout_(cout), k_(k), stride_(stride), pad_(pad), has_bias_(bias) {
    w_.setup(name + ".w", static_cast<Eigen::Index>(cin) * k * k, cout,
             InitKind::TruncNormalFanIn, static_cast<double>(cin) * k * k);
    if (has_bias_) b_.setup(name + ".b", 1, cout, InitKind::Zero);
  }

  void register_params(ParamRegistry<S>& reg) {
    reg.push_back(&w_);
    if (has_bias_) reg.push_back(&b_);
  }

  void forward(const Batch<S>& in, Batch<S>& out) {
    require(in.channels == cin_, w_.name + ": channel mismatch");
    const int ho = (in.height + 2 * pad_ - k_) / stride_ + 1;
    const int wo = (in.width + 2 * pad_ - k_) / stride_ + 1;
    out.channels = cout_;
    out.height = ho;
    out.width = wo;
    out.imgs.resize(in.imgs.size());
    cols_.resize(in.imgs.size());
    parallel_images(in.size(), [&](int i) {
      im2col(in.imgs[static_cast<std::size_t>(i)], in.height, in.width, k_, stride_, pad_,
             cols_[static_cast<std::size_t>(i)]);
      auto& y = out.imgs[static_cast<std::size_t>(i)];
      y.noalias() = cols_[static_cast<std::size_t>(i)] * w_.value;
      if (has_bias_) y.rowwise() += b_.value.row(0);
    });
  }

  void backward(const Batch<S>& in, const Batch<S>& dout, Batch<S>& din) {
    const int b = dout.size();
    din.resize_like_shape(b, cin_, in.height, in.width);
    dw_slots_.assign(static_cast<std::size_t>(b), MatX<S>());
    if (has_bias_) db_slots_.assign(static_cast<std::size_t>(b), MatX<S>());
    parallel_images(b, [&](int i) {
      const auto& dy = dout.imgs[static_cast<std::size_t>(i)];
      const auto& col = cols_[static_cast<std::size_t>(i)];
      dw_slots_[static_cast<std::size_t>(i)].noalias() = col.transpose() * dy;
      if (has_bias_) db_slots_[static_cast<std::size_t>(i)] = dy.colwise().sum();
      MatX<S> dcol(col.rows(), col.cols());
      dcol.noalias() = dy * w_.value.transpose();
      col2im_add(dcol, in.height, in.width, k_, stride_, pad_,
                 din.imgs[static_cast<std::size_t>(i)]);
    });
    for (int i = 0; i < b; ++i) {
      w_.grad += dw_slots_[static_cast<std::size_t>(i)];
      if (has_bias_) b_.grad += db_slots_[static_cast<std::size_t>(i)];
    }
  }

  Param<S>& weight() { return w_; }

 private:
  int cin_, cout_, k_, stride_, pad_;
  bool has_bias_;
  Param<S> w_, b_;
  std::vector<MatX<S>> cols_;
  std::vector<MatX<S>> dw_slots_, db_slots_;
};

// ---------------------------------------------------------------------------
// Depthwise 3x3, stride 1, pad 1: shifted-segment adds per tap with row
// boundary corrections, no materialized im2col.

template <typename S>
class DwConv3x3 {
 public:
  DwConv3x3(std::string name, int channels) : c_(channels) {
    w_.setup(name + ".w", 9, channels, InitKind::TruncNormalFanIn, 9.0);
  }

  void register_params(ParamRegistry<S>& reg) { reg.push_back(&w_); }

  void forward(const Batch<S>& in, Batch<S>& out) {
    require(in.channels == c_, w_.name + ": channel mismatch");
    const int h = in.height, w = in.width;
    out.resize_like_shape(in.size(), c_, h, w);
    parallel_images(in.size(), [&](int i) {
      apply_taps(in.imgs[static_cast<std::size_t>(i)], w_.value,
                 out.imgs[static_cast<std::size_t>(i)], h, w, false);
    });
  }

  void backward(const Batch<S>& in, const Batch<S>& dout, Batch<S>& din) {
    const int b = dout.size();
    const int h = in.height, w = in.width;
    din.resize_like_shape(b, c_, h, w);
    dw_slots_.assign(static_cast<std::size_t>(b), MatX<S>::Zero(9, c_));
    parallel_images(b, [&](int i) {
      // dX: transposed taps
      apply_taps(dout.imgs[static_cast<std::size_t>(i)], w_.value,
                 din.imgs[static_cast<std::size_t>(i)], h, w, true);
      // dW: per-tap correlations
      auto& dws = dw_slots_[static_cast<std::size_t>(i)];
      const auto& x = in.imgs[static_cast<std::size_t>(i)];
      const auto& dy = dout.imgs[static_cast<std::size_t>(i)];
      for (int tap = 0; tap < 9; ++tap) {
        const int dyy = tap / 3 - 1, dxx = tap % 3 - 1;
        const Eigen::Index off = static_cast<Eigen::Index>(dyy) * w + dxx;
        const int r0 = std::max(0, -dyy), r1 = h - std::max(0, dyy);
        const Eigen::Index begin = static_cast<Eigen::Index>(r0) * w + std::max(0, -dxx);
        const Eigen::Index end = static_cast<Eigen::Index>(r1) * w - std::max(0, dxx);
        const Eigen::Index n = end - begin;
        if (n <= 0) continue;
        for (int ci = 0; ci < c_; ++ci) {
          S acc = dy.col(ci).segment(begin, n).dot(x.col(ci).segment(begin + off, n));
          if (dxx == -1) {
            for (int r = r0 + 1; r < r1; ++r) {
              const Eigen::Index p = static_cast<Eigen::Index>(r) * w;
              acc -= dy(p, ci) * x(p + off, ci);
            }
          } else if (dxx == 1) {
            for (int r = r0; r < r1 - 1; ++r) {
              const Eigen::Index p = static_cast<Eigen::Index>(r) * w + (w - 1);
              acc -= dy(p, ci) * x(p + off, ci);
            }
          }
          dws(tap, ci) += acc;
        }
      }
    });
    for (int i = 0; i < b; ++i) w_.grad += dw_slots_[static_cast<std::size_t>(i)];
  }

  Param<S>& weight() { return w_; }

 private:
  // y += taps applied to x (transposed = scatter form used for dX).
  void apply_taps(const MatX<S>& x, const MatX<S>& taps, MatX<S>& y, int h, int w,
                  bool transposed) const {
    for (int tap = 0; tap < 9; ++tap) {
      const int dyy = tap / 3 - 1, dxx = tap % 3 - 1;
      const Eigen::Index off = static_cast<Eigen::Index>(dyy) * w + dxx;
      const int r0 = std::max(0, -dyy), r1 = h - std::max(0, dyy);
      const Eigen::Index begin = static_cast<Eigen::Index>(r0) * w + std::max(0, -dxx);
      const Eigen::Index end = static_cast<Eigen::Index>(r1) * w - std::max(0, dxx);
      const Eigen::Index n = end - begin;
      if (n <= 0) continue;
      for (int ci = 0; ci < c_; ++ci) {
        const S wt = taps(tap, ci);
        if (!transposed) {
          y.col(ci).segment(begin, n) += wt * x.col(ci).segment(begin + off, n);
        } else {
          y.col(ci).segment(begin + off, n) += wt * x.col(ci).segment(begin, n);
        }
        // undo the row-wrap positions the block op wrongly touched
        if (dxx == -1) {
          for (int r = r0 + 1; r < r1; ++r) {
            const Eigen::Index p = static_cast<Eigen::Index>(r) * w;
            if (!transposed)
              y(p, ci) -= wt * x(p + off, ci);
            else
              y(p + off, ci) -= wt * x(p, ci);
          }
        } else if (dxx == 1) {
          for (int r = r0; r < r1 - 1; ++r) {
            const Eigen::Index p = static_cast<Eigen::Index>(r) * w + (w - 1);
            if (!transposed)
              y(p, ci) -= wt * x(p + off, ci);
            else
              y(p + off, ci) -= wt * x(p, ci);
          }
        }
      }
    }
  }

  int c_;
  Param<S> w_;
  std::vector<MatX<S>> dw_slots_;
};

// ---------------------------------------------------------------------------
// 1x1 convolution on (P x C) images: a per-image GEMM.

template <typename S>
class PointwiseConv {
 public:
  PointwiseConv(std::string name, int cin, int cout, bool bias, InitKind kind = InitKind::TruncNormalFanIn)
      : cin_(cin), cout_(cout), has_bias_(bias) {
    w_.setup(name + ".w", cin, cout, kind, cin);
    if (has_bias_) b_.setup(name + ".b", 1, cout, InitKind::Zero);
  }

  void register_params(ParamRegistry<S>& reg) {
    reg.push_back(&w_);
    if (has_bias_) reg.push_back(&b_);
  }

  void forward(const Batch<S>& in, Batch<S>& out) {
    require(in.channels == cin_, w_.name + ": channel mismatch");
    out.channels = cout_;
    out.height = in.height;
    out.width = in.width;
    out.imgs.resize(in.imgs.size());
    parallel_images(in.size(), [&](int i) {
      auto& y = out.imgs[static_cast<std::size_t>(i)];
      y.noalias() = in.imgs[static_cast<std::size_t>(i)] * w_.value;
      if (has_bias_) y.rowwise() += b_.value.row(0);
    });
  }

  void backward(const Batch<S>& in, const Batch<S>& dout, Batch<S>& din) {
    const int b = dout.size();
    din.channels = cin_;
    din.height = in.height;
    din.width = in.width;
    din.imgs.resize(static_cast<std::size_t>(b));
    dw_slots_.assign(static_cast<std::size_t>(b), MatX<S>());
    if (has_bias_) db_slots_.assign(static_cast<std::size_t>(b), MatX<S>());
    parallel_images(b, [&](int i) {
      const auto& dy = dout.imgs[static_cast<std::size_t>(i)];
      dw_slots_[static_cast<std::size_t>(i)].noalias() =
          in.imgs[static_cast<std::size_t>(i)].transpose() * dy;
      if (has_bias_) db_slots_[static_cast<std::size_t>(i)] = dy.colwise().sum();
      din.imgs[static_cast<std::size_t>(i)].noalias() = dy * w_.value.transpose();
    });
    for (int i = 0; i < b; ++i) {
      w_.grad += dw_slots_[static_cast<std::size_t>(i)];
      if (has_bias_) b_.grad += db_slots_[static_cast<std::size_t>(i)];
    }
  }

  Param<S>& weight() { return w_; }

 private:
  int cin_, cout_;
  bool has_bias_;
  Param<S> w_, b_;
  std::vector<MatX<S>> dw_slots_, db_slots_;
};

// ---------------------------------------------------------------------------
// Dense layer on packed (B x F) matrices: the head and the attention
// branch 1x1 convs, where the whole batch is one GEMM.

template <typename S>
class LinearPacked {
 public:
  LinearPacked(std::string name, int fin, int fout, bool bias)
      : fin_(fin), fout_(fout), has_bias_(bias) {
    w_.setup(name + ".w", fin, fout, InitKind::TruncNormalFanIn, fin);
    if (has_bias_) b_.setup(name + ".b", 1, fout, InitKind::Zero);
  }

  void register_params(ParamRegistry<S>& reg) {
    reg.push_back(&w_);
    if (has_bias_) reg.push_back(&b_);
  }

  void forward(const MatX<S>& x, MatX<S>& y) {
    require(x.cols() == fin_, w_.name + ": feature mismatch");
    y.noalias() = x * w_.value;
    if (has_bias_) y.rowwise() += b_.value.row(0);
  }

  void backward(const MatX<S>& x, const MatX<S>& dy, MatX<S>& dx) {
    w_.grad.noalias() += x.transpose() * dy;
    if (has_bias_) b_.grad += dy.colwise().sum();
    dx.noalias() = dy * w_.value.transpose();
  }

  Param<S>& weight() { return w_; }

 private:
  int fin_, fout_;
  bool has_bias_;
  Param<S> w_, b_;
};

// ---------------------------------------------------------------------------
// Batch normalization over (images x positions) per channel, with running
// statistics for inference. Also usable on packed (B x C) matrices.

template <typename S>
class BatchNorm {
 public:
  BatchNorm(std::string name, int features) : c_(features) {
    gamma_.setup(name + ".gamma", 1, features, InitKind::One);
    beta_.setup(name + ".beta", 1, features, InitKind::Zero);
    running_mean_.setup(name + ".running_mean", 1, features, InitKind::Zero, 1.0, false);
    running_var_.setup(name + ".running_var", 1, features, InitKind::One, 1.0, false);
  }

  void register_params(ParamRegistry<S>& reg) {
    reg.push_back(&gamma_);
    reg.push_back(&beta_);
    reg.push_back(&running_mean_);
    reg.push_back(&running_var_);
  }

  void forward(const Batch<S>& in, Batch<S>& out, Mode mode) {
    require(in.channels == c_, gamma_.name + ": channel mismatch");
    out.channels = in.channels;
    out.height = in.height;
    out.width = in.width;
    out.imgs.resize(in.imgs.size());
    const int b = in.size();
    RowX<S> mean(c_), var(c_);
    if (mode == Mode::Train) {
      sum_slots_.assign(static_cast<std::size_t>(b), RowX<S>());
      sq_slots_.assign(static_cast<std::size_t>(b), RowX<S>());
      parallel_images(b, [&](int i) {
        sum_slots_[static_cast<std::size_t>(i)] = in.imgs[static_cast<std::size_t>(i)].colwise().sum();
        sq_slots_[static_cast<std::size_t>(i)] =
            in.imgs[static_cast<std::size_t>(i)].array().square().colwise().sum();
      });
      RowX<S> sum = RowX<S>::Zero(c_), sq = RowX<S>::Zero(c_);
      for (int i = 0; i < b; ++i) {
        sum += sum_slots_[static_cast<std::size_t>(i)];
        sq += sq_slots_[static_cast<std::size_t>(i)];
      }
      count_ = static_cast<double>(b) * static_cast<double>(in.positions());
      mean = sum / static_cast<S>(count_);
      var = (sq / static_cast<S>(count_) - mean.array().square().matrix()).cwiseMax(S(0));
      running_mean_.value = (S(1) - momentum_) * running_mean_.value + momentum_ * mean;
      running_var_.value = (S(1) - momentum_) * running_var_.value + momentum_ * var;
    } else {
      mean = running_mean_.value.row(0);
      var = running_var_.value.row(0);
    }
    invstd_ = (var.array() + eps_).rsqrt().matrix();
    const bool train = mode == Mode::Train;
    if (train) xhat_.resize(in.imgs.size());
    parallel_images(b, [&](int i) {
      MatX<S> xh = in.imgs[static_cast<std::size_t>(i)].rowwise() - mean;
      xh = (xh.array().rowwise() * invstd_.row(0).array()).matrix();
      MatX<S> y = (xh.array().rowwise() * gamma_.value.row(0).array()).matrix();
      y.rowwise() += beta_.value.row(0);
      out.imgs[static_cast<std::size_t>(i)] = std::move(y);
      if (train) xhat_[static_cast<std::size_t>(i)] = std::move(xh);
    });
    last_train_ = train;
  }

  void backward(const Batch<S>& dout, Batch<S>& din) {
    require(last_train_, gamma_.name + ": backward requires a train-mode forward");
    const int b = dout.size();
    din.channels = dout.channels;
    din.height = dout.height;
    din.width = dout.width;
    din.imgs.resize(dout.imgs.size());
    sum_slots_.assign(static_cast<std::size_t>(b), RowX<S>());
    sq_slots_.assign(static_cast<std::size_t>(b), RowX<S>());
    parallel_images(b, [&](int i) {
      const auto& dy = dout.imgs[static_cast<std::size_t>(i)];
      sum_slots_[static_cast<std::size_t>(i)] = dy.colwise().sum();
      sq_slots_[static_cast<std::size_t>(i)] =
          (dy.array() * xhat_[static_cast<std::size_t>(i)].array()).colwise().sum();
    });
    RowX<S> sdy = RowX<S>::Zero(c_), sdyx = RowX<S>::Zero(c_);
    for (int i = 0; i < b; ++i) {
      sdy += sum_slots_[static_cast<std::size_t>(i)];
      sdyx += sq_slots_[static_cast<std::size_t>(i)];
    }
    gamma_.grad += sdyx;
    beta_.grad += sdy;
    const S n = static_cast<S>(count_);
    const RowX<S> scale =
        (gamma_.value.row(0).array() * invstd_.row(0).array() / n).matrix();
    parallel_images(b, [&](int i) {
      const auto& dy = dout.imgs[static_cast<std::size_t>(i)];
      const auto& xh = xhat_[static_cast<std::size_t>(i)];
      MatX<S> t = dy * n;
      t.rowwise() -= sdy;
      t -= (xh.array().rowwise() * sdyx.array()).matrix();
      din.imgs[static_cast<std::size_t>(i)] =
          (t.array().rowwise() * scale.array()).matrix();
    });
  }

  void forward_packed(const MatX<S>& in, MatX<S>& out, Mode mode) {
    Batch<S> bi, bo;
    bi.channels = c_;
    bi.height = 1;
    bi.width = 1;
    // one-row images share the Batch code path
    bi.imgs.resize(static_cast<std::size_t>(in.rows()));
    for (Eigen::Index i = 0; i < in.rows(); ++i) bi.imgs[static_cast<std::size_t>(i)] = in.row(i);
    forward(bi, bo, mode);
    out.resize(in.rows(), in.cols());
    for (Eigen::Index i = 0; i < in.rows(); ++i) out.row(i) = bo.imgs[static_cast<std::size_t>(i)];
  }

  void backward_packed(const MatX<S>& dout, MatX<S>& din) {
    Batch<S> bdo, bdi;
    bdo.channels = c_;
    bdo.height = 1;
    bdo.width = 1;
    bdo.imgs.resize(static_cast<std::size_t>(dout.rows()));
    for (Eigen::Index i = 0; i < dout.rows(); ++i)
      bdo.imgs[static_cast<std::size_t>(i)] = dout.row(i);
    backward(bdo, bdi);
    din.resize(dout.rows(), dout.cols());
    for (Eigen::Index i = 0; i < dout.rows(); ++i)
      din.row(i) = bdi.imgs[static_cast<std::size_t>(i)];
  }

 private:
  int c_;
  S eps_ = S(1e-5), momentum_ = S(0.1);
  Param<S> gamma_, beta_, running_mean_, running_var_;
  std::vector<MatX<S>> xhat_;
  RowX<S> invstd_;
  double count_ = 0;
  bool last_train_ = false;
  std::vector<RowX<S>> sum_slots_, sq_slots_;
};

// ---------------------------------------------------------------------------
// Group normalization: per-image statistics over each channel group.

template <typename S>
class GroupNorm {
 public:
  GroupNorm(std::string name, int channels, int groups) : c_(channels), g_(groups) {
    require(channels % groups == 0, name + ": channels not divisible by groups");
    gamma_.setup(name + ".gamma", 1, channels, InitKind::One);
    beta_.setup(name + ".beta", 1, channels, InitKind::Zero);
  }

  void register_params(ParamRegistry<S>& reg) {
    reg.push_back(&gamma_);
    reg.push_back(&beta_);
  }

  void forward(const Batch<S>& in, Batch<S>& out, Mode) {
    require(in.channels == c_, gamma_.name + ": channel mismatch");
    const int b = in.size();
    const int cg = c_ / g_;
    out.channels = in.channels;
    out.height = in.height;
    out.width = in.width;
    out.imgs.resize(in.imgs.size());
    xhat_.resize(in.imgs.size());
    invstd_.setZero(b, g_);
    parallel_images(b, [&](int i) {
      const auto& x = in.imgs[static_cast<std::size_t>(i)];
      MatX<S> xh(x.rows(), x.cols());
      for (int gi = 0; gi < g_; ++gi) {
        auto blk = x.middleCols(static_cast<Eigen::Index>(gi) * cg, cg);
        const S n = static_cast<S>(blk.size());
        const S mean = blk.sum() / n;
        const S var = std::max(S(0), S(blk.array().square().sum() / n - mean * mean));
        const S inv = S(1) / std::sqrt(var + eps_);
        invstd_(i, gi) = inv;
        xh.middleCols(static_cast<Eigen::Index>(gi) * cg, cg) =
            ((blk.array() - mean) * inv).matrix();
      }
      out.imgs[static_cast<std::size_t>(i)] =
          (xh.array().rowwise() * gamma_.value.row(0).array()).matrix().rowwise() +
          beta_.value.row(0);
      xhat_[static_cast<std::size_t>(i)] = std::move(xh);
    });
  }

  void backward(const Batch<S>& dout, Batch<S>& din) {
    const int b = dout.size();
    const int cg = c_ / g_;
    din.channels = dout.channels;
    din.height = dout.height;
    din.width = dout.width;
    din.imgs.resize(dout.imgs.size());
    dg_slots_.assign(static_cast<std::size_t>(b), RowX<S>::Zero(c_));
    db_slots_.assign(static_cast<std::size_t>(b), RowX<S>::Zero(c_));
    parallel_images(b, [&](int i) {
      const auto& dy = dout.imgs[static_cast<std::size_t>(i)];
      const auto& xh = xhat_[static_cast<std::size_t>(i)];
      dg_slots_[static_cast<std::size_t>(i)] = (dy.array() * xh.array()).colwise().sum();
      db_slots_[static_cast<std::size_t>(i)] = dy.colwise().sum();
      auto& dx = din.imgs[static_cast<std::size_t>(i)];
      dx.resize(dy.rows(), dy.cols());
      for (int gi = 0; gi < g_; ++gi) {
        auto dyb = dy.middleCols(static_cast<Eigen::Index>(gi) * cg, cg);
        auto xhb = xh.middleCols(static_cast<Eigen::Index>(gi) * cg, cg);
        auto gb = gamma_.value.row(0).segment(static_cast<Eigen::Index>(gi) * cg, cg);
        MatX<S> dxh = (dyb.array().rowwise() * gb.array()).matrix();
        const S n = static_cast<S>(dxh.size());
        const S sdxh = dxh.sum();
        const S sdxhx = (dxh.array() * xhb.array()).sum();
        dx.middleCols(static_cast<Eigen::Index>(gi) * cg, cg) =
            ((dxh.array() * n - sdxh - xhb.array() * sdxhx) * (invstd_(i, gi) / n)).matrix();
      }
    });
    for (int i = 0; i < b; ++i) {
      gamma_.grad += dg_slots_[static_cast<std::size_t>(i)];
      beta_.grad += db_slots_[static_cast<std::size_t>(i)];
    }
  }

 private:
  int c_, g_;
  S eps_ = S(1e-5);
  Param<S> gamma_, beta_;
  std::vector<MatX<S>> xhat_;
  MatX<S> invstd_;
  std::vector<RowX<S>> dg_slots_, db_slots_;
};

// ---------------------------------------------------------------------------
// Stochastic depth on the residual branch with survival rescaling.

template <typename S>
class DropPath {
 public:
  explicit DropPath(double rate) : rate_(rate) {}

  double rate() const { return rate_; }

  void forward(const Batch<S>& in, Batch<S>& out, Mode mode, Rng* rng) {
    out.channels = in.channels;
    out.height = in.height;
    out.width = in.width;
    out.imgs.resize(in.imgs.size());
    scales_.resize(in.imgs.size());
    const bool active = mode == Mode::Train && rate_ > 0.0;
    for (int i = 0; i < in.size(); ++i) {
      S s = S(1);
      if (active) {
        require(rng != nullptr, "droppath: missing rng in train mode");
        s = rng->bernoulli(rate_) ? S(0) : S(1.0 / (1.0 - rate_));
      }
      scales_[static_cast<std::size_t>(i)] = s;
    }
    parallel_images(in.size(), [&](int i) {
      out.imgs[static_cast<std::size_t>(i)] =
          in.imgs[static_cast<std::size_t>(i)] * scales_[static_cast<std::size_t>(i)];
    });
  }

  void backward(const Batch<S>& dout, Batch<S>& din) {
    din.channels = dout.channels;
    din.height = dout.height;
    din.width = dout.width;
    din.imgs.resize(dout.imgs.size());
    parallel_images(dout.size(), [&](int i) {
      din.imgs[static_cast<std::size_t>(i)] =
          dout.imgs[static_cast<std::size_t>(i)] * scales_[static_cast<std::size_t>(i)];
    });
  }

 private:
  double rate_;
  std::vector<S> scales_;
};

// ---------------------------------------------------------------------------
// Global average pooling: Batch -> packed (B x C).

template <typename S>
void gap_forward(const Batch<S>& in, MatX<S>& out) {
  out.resize(in.size(), in.channels);
  for (int i = 0; i < in.size(); ++i)
    out.row(i) = in.imgs[static_cast<std::size_t>(i)].colwise().mean();
}

template <typename S>
void gap_backward(const Batch<S>& in, const MatX<S>& dout, Batch<S>& din) {
  din.resize_like_shape(in.size(), in.channels, in.height, in.width);
  const S inv = S(1) / static_cast<S>(in.positions());
  for (int i = 0; i < in.size(); ++i)
    din.imgs[static_cast<std::size_t>(i)].rowwise() = dout.row(i) * inv;
}

}  // namespace uavfl::lsnet
