#pragma once

#include "uavfl/lsnet/layers.hpp"

namespace uavfl::lsnet {

/// Multi-channel attention. Four parallel branches over a C x H x W map:
/// the identity, a spatial gate from channel-wise max+avg pooling
/// (BN -> sigmoid, one value per position), and height/width gates from
/// max+avg pooling of the permuted tensor down to an H- (W-) vector that
/// two 1x1 convolutions with batch norm map to a per-channel gate.
/// Output: x + x .* (A_spatial + A_height + A_width), so an all-zero
/// input maps to an all-zero output and each gate lies in (0, 1).
template <typename S>
class Mca {
 public:
  Mca(const std::string& name, int channels, int height, int width)
      : c_(channels),
        h_(height),
        w_(width),
        bn_sp_(name + ".sp_bn", 1),
        conv_h1_(name + ".h_conv1", height, channels, false),
        bn_h1_(name + ".h_bn1", channels),
        conv_h2_(name + ".h_conv2", channels, channels, false),
        bn_h2_(name + ".h_bn2", channels),
        conv_w1_(name + ".w_conv1", width, channels, false),
        bn_w1_(name + ".w_bn1", channels),
        conv_w2_(name + ".w_conv2", channels, channels, false),
        bn_w2_(name + ".w_bn2", channels) {
    require(height == width, name + ": attention convolutions assume square maps");
  }

  void register_params(ParamRegistry<S>& reg) {
    bn_sp_.register_params(reg);
    conv_h1_.register_params(reg);
    bn_h1_.register_params(reg);
    conv_h2_.register_params(reg);
    bn_h2_.register_params(reg);
    conv_w1_.register_params(reg);
    bn_w1_.register_params(reg);
    conv_w2_.register_params(reg);
    bn_w2_.register_params(reg);
  }

  void forward(const Batch<S>& in, Batch<S>& out, Mode mode) {
    require(in.channels == c_ && in.height == h_ && in.width == w_,
            "mca: input shape mismatch");
    const int b = in.size();
    const Eigen::Index p = in.positions();

    // Pooled descriptors, computed per image in parallel.
    sp_raw_.resize_like_shape(b, 1, h_, w_);
    hv_.setZero(b, h_);
    wv_.setZero(b, w_);
    sp_arg_.assign(static_cast<std::size_t>(b), std::vector<int>());
    h_arg_.assign(static_cast<std::size_t>(b), std::vector<Eigen::Index>());
    w_arg_.assign(static_cast<std::size_t>(b), std::vector<Eigen::Index>());
    parallel_images(b, [&](int i) {
      const auto& x = in.imgs[static_cast<std::size_t>(i)];
      auto& sp = sp_raw_.imgs[static_cast<std::size_t>(i)];
      auto& sp_arg = sp_arg_[static_cast<std::size_t>(i)];
      sp_arg.resize(static_cast<std::size_t>(p));
      for (Eigen::Index pos = 0; pos < p; ++pos) {
        S best = x(pos, 0);
        int bc = 0;
        S sum = S(0);
        for (int c = 0; c < c_; ++c) {
          const S v = x(pos, c);
          sum += v;
          if (v > best) {
            best = v;
            bc = c;
          }
        }
        sp(pos, 0) = best + sum / static_cast<S>(c_);
        sp_arg[static_cast<std::size_t>(pos)] = bc;
      }
      auto& ha = h_arg_[static_cast<std::size_t>(i)];
      ha.resize(static_cast<std::size_t>(h_));
      for (int y = 0; y < h_; ++y) {
        S best = x(static_cast<Eigen::Index>(y) * w_, 0);
        Eigen::Index barg = static_cast<Eigen::Index>(y) * w_;
        S sum = S(0);
        for (int c = 0; c < c_; ++c) {
          for (int xx = 0; xx < w_; ++xx) {
            const Eigen::Index pos = static_cast<Eigen::Index>(y) * w_ + xx;
            const S v = x(pos, c);
            sum += v;
            if (v > best) {
              best = v;
              barg = static_cast<Eigen::Index>(c) * p + pos;
            }
          }
        }
        hv_(i, y) = best + sum / static_cast<S>(c_ * w_);
        ha[static_cast<std::size_t>(y)] = barg;
      }
      auto& wa = w_arg_[static_cast<std::size_t>(i)];
      wa.resize(static_cast<std::size_t>(w_));
      for (int xx = 0; xx < w_; ++xx) {
        S best = x(xx, 0);
        Eigen::Index barg = xx;
        S sum = S(0);
        for (int c = 0; c < c_; ++c) {
          for (int y = 0; y < h_; ++y) {
            const Eigen::Index pos = static_cast<Eigen::Index>(y) * w_ + xx;
            const S v = x(pos, c);
            sum += v;
            if (v > best) {
              best = v;
              barg = static_cast<Eigen::Index>(c) * p + pos;
            }
          }
        }
        wv_(i, xx) = best + sum / static_cast<S>(c_ * h_);
        wa[static_cast<std::size_t>(xx)] = barg;
      }
    });

    // Spatial gate: BN over the single-channel map, then sigmoid.
    bn_sp_.forward(sp_raw_, sp_bn_, mode);
    a_sp_.resize(sp_bn_.imgs.size());
    parallel_images(b, [&](int i) {
      a_sp_[static_cast<std::size_t>(i)] =
          (S(1) / (S(1) + (-sp_bn_.imgs[static_cast<std::size_t>(i)].array()).exp())).matrix();
    });

    // Height / width gates: packed GEMMs over the whole batch.
    conv_h1_.forward(hv_, hu_);
    bn_h1_.forward_packed(hu_, ht_, mode);
    conv_h2_.forward(ht_, hr_);
    bn_h2_.forward_packed(hr_, hq_, mode);
    a_h_ = (S(1) / (S(1) + (-hq_.array()).exp())).matrix();

    conv_w1_.forward(wv_, wu_);
    bn_w1_.forward_packed(wu_, wt_, mode);
    conv_w2_.forward(wt_, wr_);
    bn_w2_.forward_packed(wr_, wq_, mode);
    a_w_ = (S(1) / (S(1) + (-wq_.array()).exp())).matrix();

    out.channels = c_;
    out.height = h_;
    out.width = w_;
    out.imgs.resize(in.imgs.size());
    parallel_images(b, [&](int i) {
      const auto& x = in.imgs[static_cast<std::size_t>(i)];
      auto& y = out.imgs[static_cast<std::size_t>(i)];
      y.resize(p, c_);
      const auto& asp = a_sp_[static_cast<std::size_t>(i)];
      for (int c = 0; c < c_; ++c) {
        const S g = S(1) + a_h_(i, c) + a_w_(i, c);
        y.col(c) = x.col(c) * g + (x.col(c).array() * asp.col(0).array()).matrix();
      }
    });
  }

  void backward(const Batch<S>& in, const Batch<S>& dout, Batch<S>& din) {
    const int b = dout.size();
    const Eigen::Index p = in.positions();
    din.channels = c_;
    din.height = h_;
    din.width = w_;
    din.imgs.resize(dout.imgs.size());

    // Direct path plus gate gradients.
    Batch<S> dasp;
    dasp.resize_like_shape(b, 1, h_, w_);
    MatX<S> dahw = MatX<S>::Zero(b, c_);  // dA_h == dA_w elementwise
    parallel_images(b, [&](int i) {
      const auto& x = in.imgs[static_cast<std::size_t>(i)];
      const auto& dy = dout.imgs[static_cast<std::size_t>(i)];
      const auto& asp = a_sp_[static_cast<std::size_t>(i)];
      auto& dx = din.imgs[static_cast<std::size_t>(i)];
      dx.resize(p, c_);
      auto& da = dasp.imgs[static_cast<std::size_t>(i)];
      da.col(0).setZero();
      for (int c = 0; c < c_; ++c) {
        const S g = S(1) + a_h_(i, c) + a_w_(i, c);
        dx.col(c) = dy.col(c) * g + (dy.col(c).array() * asp.col(0).array()).matrix();
        da.col(0) += (dy.col(c).array() * x.col(c).array()).matrix();
        dahw(i, c) = (dy.col(c).array() * x.col(c).array()).sum();
      }
    });

    // Height/width branches (packed); sigmoid -> BN -> conv -> BN -> conv.
    MatX<S> dq = (dahw.array() * a_h_.array() * (S(1) - a_h_.array())).matrix();
    MatX<S> dr, dt, du, dhv;
    bn_h2_.backward_packed(dq, dr);
    conv_h2_.backward(ht_, dr, dt);
    bn_h1_.backward_packed(dt, du);
    conv_h1_.backward(hv_, du, dhv);

    dq = (dahw.array() * a_w_.array() * (S(1) - a_w_.array())).matrix();
    MatX<S> dwv;
    bn_w2_.backward_packed(dq, dr);
    conv_w2_.backward(wt_, dr, dt);
    bn_w1_.backward_packed(dt, du);
    conv_w1_.backward(wv_, du, dwv);

    // Spatial branch: sigmoid -> BN.
    Batch<S> dsp_bn, dsp_raw;
    dsp_bn.channels = 1;
    dsp_bn.height = h_;
    dsp_bn.width = w_;
    dsp_bn.imgs.resize(dasp.imgs.size());
    parallel_images(b, [&](int i) {
      const auto& a = a_sp_[static_cast<std::size_t>(i)];
      dsp_bn.imgs[static_cast<std::size_t>(i)] =
          (dasp.imgs[static_cast<std::size_t>(i)].array() * a.array() * (S(1) - a.array()))
              .matrix();
    });
    bn_sp_.backward(dsp_bn, dsp_raw);

    // Scatter pooled gradients back into din.
    parallel_images(b, [&](int i) {
      auto& dx = din.imgs[static_cast<std::size_t>(i)];
      const auto& dsr = dsp_raw.imgs[static_cast<std::size_t>(i)];
      const auto& sp_arg = sp_arg_[static_cast<std::size_t>(i)];
      const S invc = S(1) / static_cast<S>(c_);
      for (int c = 0; c < c_; ++c)
        dx.col(c) += dsr.col(0) * invc;  // avg part
      for (Eigen::Index pos = 0; pos < p; ++pos)
        dx(pos, sp_arg[static_cast<std::size_t>(pos)]) += dsr(pos, 0);  // max part

      const auto& ha = h_arg_[static_cast<std::size_t>(i)];
      const S invcw = S(1) / static_cast<S>(c_ * w_);
      for (int y = 0; y < h_; ++y) {
        const S g = dhv(i, y);
        for (int c = 0; c < c_; ++c)
          dx.col(c).segment(static_cast<Eigen::Index>(y) * w_, w_).array() += g * invcw;
        const Eigen::Index lin = ha[static_cast<std::size_t>(y)];
        dx(lin % p, static_cast<int>(lin / p)) += g;
      }
      const auto& wa = w_arg_[static_cast<std::size_t>(i)];
      const S invch = S(1) / static_cast<S>(c_ * h_);
      for (int xx = 0; xx < w_; ++xx) {
        const S g = dwv(i, xx);
        for (int c = 0; c < c_; ++c)
          for (int y = 0; y < h_; ++y)
            dx(static_cast<Eigen::Index>(y) * w_ + xx, c) += g * invch;
        const Eigen::Index lin = wa[static_cast<std::size_t>(xx)];
        dx(lin % p, static_cast<int>(lin / p)) += g;
      }
    });
  }

  /// Sum of the three gates for one already-forwarded image; used to test
  /// the (0, 3) bound.
  MatX<S> gate_sum(int image_index) const {
    MatX<S> g(static_cast<Eigen::Index>(h_) * w_, c_);
    const auto& asp = a_sp_[static_cast<std::size_t>(image_index)];
    for (int c = 0; c < c_; ++c)
      g.col(c) = asp.col(0).array() + a_h_(image_index, c) + a_w_(image_index, c);
    return g;
  }

 private:
  int c_, h_, w_;
  BatchNorm<S> bn_sp_;
  LinearPacked<S> conv_h1_;
  BatchNorm<S> bn_h1_;
  LinearPacked<S> conv_h2_;
  BatchNorm<S> bn_h2_;
  LinearPacked<S> conv_w1_;
  BatchNorm<S> bn_w1_;
  LinearPacked<S> conv_w2_;
  BatchNorm<S> bn_w2_;

  // forward caches
  Batch<S> sp_raw_, sp_bn_;
  std::vector<MatX<S>> a_sp_;
  MatX<S> hv_, hu_, ht_, hr_, hq_, a_h_;
  MatX<S> wv_, wu_, wt_, wr_, wq_, a_w_;
  std::vector<std::vector<int>> sp_arg_;
  std::vector<std::vector<Eigen::Index>> h_arg_, w_arg_;
};

}  // namespace uavfl::lsnet
