#pragma once

#include <array>
#include <memory>

#include "uavfl/lsnet/mca.hpp"

namespace uavfl::lsnet {

struct LSNetConfig {
  std::array<int, 3> stage_channels{16, 32, 64};
  std::array<int, 3> stage_depths{3, 4, 6};
  int head_width = 128;
  int num_classes = 7;
  double droppath_max = 0.1;
  int input_channels = 1;
  int expansion = 4;
  int input_size = 128;
  int gn_groups = 4;

  void validate() const {
    require(num_classes >= 2, "lsnet config: need at least 2 classes");
    require(droppath_max >= 0.0 && droppath_max < 1.0, "lsnet config: droppath out of range");
    require(input_channels == 1 || input_channels == 2, "lsnet config: 1 or 2 input channels");
    require(expansion >= 1, "lsnet config: expansion must be >= 1");
    require(input_size > 0 && input_size % 16 == 0,
            "lsnet config: input size must be a positive multiple of 16");
    for (int c : stage_channels) require(c > 0, "lsnet config: bad channel count");
    for (int d : stage_depths) require(d > 0, "lsnet config: bad stage depth");
    require(stage_channels[0] % gn_groups == 0, "lsnet config: groups do not divide channels");
    require(head_width > 0, "lsnet config: bad head width");
  }
};

struct ForwardCtx {
  Mode mode = Mode::Eval;
  Rng* droppath_rng = nullptr;
};

/// Depthwise-separable stem unit: DW 3x3 -> PW 1x1 -> group norm -> GELU.
template <typename S>
class DsUnit {
 public:
  DsUnit(const std::string& name, int channels, int groups)
      : dw_(name + ".dw", channels), pw_(name + ".pw", channels, channels, false),
        gn_(name + ".gn", channels, groups) {}

  void register_params(ParamRegistry<S>& reg) {
    dw_.register_params(reg);
    pw_.register_params(reg);
    gn_.register_params(reg);
  }

  void forward(const Batch<S>& in, Batch<S>& out, const ForwardCtx& ctx) {
    dw_.forward(in, t1_);
    pw_.forward(t1_, t2_);
    gn_.forward(t2_, t3_, ctx.mode);
    out.channels = t3_.channels;
    out.height = t3_.height;
    out.width = t3_.width;
    out.imgs.resize(t3_.imgs.size());
    parallel_images(t3_.size(), [&](int i) {
      gelu_forward(t3_.imgs[static_cast<std::size_t>(i)], out.imgs[static_cast<std::size_t>(i)]);
    });
  }

  void backward(const Batch<S>& in, const Batch<S>& dout, Batch<S>& din) {
    Batch<S> d3;
    d3.channels = dout.channels;
    d3.height = dout.height;
    d3.width = dout.width;
    d3.imgs.resize(dout.imgs.size());
    parallel_images(dout.size(), [&](int i) {
      gelu_backward(t3_.imgs[static_cast<std::size_t>(i)], dout.imgs[static_cast<std::size_t>(i)],
                    d3.imgs[static_cast<std::size_t>(i)]);
    });
    Batch<S> d2, d1;
    gn_.backward(d3, d2);
    pw_.backward(t1_, d2, d1);
    dw_.backward(in, d1, din);
  }

 private:
  DwConv3x3<S> dw_;
  PointwiseConv<S> pw_;
  GroupNorm<S> gn_;
  Batch<S> t1_, t2_, t3_;
};

/// Stem: 3x3 stride-2 convolution then two depthwise-separable units.
template <typename S>
class Stem {
 public:
  Stem(const std::string& name, int cin, int cout, int groups)
      : conv_(name + ".conv", cin, cout, 3, 2, 1, true),
        u1_(name + ".ds1", cout, groups),
        u2_(name + ".ds2", cout, groups) {}

  void register_params(ParamRegistry<S>& reg) {
    conv_.register_params(reg);
    u1_.register_params(reg);
    u2_.register_params(reg);
  }

  void forward(const Batch<S>& in, Batch<S>& out, const ForwardCtx& ctx) {
    conv_.forward(in, c_out_);
    u1_.forward(c_out_, u1_out_, ctx);
    u2_.forward(u1_out_, out, ctx);
  }

  void backward(const Batch<S>& in, const Batch<S>& dout, Batch<S>& din) {
    Batch<S> d2, d1;
    u2_.backward(u1_out_, dout, d2);
    u1_.backward(c_out_, d2, d1);
    conv_.backward(in, d1, din);
  }

 private:
  Conv2d<S> conv_;
  DsUnit<S> u1_, u2_;
  Batch<S> c_out_, u1_out_;
};

/// Stage transition: 3x3 stride-2 convolution followed by batch norm.
template <typename S>
class Downsample {
 public:
  Downsample(const std::string& name, int cin, int cout)
      : conv_(name + ".conv", cin, cout, 3, 2, 1, false), bn_(name + ".bn", cout) {}

  void register_params(ParamRegistry<S>& reg) {
    conv_.register_params(reg);
    bn_.register_params(reg);
  }

  void forward(const Batch<S>& in, Batch<S>& out, const ForwardCtx& ctx) {
    conv_.forward(in, t_);
    bn_.forward(t_, out, ctx.mode);
  }

  void backward(const Batch<S>& in, const Batch<S>& dout, Batch<S>& din) {
    Batch<S> dt;
    bn_.backward(dout, dt);
    conv_.backward(in, dt, din);
  }

 private:
  Conv2d<S> conv_;
  BatchNorm<S> bn_;
  Batch<S> t_;
};

/// Residual attention block:
///   x + DropPath(Conv1x1(GELU(Conv1x1(BN(MCA(DW(x)))))))
/// with the expansion Conv1x1 widening to expansion*C and the projection
/// Conv1x1 zero-initialized so fresh blocks start as the identity.
template <typename S>
class McacBlock {
 public:
  McacBlock(const std::string& name, int channels, int height, int width, int expansion,
            double droppath_rate)
      : c_(channels),
        dw_(name + ".dw", channels),
        mca_(name + ".mca", channels, height, width),
        bn_(name + ".bn", channels),
        up_(name + ".up", channels, channels * expansion, true),
        down_(name + ".down", channels * expansion, channels, true, InitKind::Zero),
        droppath_(droppath_rate) {}

  void register_params(ParamRegistry<S>& reg) {
    dw_.register_params(reg);
    mca_.register_params(reg);
    bn_.register_params(reg);
    up_.register_params(reg);
    down_.register_params(reg);
  }

  void forward(const Batch<S>& in, Batch<S>& out, const ForwardCtx& ctx) {
    require(in.channels == c_, "mcac block: channel mismatch");
    dw_.forward(in, t1_);
    mca_.forward(t1_, t2_, ctx.mode);
    bn_.forward(t2_, t3_, ctx.mode);
    up_.forward(t3_, t4_);
    t5_.channels = t4_.channels;
    t5_.height = t4_.height;
    t5_.width = t4_.width;
    t5_.imgs.resize(t4_.imgs.size());
    parallel_images(t4_.size(), [&](int i) {
      gelu_forward(t4_.imgs[static_cast<std::size_t>(i)], t5_.imgs[static_cast<std::size_t>(i)]);
    });
    down_.forward(t5_, t6_);
    droppath_.forward(t6_, t7_, ctx.mode, ctx.droppath_rng);
    out.channels = in.channels;
    out.height = in.height;
    out.width = in.width;
    out.imgs.resize(in.imgs.size());
    parallel_images(in.size(), [&](int i) {
      out.imgs[static_cast<std::size_t>(i)] =
          in.imgs[static_cast<std::size_t>(i)] + t7_.imgs[static_cast<std::size_t>(i)];
    });
  }

  void backward(const Batch<S>& in, const Batch<S>& dout, Batch<S>& din) {
    Batch<S> d6, d5, d4, d3, d2, d1;
    droppath_.backward(dout, d6);
    down_.backward(t5_, d6, d5);
    d4.channels = d5.channels;
    d4.height = d5.height;
    d4.width = d5.width;
    d4.imgs.resize(d5.imgs.size());
    parallel_images(d5.size(), [&](int i) {
      gelu_backward(t4_.imgs[static_cast<std::size_t>(i)], d5.imgs[static_cast<std::size_t>(i)],
                    d4.imgs[static_cast<std::size_t>(i)]);
    });
    up_.backward(t3_, d4, d3);
    bn_.backward(d3, d2);
    mca_.backward(t1_, d2, d1);
    dw_.backward(in, d1, din);
    parallel_images(dout.size(), [&](int i) {
      din.imgs[static_cast<std::size_t>(i)] += dout.imgs[static_cast<std::size_t>(i)];
    });
  }

  Mca<S>& mca() { return mca_; }
  double droppath_rate() const { return droppath_.rate(); }

 private:
  int c_;
  DwConv3x3<S> dw_;
  Mca<S> mca_;
  BatchNorm<S> bn_;
  PointwiseConv<S> up_, down_;
  DropPath<S> droppath_;
  Batch<S> t1_, t2_, t3_, t4_, t5_, t6_, t7_;
};

/// Classifier head: GAP -> 1x1 projection -> GELU -> fully connected.
template <typename S>
class Head {
 public:
  Head(const std::string& name, int cin, int width, int classes)
      : proj_(name + ".proj", cin, width, true), fc_(name + ".fc", width, classes, true) {}

  void register_params(ParamRegistry<S>& reg) {
    proj_.register_params(reg);
    fc_.register_params(reg);
  }

  MatX<S> forward(const Batch<S>& in) {
    gap_forward(in, g_);
    proj_.forward(g_, p1_);
    gelu_forward(p1_, p2_);
    MatX<S> logits;
    fc_.forward(p2_, logits);
    return logits;
  }

  void backward(const Batch<S>& in, const MatX<S>& dlogits, Batch<S>& din) {
    MatX<S> dp2, dp1, dg;
    fc_.backward(p2_, dlogits, dp2);
    gelu_backward(p1_, dp2, dp1);
    proj_.backward(g_, dp1, dg);
    gap_backward(in, dg, din);
  }

 private:
  LinearPacked<S> proj_, fc_;
  MatX<S> g_, p1_, p2_;
};

struct TableRow {
  std::string layer;
  int channels, height, width;
};

/// The lightweight spectrogram network: two stems, three stages of
/// residual attention blocks with stride-2 transitions, GAP and a K-way
/// distance-ready logit head. Drop-path rates rise linearly from 0 to
/// droppath_max across the blocks.
template <typename S>
class LSNet {
 public:
  LSNet(const LSNetConfig& cfg, std::uint64_t seed) : cfg_(cfg), build_seed_(seed) {
    cfg.validate();
    const int s = cfg.input_size;
    stem1_ = std::make_unique<Stem<S>>("stem1", cfg.input_channels, cfg.stage_channels[0],
                                       cfg.gn_groups);
    stem2_ = std::make_unique<Stem<S>>("stem2", cfg.stage_channels[0], cfg.stage_channels[0],
                                       cfg.gn_groups);
    const int total_blocks = cfg.stage_depths[0] + cfg.stage_depths[1] + cfg.stage_depths[2];
    int block_index = 0;
    const auto rate = [&](int idx) {
      return total_blocks > 1 ? cfg.droppath_max * idx / (total_blocks - 1) : 0.0;
    };
    int hw = s / 4;
    for (int stage = 0; stage < 3; ++stage) {
      const int c = cfg.stage_channels[static_cast<std::size_t>(stage)];
      for (int bi = 0; bi < cfg.stage_depths[static_cast<std::size_t>(stage)]; ++bi) {
        const std::string name =
            "stage" + std::to_string(stage + 1) + ".block" + std::to_string(bi);
        blocks_.push_back(std::make_unique<McacBlock<S>>(name, c, hw, hw, cfg.expansion,
                                                         rate(block_index++)));
      }
      if (stage < 2) {
        ds_.push_back(std::make_unique<Downsample<S>>(
            "trans" + std::to_string(stage + 1), c,
            cfg.stage_channels[static_cast<std::size_t>(stage) + 1]));
        hw /= 2;
      }
    }
    head_ = std::make_unique<Head<S>>("head", cfg.stage_channels[2], cfg.head_width,
                                      cfg.num_classes);

    stem1_->register_params(registry_);
    stem2_->register_params(registry_);
    std::size_t bidx = 0;
    for (int stage = 0; stage < 3; ++stage) {
      for (int bi = 0; bi < cfg.stage_depths[static_cast<std::size_t>(stage)]; ++bi)
        blocks_[bidx++]->register_params(registry_);
      if (stage < 2) ds_[static_cast<std::size_t>(stage)]->register_params(registry_);
    }
    head_->register_params(registry_);

    for (std::size_t i = 0; i < registry_.size(); ++i) {
      Rng rng(derive_seed(seed, 0x696e6974ull, static_cast<std::uint64_t>(i)));
      registry_[i]->initialize(rng);
    }
  }

  LSNet(const LSNet&) = delete;
  LSNet& operator=(const LSNet&) = delete;

  const LSNetConfig& config() const { return cfg_; }
  std::uint64_t build_seed() const { return build_seed_; }
  const ParamRegistry<S>& params() const { return registry_; }
  ParamRegistry<S>& params() { return registry_; }

  void begin_step(std::uint64_t step_seed) {
    droppath_rng_ = std::make_unique<Rng>(derive_seed(step_seed, 0x64706174ull));
  }

  MatX<S> forward(const Batch<S>& input, Mode mode) {
    require(input.channels == cfg_.input_channels, "lsnet: input channel mismatch");
    require(input.height == cfg_.input_size && input.width == cfg_.input_size,
            "lsnet: input spatial size mismatch");
    require(!input.imgs.empty(), "lsnet: empty batch");
    ForwardCtx ctx{mode, droppath_rng_.get()};
    acts_.assign(unit_count() + 1, Batch<S>());
    acts_[0] = input;
    std::size_t u = 0;
    stem1_->forward(acts_[u], acts_[u + 1], ctx), ++u;
    stem2_->forward(acts_[u], acts_[u + 1], ctx), ++u;
    std::size_t bidx = 0;
    for (int stage = 0; stage < 3; ++stage) {
      for (int bi = 0; bi < cfg_.stage_depths[static_cast<std::size_t>(stage)]; ++bi)
        blocks_[bidx++]->forward(acts_[u], acts_[u + 1], ctx), ++u;
      if (stage < 2) ds_[static_cast<std::size_t>(stage)]->forward(acts_[u], acts_[u + 1], ctx), ++u;
    }
    MatX<S> logits = head_->forward(acts_[u]);
    if (!logits.allFinite()) identify_nonfinite(input, mode);
    return logits;
  }

  void backward(const MatX<S>& dlogits) {
    require(!acts_.empty(), "lsnet: backward without forward");
    Batch<S> grad, next;
    std::size_t u = unit_count();
    head_->backward(acts_[u], dlogits, grad);
    std::size_t bidx = blocks_.size();
    for (int stage = 2; stage >= 0; --stage) {
      if (stage < 2) {
        --u;
        ds_[static_cast<std::size_t>(stage)]->backward(acts_[u], grad, next);
        grad = std::move(next);
      }
      for (int bi = 0; bi < cfg_.stage_depths[static_cast<std::size_t>(stage)]; ++bi) {
        --u;
        blocks_[--bidx]->backward(acts_[u], grad, next);
        grad = std::move(next);
      }
    }
    --u;
    stem2_->backward(acts_[u], grad, next);
    grad = std::move(next);
    --u;
    stem1_->backward(acts_[u], grad, next);
  }

  void zero_grad() {
    for (Param<S>* p : registry_) p->grad.setZero();
  }

  std::int64_t param_count() const {
    std::int64_t n = 0;
    for (const Param<S>* p : registry_)
      if (p->trainable) n += static_cast<std::int64_t>(p->value.size());
    return n;
  }

  std::int64_t state_count() const {
    std::int64_t n = 0;
    for (const Param<S>* p : registry_) n += static_cast<std::int64_t>(p->value.size());
    return n;
  }

  ParameterSet<S> extract() const {
    ParameterSet<S> ps;
    ps.entries.reserve(registry_.size());
    for (const Param<S>* p : registry_) {
      typename ParameterSet<S>::Entry e;
      e.name = p->name;
      e.rows = p->value.rows();
      e.cols = p->value.cols();
      e.trainable = p->trainable;
      e.data.assign(p->value.data(), p->value.data() + p->value.size());
      ps.entries.push_back(std::move(e));
    }
    return ps;
  }

  void load(const ParameterSet<S>& ps) {
    require(ps.entries.size() == registry_.size(), "lsnet load: parameter count mismatch");
    for (std::size_t i = 0; i < registry_.size(); ++i) {
      const auto& e = ps.entries[i];
      Param<S>* p = registry_[i];
      require(e.name == p->name && e.rows == p->value.rows() && e.cols == p->value.cols(),
              "lsnet load: mismatch at " + p->name);
      std::copy(e.data.begin(), e.data.end(), p->value.data());
    }
  }

  /// (layer, C, H, W) after each architecture row, for shape-chain checks.
  std::vector<TableRow> shape_chain() const {
    std::vector<TableRow> rows;
    const int s = cfg_.input_size;
    rows.push_back({"stem1", cfg_.stage_channels[0], s / 2, s / 2});
    rows.push_back({"stem2", cfg_.stage_channels[0], s / 4, s / 4});
    int hw = s / 4;
    for (int stage = 0; stage < 3; ++stage) {
      rows.push_back({"stage" + std::to_string(stage + 1),
                      cfg_.stage_channels[static_cast<std::size_t>(stage)], hw, hw});
      if (stage < 2) {
        hw /= 2;
        rows.push_back({"trans" + std::to_string(stage + 1),
                        cfg_.stage_channels[static_cast<std::size_t>(stage) + 1], hw, hw});
      }
    }
    rows.push_back({"gap", cfg_.stage_channels[2], 1, 1});
    rows.push_back({"proj", cfg_.head_width, 1, 1});
    rows.push_back({"fc", cfg_.num_classes, 1, 1});
    return rows;
  }

  /// Analytic multiply-accumulate count for one forward pass of a single
  /// image (convolution and dense products only).
  static std::int64_t mac_count(const LSNetConfig& cfg) {
    std::int64_t macs = 0;
    const auto conv = [&](int cin, int cout, int k, int ho, int wo) {
      macs += static_cast<std::int64_t>(cin) * cout * k * k * ho * wo;
    };
    int s = cfg.input_size / 2;
    conv(cfg.input_channels, cfg.stage_channels[0], 3, s, s);
    for (int u = 0; u < 2; ++u) {
      conv(1, cfg.stage_channels[0], 3, s, s);  // depthwise
      conv(cfg.stage_channels[0], cfg.stage_channels[0], 1, s, s);
    }
    s /= 2;
    conv(cfg.stage_channels[0], cfg.stage_channels[0], 3, s, s);
    for (int u = 0; u < 2; ++u) {
      conv(1, cfg.stage_channels[0], 3, s, s);
      conv(cfg.stage_channels[0], cfg.stage_channels[0], 1, s, s);
    }
    for (int stage = 0; stage < 3; ++stage) {
      const int c = cfg.stage_channels[static_cast<std::size_t>(stage)];
      for (int b = 0; b < cfg.stage_depths[static_cast<std::size_t>(stage)]; ++b) {
        conv(1, c, 3, s, s);                     // depthwise
        macs += 2 * (static_cast<std::int64_t>(s) * c + static_cast<std::int64_t>(c) * c);  // attention gates
        conv(c, c * cfg.expansion, 1, s, s);
        conv(c * cfg.expansion, c, 1, s, s);
      }
      if (stage < 2) {
        const int cn = cfg.stage_channels[static_cast<std::size_t>(stage) + 1];
        s /= 2;
        conv(c, cn, 3, s, s);
      }
    }
    macs += static_cast<std::int64_t>(cfg.stage_channels[2]) * cfg.head_width;
    macs += static_cast<std::int64_t>(cfg.head_width) * cfg.num_classes;
    return macs;
  }

  McacBlock<S>& block(std::size_t i) { return *blocks_[i]; }
  std::size_t block_count() const { return blocks_.size(); }

 private:
  std::size_t unit_count() const { return 2 + blocks_.size() + ds_.size(); }

  /// Walks the stored activations to name the first unit that produced a
  /// non-finite value.
  void identify_nonfinite(const Batch<S>& input, Mode) {
    std::vector<std::string> names{"stem1", "stem2"};
    for (int stage = 0; stage < 3; ++stage) {
      for (int bi = 0; bi < cfg_.stage_depths[static_cast<std::size_t>(stage)]; ++bi)
        names.push_back("stage" + std::to_string(stage + 1) + ".block" + std::to_string(bi));
      if (stage < 2) names.push_back("trans" + std::to_string(stage + 1));
    }
    if (!input.all_finite()) fail("lsnet: non-finite activation in input batch");
    for (std::size_t u = 0; u + 1 < acts_.size(); ++u)
      if (!acts_[u + 1].all_finite())
        fail("lsnet: non-finite activation after " + names[u]);
    fail("lsnet: non-finite logits in head");
  }

  LSNetConfig cfg_;
  std::uint64_t build_seed_;
  std::unique_ptr<Stem<S>> stem1_, stem2_;
  std::vector<std::unique_ptr<McacBlock<S>>> blocks_;
  std::vector<std::unique_ptr<Downsample<S>>> ds_;
  std::unique_ptr<Head<S>> head_;
  ParamRegistry<S> registry_;
  std::vector<Batch<S>> acts_;
  std::unique_ptr<Rng> droppath_rng_;
};

}  // namespace uavfl::lsnet
