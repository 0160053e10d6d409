#pragma once

#include <numeric>

#include "uavfl/caloss/caloss.hpp"
#include "uavfl/lsnet/sgd.hpp"
#include "uavfl/rfgen/dataset.hpp"
#include "uavfl/specgram/spectrogram.hpp"

namespace uavfl::lsnet {

/// Thrown when a training pass produces a non-finite loss; the caller
/// must treat the resulting parameters as unusable.
struct TrainingDiverged : std::runtime_error {
  explicit TrainingDiverged(const std::string& msg) : std::runtime_error(msg) {}
};

/// Model-ready spectrogram tensors: one (H*W x channels) matrix per
/// window plus aligned labels and SNR tags.
struct SpecDataset {
  int channels = 1, height = 128, width = 128;
  std::vector<Eigen::MatrixXf> images;
  std::vector<int> labels;
  std::vector<double> snrs;
  std::vector<std::string> class_names;

  int size() const { return static_cast<int>(images.size()); }
};

/// Converts labeled IQ windows into standardized spectrogram tensors.
inline SpecDataset to_spec_dataset(const rfgen::LabeledDataset& ds,
                                   const specgram::StftParams& params = {}) {
  SpecDataset out;
  out.channels = params.channels;
  out.class_names = ds.classes;
  const int n = static_cast<int>(ds.items.size());
  out.images.resize(static_cast<std::size_t>(n));
  out.labels.resize(static_cast<std::size_t>(n));
  out.snrs.resize(static_cast<std::size_t>(n));
  std::vector<int> heights(static_cast<std::size_t>(n), 0);
  parallel_images(n, [&](int i) {
    const auto& rec = ds.items[static_cast<std::size_t>(i)];
    const specgram::Spectrogram sg = specgram::to_spectrogram(rec.iq, params);
    const Eigen::Index p = static_cast<Eigen::Index>(sg.values.rows()) * sg.values.cols();
    Eigen::MatrixXf img(p, params.channels);
    // rows are frequency bins; flatten frame-major so position = y*W + x
    // with y the frequency row.
    Eigen::MatrixXf t = sg.values.transpose();
    img.col(0) = Eigen::Map<const Eigen::VectorXf>(t.data(), p);
    if (params.channels == 2) {
      Eigen::MatrixXf t2 = sg.plane2.transpose();
      img.col(1) = Eigen::Map<const Eigen::VectorXf>(t2.data(), p);
    }
    out.images[static_cast<std::size_t>(i)] = std::move(img);
    out.labels[static_cast<std::size_t>(i)] = rec.label;
    out.snrs[static_cast<std::size_t>(i)] = rec.iq.snr_db.value_or(0.0);
    heights[static_cast<std::size_t>(i)] = static_cast<int>(sg.values.rows());
  });
  if (n > 0) {
    out.height = heights[0];
    out.width = static_cast<int>(out.images[0].rows()) / out.height;
  }
  return out;
}

/// Per-epoch seed shared by the centralized and federated training paths:
/// both derive batch order and drop-path masks from
/// (train_seed, client_id, global_epoch).
inline std::uint64_t epoch_seed_of(std::uint64_t train_seed, std::uint32_t client_id,
                                   long global_epoch) {
  return derive_seed(train_seed, client_id, static_cast<std::uint64_t>(global_epoch));
}

struct LossConfig {
  double alpha = 0.1;
  double lambda = 0.1;
};

template <typename S>
Batch<S> assemble_batch(const SpecDataset& data, const std::vector<int>& idx) {
  Batch<S> b;
  b.channels = data.channels;
  b.height = data.height;
  b.width = data.width;
  b.imgs.resize(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i)
    b.imgs[i] = data.images[static_cast<std::size_t>(idx[i])].cast<S>();
  return b;
}

/// One seeded pass over the dataset with CA-loss SGD updates; returns the
/// mean per-batch loss.
template <typename S>
double train_epoch(LSNet<S>& model, const SpecDataset& data, const MatX<S>& centers,
                   const LossConfig& loss_cfg, Sgd<S>& opt, int batch_size, long& global_step,
                   std::uint64_t epoch_seed) {
  require(data.size() > 0, "train_epoch: empty dataset");
  require(batch_size > 0, "train_epoch: bad batch size");
  std::vector<int> order(static_cast<std::size_t>(data.size()));
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng(derive_seed(epoch_seed, 0x7368756686ull));
  shuffle_rng.shuffle(order);

  double loss_sum = 0.0;
  int batches = 0;
  for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(batch_size)) {
    const std::size_t take = std::min(static_cast<std::size_t>(batch_size), order.size() - at);
    std::vector<int> idx(order.begin() + static_cast<std::ptrdiff_t>(at),
                         order.begin() + static_cast<std::ptrdiff_t>(at + take));
    Batch<S> input = assemble_batch<S>(data, idx);
    std::vector<int> labels(take);
    for (std::size_t i = 0; i < take; ++i)
      labels[i] = data.labels[static_cast<std::size_t>(idx[i])];

    model.begin_step(derive_seed(epoch_seed, 0x73746570ull, static_cast<std::uint64_t>(batches)));
    const MatX<S> logits = model.forward(input, Mode::Train);
    MatX<S> dlogits;
    const S loss = caloss::ca_loss_batch<S>(logits, labels, centers,
                                            static_cast<S>(loss_cfg.lambda), &dlogits);
    if (!std::isfinite(static_cast<double>(loss)))
      throw TrainingDiverged("train_epoch: non-finite loss");
    model.zero_grad();
    model.backward(dlogits);
    opt.step(global_step);
    ++global_step;
    loss_sum += static_cast<double>(loss);
    ++batches;
  }
  return loss_sum / batches;
}

/// Deterministic eval-mode logits for a whole dataset.
template <typename S>
MatX<S> eval_logits(LSNet<S>& model, const SpecDataset& data, int batch_size = 64) {
  MatX<S> logits(data.size(), model.config().num_classes);
  for (int at = 0; at < data.size(); at += batch_size) {
    const int take = std::min(batch_size, data.size() - at);
    std::vector<int> idx(static_cast<std::size_t>(take));
    std::iota(idx.begin(), idx.end(), at);
    Batch<S> input = assemble_batch<S>(data, idx);
    logits.middleRows(at, take) = model.forward(input, Mode::Eval);
  }
  return logits;
}

}  // namespace uavfl::lsnet
