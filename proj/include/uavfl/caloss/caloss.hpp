#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "uavfl/core/require.hpp"

namespace uavfl::caloss {

template <typename S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using VecX = Eigen::Matrix<S, Eigen::Dynamic, 1>;

/// Anchored class centers: column i is alpha * e_i in N-dimensional logit
/// space, so every center sits on its own class axis and all pairwise
/// center distances equal alpha * sqrt(2).
template <typename S>
MatX<S> make_centers(int num_classes, S alpha) {
  require(num_classes >= 2, "make_centers: need at least 2 classes");
  require(alpha > S(0), "make_centers: alpha must be positive");
  return MatX<S>::Identity(num_classes, num_classes) * alpha;
}

/// Euclidean distances from a logit vector to every center column.
template <typename S>
VecX<S> center_distances(const VecX<S>& z, const MatX<S>& centers) {
  require(z.size() == centers.rows(), "center_distances: dimension mismatch");
  return (centers.colwise() - z).colwise().norm().transpose();
}

/// Row-per-sample version: logits (B x N) -> distances (B x N).
template <typename S>
MatX<S> batch_center_distances(const MatX<S>& logits, const MatX<S>& centers) {
  require(logits.cols() == centers.rows(), "batch_center_distances: dimension mismatch");
  const Eigen::Index b = logits.rows(), n = centers.cols();
  MatX<S> d(b, n);
  for (Eigen::Index j = 0; j < n; ++j)
    d.col(j) = (logits.rowwise() - centers.col(j).transpose()).rowwise().norm();
  return d;
}

/// softmin(d)_i = exp(-d_i) / sum_j exp(-d_j); order-reversing counterpart
/// of softmax, computed in shifted form.
template <typename S>
VecX<S> softmin(const VecX<S>& d) {
  const S dmin = d.minCoeff();
  VecX<S> e = (-(d.array() - dmin)).exp();
  return e / e.sum();
}

/// Tuplet term L_T = log(1 + sum_{j != y} exp(d_y - d_j)); evaluated as
/// d_y + logsumexp(-d) which is the -log softmin identity.
template <typename S>
S tuplet_loss(const VecX<S>& d, int y) {
  require(y >= 0 && y < d.size(), "tuplet_loss: label out of range");
  require(d.allFinite(), "tuplet_loss: non-finite distances");
  const S dmin = d.minCoeff();
  const S lse = -dmin + std::log(((-(d.array() - dmin)).exp()).sum());
  return d[y] + lse;
}

/// Anchor term L_A = d_y, the distance to the true class center.
template <typename S>
S anchor_loss(const VecX<S>& d, int y) {
  require(y >= 0 && y < d.size(), "anchor_loss: label out of range");
  return d[y];
}

/// Class anchor loss L_CA = L_T + lambda * L_A.
template <typename S>
S ca_loss(const VecX<S>& d, int y, S lambda) {
  return tuplet_loss(d, y) + lambda * anchor_loss(d, y);
}

/// Gradient of L_CA with respect to the distance vector:
///   dL/dd = onehot(y) - softmin(d) + lambda * onehot(y).
template <typename S>
VecX<S> ca_loss_grad_d(const VecX<S>& d, int y, S lambda) {
  VecX<S> g = -softmin(d);
  g[y] += S(1) + lambda;
  return g;
}

/// Mean CA loss over a batch of logit rows; optionally fills the gradient
/// with respect to the logits. d_i = ||z - c_i|| is non-differentiable at
/// z = c_i; the subgradient 0 is used there.
template <typename S>
S ca_loss_batch(const MatX<S>& logits, const std::vector<int>& labels, const MatX<S>& centers,
                S lambda, MatX<S>* dlogits = nullptr) {
  const Eigen::Index b = logits.rows();
  require(static_cast<Eigen::Index>(labels.size()) == b, "ca_loss_batch: label count mismatch");
  if (dlogits) dlogits->setZero(logits.rows(), logits.cols());
  constexpr S kTiny = std::numeric_limits<S>::epsilon();
  S total = S(0);
  for (Eigen::Index i = 0; i < b; ++i) {
    const VecX<S> z = logits.row(i).transpose();
    const VecX<S> d = center_distances(z, centers);
    total += ca_loss(d, labels[static_cast<std::size_t>(i)], lambda);
    if (!dlogits) continue;
    const VecX<S> gd = ca_loss_grad_d(d, labels[static_cast<std::size_t>(i)], lambda);
    VecX<S> gz = VecX<S>::Zero(z.size());
    for (Eigen::Index j = 0; j < d.size(); ++j) {
      if (d[j] <= kTiny) continue;  // subgradient 0 at the center itself
      gz += (gd[j] / d[j]) * (z - centers.col(j));
    }
    dlogits->row(i) = gz.transpose() / S(b);
  }
  return total / S(b);
}

enum class ScoreKind { MinDistance, SoftminProb };

/// Open-set decision for one logit vector: the predicted class is the
/// nearest center (ties -> lowest index) and the rejection score grows
/// with distance from all centers.
struct OpenSetDecision {
  int cls = 0;
  double score = 0.0;                // higher = more likely unknown
  std::optional<bool> unknown;       // set only when a threshold is given
};

template <typename S>
OpenSetDecision predict_and_score(const VecX<S>& z, const MatX<S>& centers,
                                  std::optional<double> threshold = std::nullopt,
                                  ScoreKind kind = ScoreKind::MinDistance) {
  const VecX<S> d = center_distances(z, centers);
  OpenSetDecision out;
  S best = d[0];
  for (Eigen::Index i = 1; i < d.size(); ++i)
    if (d[i] < best) {
      best = d[i];
      out.cls = static_cast<int>(i);
    }
  if (kind == ScoreKind::MinDistance) {
    out.score = static_cast<double>(best);
  } else {
    out.score = 1.0 - static_cast<double>(softmin(d).maxCoeff());
  }
  if (threshold) out.unknown = out.score > *threshold;
  return out;
}

}  // namespace uavfl::caloss
