#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "uavfl/core/require.hpp"
#include "uavfl/core/rng.hpp"
#include "uavfl/lsnet/batch.hpp"

namespace uavfl::lsnet {

enum class InitKind { TruncNormalFanIn, Zero, One };

template <typename S>
struct Param {
  std::string name;
  MatX<S> value, grad;
  bool trainable = true;
  InitKind init = InitKind::Zero;
  double fan_in = 1.0;

  void setup(std::string n, Eigen::Index rows, Eigen::Index cols, InitKind kind,
             double fan = 1.0, bool train = true) {
    name = std::move(n);
    value.setZero(rows, cols);
    grad.setZero(rows, cols);
    trainable = train;
    init = kind;
    fan_in = fan;
  }

  void initialize(Rng& rng) {
    switch (init) {
      case InitKind::Zero:
        value.setZero();
        break;
      case InitKind::One:
        value.setOnes();
        break;
      case InitKind::TruncNormalFanIn: {
        const double sd = std::sqrt(2.0 / fan_in);
        for (Eigen::Index i = 0; i < value.size(); ++i)
          value.data()[i] = static_cast<S>(rng.trunc_normal(sd));
        break;
      }
    }
  }
};

template <typename S>
using ParamRegistry = std::vector<Param<S>*>;

/// Flat, ordered copy of a model's named parameter arrays; the interchange
/// format between training, aggregation, signing and checkpoints.
template <typename S>
struct ParameterSet {
  struct Entry {
    std::string name;
    Eigen::Index rows = 0, cols = 0;
    std::vector<S> data;  // column-major
    bool trainable = true;
  };
  std::vector<Entry> entries;

  std::int64_t total_values() const {
    std::int64_t n = 0;
    for (const auto& e : entries) n += static_cast<std::int64_t>(e.data.size());
    return n;
  }

  bool all_finite() const {
    for (const auto& e : entries)
      for (S v : e.data)
        if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  bool same_shape(const ParameterSet& other) const {
    if (entries.size() != other.entries.size()) return false;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto& a = entries[i];
      const auto& b = other.entries[i];
      if (a.name != b.name || a.rows != b.rows || a.cols != b.cols) return false;
    }
    return true;
  }
};

template <typename S>
double l2_distance(const ParameterSet<S>& a, const ParameterSet<S>& b) {
  require(a.same_shape(b), "l2_distance: parameter sets differ in shape");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.entries.size(); ++i)
    for (std::size_t j = 0; j < a.entries[i].data.size(); ++j) {
      const double d = static_cast<double>(a.entries[i].data[j]) -
                       static_cast<double>(b.entries[i].data[j]);
      acc += d * d;
    }
  return std::sqrt(acc);
}

template <typename S>
double l2_norm(const ParameterSet<S>& ps) {
  double acc = 0.0;
  for (const auto& e : ps.entries)
    for (S v : e.data) acc += static_cast<double>(v) * static_cast<double>(v);
  return std::sqrt(acc);
}

}  // namespace uavfl::lsnet
