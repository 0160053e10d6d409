#pragma once

#include <optional>
#include <string>
#include <vector>

#include "uavfl/fedsim/keys.hpp"
#include "uavfl/lsnet/param.hpp"

namespace uavfl::fedsim {

/// A client's full local model submission: parameters, sample count, and
/// the integrity envelope (digest over the canonical serialization of
/// (round, client id, parameters), plus a detached signature).
struct SignedUpdate {
  std::uint32_t client_id = 0;
  std::uint32_t round = 0;
  lsnet::ParameterSet<float> params;
  std::uint64_t sample_count = 0;
  Digest digest{};
  Signature signature{};
};

/// Canonical byte serialization: round and client id as little-endian
/// u32, then every parameter entry in sorted-name order with its shape
/// and raw little-endian float32 payload.
std::vector<unsigned char> canonical_bytes(std::uint32_t round, std::uint32_t client_id,
                                           const lsnet::ParameterSet<float>& params);

SignedUpdate sign_update(const lsnet::ParameterSet<float>& params, std::uint32_t client_id,
                         std::uint32_t round, const Keypair& keys, std::uint64_t sample_count);

struct VerifyPolicy {
  /// Maximum allowed L2 distance between the submitted parameters and the
  /// broadcast global model; unset = unbounded.
  std::optional<double> norm_bound;
};

struct Verdict {
  bool accepted = false;
  std::string reason;  // "ok" or the first failed check
};

/// Zero-trust gate: registered key, valid signature, matching round,
/// recomputed digest, matching shapes, finite values, bounded distance
/// from the broadcast global model. The first failing check names the
/// rejection reason.
Verdict verify_update(const SignedUpdate& update, const KeyRegistry& registry,
                      std::uint32_t expected_round, const lsnet::ParameterSet<float>& global,
                      const VerifyPolicy& policy);

/// Sample-count-weighted FedAvg over accepted updates. Accumulation is in
/// double precision regardless of the parameter scalar type.
template <typename S>
lsnet::ParameterSet<S> aggregate(const std::vector<const lsnet::ParameterSet<S>*>& updates,
                                 const std::vector<double>& weights) {
  require(!updates.empty(), "aggregate: no accepted updates");
  require(updates.size() == weights.size(), "aggregate: weight count mismatch");
  double wsum = 0.0;
  for (double w : weights) {
    require(w > 0.0, "aggregate: weights must be positive");
    wsum += w;
  }
  for (std::size_t u = 1; u < updates.size(); ++u)
    require(updates[0]->same_shape(*updates[u]), "aggregate: parameter shape mismatch");

  lsnet::ParameterSet<S> out = *updates[0];
  for (std::size_t e = 0; e < out.entries.size(); ++e) {
    auto& data = out.entries[e].data;
    for (std::size_t i = 0; i < data.size(); ++i) {
      double acc = 0.0;
      for (std::size_t u = 0; u < updates.size(); ++u)
        acc += (weights[u] / wsum) *
               static_cast<double>(updates[u]->entries[e].data[i]);
      data[i] = static_cast<S>(acc);
    }
  }
  return out;
}

/// Convenience overload weighting by sample counts.
template <typename S>
lsnet::ParameterSet<S> aggregate_by_samples(
    const std::vector<const lsnet::ParameterSet<S>*>& updates,
    const std::vector<std::uint64_t>& sample_counts) {
  std::vector<double> w(sample_counts.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = static_cast<double>(sample_counts[i]);
  return aggregate(updates, w);
}

}  // namespace uavfl::fedsim
