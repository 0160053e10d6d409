#include "uavfl/fedsim/update.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <numeric>

static_assert(std::endian::native == std::endian::little,
              "canonical update serialization is little-endian");

namespace uavfl::fedsim {

namespace {
void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}
}  // namespace

std::vector<unsigned char> canonical_bytes(std::uint32_t round, std::uint32_t client_id,
                                           const lsnet::ParameterSet<float>& params) {
  std::vector<std::size_t> order(params.entries.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return params.entries[a].name < params.entries[b].name;
  });

  std::vector<unsigned char> bytes;
  bytes.reserve(64 + params.entries.size() * 64 +
                static_cast<std::size_t>(params.total_values()) * sizeof(float));
  put_u32(bytes, round);
  put_u32(bytes, client_id);
  put_u32(bytes, static_cast<std::uint32_t>(params.entries.size()));
  for (std::size_t idx : order) {
    const auto& e = params.entries[idx];
    put_u32(bytes, static_cast<std::uint32_t>(e.name.size()));
    bytes.insert(bytes.end(), e.name.begin(), e.name.end());
    put_u32(bytes, static_cast<std::uint32_t>(e.rows));
    put_u32(bytes, static_cast<std::uint32_t>(e.cols));
    bytes.push_back(e.trainable ? 1 : 0);
    const auto* raw = reinterpret_cast<const unsigned char*>(e.data.data());
    bytes.insert(bytes.end(), raw, raw + e.data.size() * sizeof(float));
  }
  return bytes;
}

SignedUpdate sign_update(const lsnet::ParameterSet<float>& params, std::uint32_t client_id,
                         std::uint32_t round, const Keypair& keys, std::uint64_t sample_count) {
  SignedUpdate u;
  u.client_id = client_id;
  u.round = round;
  u.params = params;
  u.sample_count = sample_count;
  const auto bytes = canonical_bytes(round, client_id, params);
  u.digest = sha256(bytes.data(), bytes.size());
  u.signature = sign_digest(u.digest, keys.sec);
  return u;
}

Verdict verify_update(const SignedUpdate& update, const KeyRegistry& registry,
                      std::uint32_t expected_round, const lsnet::ParameterSet<float>& global,
                      const VerifyPolicy& policy) {
  if (!registry.contains(update.client_id)) return {false, "unregistered-key"};
  if (!verify_digest(update.digest, update.signature, registry.lookup(update.client_id)))
    return {false, "bad-signature"};
  if (update.round != expected_round) return {false, "round-mismatch"};
  const auto bytes = canonical_bytes(update.round, update.client_id, update.params);
  const Digest recomputed = sha256(bytes.data(), bytes.size());
  if (std::memcmp(recomputed.data(), update.digest.data(), recomputed.size()) != 0)
    return {false, "digest-mismatch"};
  if (!update.params.same_shape(global)) return {false, "shape-mismatch"};
  if (!update.params.all_finite()) return {false, "non-finite"};
  if (policy.norm_bound) {
    const double dist = lsnet::l2_distance(update.params, global);
    if (dist > *policy.norm_bound) return {false, "norm-bound"};
  }
  return {true, "ok"};
}

}  // namespace uavfl::fedsim
