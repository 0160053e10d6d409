#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>

namespace uavfl::fedsim {

using PublicKey = std::array<unsigned char, 32>;
using SecretKey = std::array<unsigned char, 64>;
using Signature = std::array<unsigned char, 64>;
using Digest = std::array<unsigned char, 32>;

struct Keypair {
  PublicKey pub{};
  SecretKey sec{};
};

/// Deterministic Ed25519 keypair derived from a 64-bit seed.
Keypair make_keypair(std::uint64_t seed);

/// Registered client verification keys, persistable as a text file of
/// (client id, public key hex, scheme id) lines.
class KeyRegistry {
 public:
  void add(std::uint32_t client_id, const PublicKey& key);
  bool contains(std::uint32_t client_id) const;
  const PublicKey& lookup(std::uint32_t client_id) const;
  std::size_t size() const { return keys_.size(); }

  void save(const std::filesystem::path& path) const;
  static KeyRegistry load(const std::filesystem::path& path);

 private:
  std::map<std::uint32_t, PublicKey> keys_;
};

Digest sha256(const unsigned char* data, std::size_t len);
Signature sign_digest(const Digest& digest, const SecretKey& sec);
bool verify_digest(const Digest& digest, const Signature& sig, const PublicKey& pub);

std::string to_hex(const unsigned char* data, std::size_t len);

}  // namespace uavfl::fedsim
