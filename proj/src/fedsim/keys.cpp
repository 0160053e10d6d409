#include "uavfl/fedsim/keys.hpp"

#include <sodium.h>

#include <cstdio>
#include <fstream>
#include <mutex>

#include "uavfl/core/require.hpp"
#include "uavfl/core/rng.hpp"

namespace uavfl::fedsim {

namespace {
void ensure_sodium() {
  static std::once_flag once;
  std::call_once(once, [] {
    if (sodium_init() < 0) fail("libsodium initialization failed");
  });
}
}  // namespace

Keypair make_keypair(std::uint64_t seed) {
  ensure_sodium();
  std::array<unsigned char, crypto_sign_SEEDBYTES> kseed{};
  Rng rng(derive_seed(seed, 0x6b6579ull));
  for (std::size_t i = 0; i < kseed.size(); i += 8) {
    const std::uint64_t v = rng.next_u64();
    for (std::size_t j = 0; j < 8 && i + j < kseed.size(); ++j)
      kseed[i + j] = static_cast<unsigned char>(v >> (8 * j));
  }
  Keypair kp;
  crypto_sign_seed_keypair(kp.pub.data(), kp.sec.data(), kseed.data());
  return kp;
}

void KeyRegistry::add(std::uint32_t client_id, const PublicKey& key) {
  keys_[client_id] = key;
}

bool KeyRegistry::contains(std::uint32_t client_id) const {
  return keys_.count(client_id) > 0;
}

const PublicKey& KeyRegistry::lookup(std::uint32_t client_id) const {
  auto it = keys_.find(client_id);
  require(it != keys_.end(), "key registry: unknown client " + std::to_string(client_id));
  return it->second;
}

std::string to_hex(const unsigned char* data, std::size_t len) {
  std::string out(len * 2, '0');
  static const char* digits = "0123456789abcdef";
  for (std::size_t i = 0; i < len; ++i) {
    out[2 * i] = digits[data[i] >> 4];
    out[2 * i + 1] = digits[data[i] & 0xf];
  }
  return out;
}

namespace {
bool from_hex(const std::string& text, unsigned char* out, std::size_t len) {
  if (text.size() != 2 * len) return false;
  auto nib = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  for (std::size_t i = 0; i < len; ++i) {
    const int hi = nib(text[2 * i]), lo = nib(text[2 * i + 1]);
    if (hi < 0 || lo < 0) return false;
    out[i] = static_cast<unsigned char>((hi << 4) | lo);
  }
  return true;
}
}  // namespace

void KeyRegistry::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "key registry: cannot open " + path.string());
  for (const auto& [id, key] : keys_)
    out << id << " " << to_hex(key.data(), key.size()) << " ed25519\n";
}

KeyRegistry KeyRegistry::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), "key registry: cannot open " + path.string());
  KeyRegistry reg;
  std::uint32_t id;
  std::string hex, scheme;
  while (in >> id >> hex >> scheme) {
    require(scheme == "ed25519", "key registry: unsupported scheme " + scheme);
    PublicKey key{};
    require(from_hex(hex, key.data(), key.size()), "key registry: bad key encoding");
    reg.add(id, key);
  }
  return reg;
}

Digest sha256(const unsigned char* data, std::size_t len) {
  ensure_sodium();
  Digest d{};
  crypto_hash_sha256(d.data(), data, len);
  return d;
}

Signature sign_digest(const Digest& digest, const SecretKey& sec) {
  ensure_sodium();
  Signature sig{};
  crypto_sign_detached(sig.data(), nullptr, digest.data(), digest.size(), sec.data());
  return sig;
}

bool verify_digest(const Digest& digest, const Signature& sig, const PublicKey& pub) {
  ensure_sodium();
  return crypto_sign_verify_detached(sig.data(), digest.data(), digest.size(), pub.data()) == 0;
}

}  // namespace uavfl::fedsim
