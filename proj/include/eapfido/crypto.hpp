#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>

#include "eapfido/bytes.hpp"

namespace eapfido {

inline constexpr std::size_t kScalarSize = 48;
inline constexpr std::size_t kPublicKeySize = 97;  // uncompressed SEC1, P-384
inline constexpr std::size_t kSharedSecretSize = 48;
inline constexpr std::size_t kNonceSize = 32;
inline constexpr std::uint8_t kSessionIdPrefix = 0x20;
inline constexpr std::string_view kMskInfo = "EAP-FIDO-MSK";

class RandomSource {
 public:
  virtual ~RandomSource() = default;
  virtual void fill(std::span<std::uint8_t> out) = 0;

  Bytes bytes(std::size_t n);
};

// Operating-system entropy through the OpenSSL DRBG.
class SystemRandom final : public RandomSource {
 public:
  void fill(std::span<std::uint8_t> out) override;
};

RandomSource& system_random();

// Reproducible stream for the scenario harness and tests:
// block_i = SHA-256(seed || label || i). Not for production keys.
class SeededRandom final : public RandomSource {
 public:
  SeededRandom(std::uint64_t seed, std::string_view label);
  void fill(std::span<std::uint8_t> out) override;

 private:
  Bytes prefix_;
  std::uint64_t counter_ = 0;
  Digest block_{};
  std::size_t used_ = sizeof(Digest);
};

Digest sha256(ByteView data);
Digest sha256(std::initializer_list<ByteView> parts);

// P-384 ECDH key pair. The private scalar is wiped on destruction.
class EcKeyPair {
 public:
  static EcKeyPair generate(RandomSource& rng);
  static EcKeyPair from_private(ByteView scalar);

  EcKeyPair(EcKeyPair&&) noexcept = default;
  EcKeyPair& operator=(EcKeyPair&&) noexcept = default;
  EcKeyPair(const EcKeyPair&) = delete;
  EcKeyPair& operator=(const EcKeyPair&) = delete;
  ~EcKeyPair();

  const Bytes& public_key() const { return public_; }
  const Bytes& private_scalar() const { return scalar_; }

  // x-coordinate of scalar * remote. Throws InvalidPoint unless `remote` is
  // a 97-byte uncompressed point on the curve and not the identity.
  Bytes derive_shared(ByteView remote) const;

 private:
  EcKeyPair(Bytes scalar, Bytes pub) : scalar_(std::move(scalar)), public_(std::move(pub)) {}

  Bytes scalar_;
  Bytes public_;
};

bool is_valid_public_key(ByteView point);

// HKDF-SHA-256, empty salt, info "EAP-FIDO-MSK", 64 bytes.
Msk derive_msk(ByteView shared_secret);

Bytes build_session_id(ByteView q_as, ByteView q_sta);
Digest client_data_hash(ByteView session_id, ByteView challenge);
Digest cookie_digest(const Msk& msk);
Digest proof_digest(const Digest& session_cookie, ByteView nonce, const Msk& msk);

enum class Role { kServer, kPeer };

// Per-session ECDH result. Built once the remote public key arrives; the
// Session-Id always orders the server key first whichever side computes it.
struct KeyMaterial {
  EcKeyPair local;
  Bytes remote_public;
  Bytes shared;
  Msk msk{};
  Bytes session_id;

  static KeyMaterial complete(EcKeyPair local, ByteView remote_public, Role role);

  ~KeyMaterial();
  KeyMaterial(KeyMaterial&&) noexcept = default;
  KeyMaterial& operator=(KeyMaterial&&) noexcept = default;

 private:
  explicit KeyMaterial(EcKeyPair k) : local(std::move(k)) {}
};

}  // namespace eapfido
