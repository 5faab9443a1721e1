#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "eapfido/bytes.hpp"
#include "eapfido/crypto.hpp"
#include "eapfido/error.hpp"

namespace eapfido {

enum class CredentialAlgorithm { kEd25519 };

std::string_view to_string(CredentialAlgorithm alg);

struct PublicKey {
  CredentialAlgorithm algorithm = CredentialAlgorithm::kEd25519;
  Bytes key;

  bool operator==(const PublicKey&) const = default;
};

inline constexpr std::size_t kAuthDataSize = 37;  // rpIdHash(32) || flags(1) || signCount(4)
inline constexpr std::uint8_t kFlagUserPresent = 0x01;
inline constexpr std::uint8_t kFlagUserVerified = 0x04;
inline constexpr std::size_t kCredentialIdSize = 16;

struct StoredCredential {
  Bytes credential_id;
  std::string rp_id;
  Bytes user_handle;
  Bytes private_key;  // Ed25519 seed
  PublicKey public_key;
  std::uint32_t counter = 0;
  bool discoverable = false;
};

struct AssertionOptions {
  bool up = true;
  bool uv = true;
};

struct Assertion {
  Bytes auth_data;
  Bytes signature;
  Bytes user_handle;
  Bytes credential_id;

  std::uint8_t flags() const { return auth_data.size() > 32 ? auth_data[32] : 0; }
  std::uint32_t counter() const;
};

Bytes ed25519_public_key(ByteView seed);
Bytes ed25519_sign(ByteView seed, ByteView message);
bool ed25519_verify(ByteView public_key, ByteView message, ByteView signature);

Bytes build_auth_data(std::string_view rp_id, std::uint8_t flags, std::uint32_t counter);

// Returns kOk on accept, otherwise kMalformedAuthData, kRpMismatch,
// kFlagsMissing or kBadSignature, checked in that order.
ErrorCode verify_assertion(const PublicKey& public_key, std::string_view rp_id,
                           const Digest& client_data_hash, const Assertion& assertion);

// A software FIDO2 authenticator exposing the CTAP2 subset the method uses.
// One get_assertion runs at a time per instance.
class SoftAuthenticator {
 public:
  explicit SoftAuthenticator(std::string pin, RandomSource& rng = system_random());

  // Independent copy with the same credentials and counters, as a cloned
  // hardware token would have.
  std::unique_ptr<SoftAuthenticator> clone() const;

  StoredCredential make_credential(std::string_view rp_id, ByteView user_handle, bool discoverable);

  // Counter is consumed only when the assertion is produced; failed PIN,
  // missing credentials and declined presence leave state unchanged.
  Assertion get_assertion(std::string_view rp_id, const Digest& client_data_hash,
                          const std::vector<Bytes>& allow_list, AssertionOptions options,
                          std::string_view pin);

  // With the prompt disabled no consent is asked but UP is still reported.
  void set_presence_prompt(bool enabled);
  void set_presence_handler(std::function<bool()> handler);

  std::vector<StoredCredential> credentials() const;
  void import_credential(StoredCredential credential);

  const std::string& pin_for_testing() const { return pin_; }

 private:
  mutable std::mutex mu_;
  std::string pin_;
  RandomSource* rng_;
  std::vector<StoredCredential> credentials_;
  bool presence_prompt_ = true;
  std::function<bool()> presence_handler_;
};

}  // namespace eapfido
