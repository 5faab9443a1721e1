#include "eapfido/authenticator.hpp"

#include <algorithm>

#include <openssl/evp.h>

namespace eapfido {

namespace {

struct PkeyDeleter { void operator()(EVP_PKEY* k) const { EVP_PKEY_free(k); } };
struct MdCtxDeleter { void operator()(EVP_MD_CTX* c) const { EVP_MD_CTX_free(c); } };
using PkeyPtr = std::unique_ptr<EVP_PKEY, PkeyDeleter>;
using MdCtxPtr = std::unique_ptr<EVP_MD_CTX, MdCtxDeleter>;

constexpr std::size_t kEd25519KeySize = 32;
constexpr std::size_t kEd25519SignatureSize = 64;

PkeyPtr private_key(ByteView seed) {
  if (seed.size() != kEd25519KeySize) throw Error(ErrorCode::kInvalidArgument, "ed25519 seed size");
  PkeyPtr key(EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr, seed.data(), seed.size()));
  if (!key) throw Error(ErrorCode::kInternal, "EVP_PKEY_new_raw_private_key");
  return key;
}

}  // namespace

std::string_view to_string(CredentialAlgorithm alg) {
  switch (alg) {
    case CredentialAlgorithm::kEd25519: return "ed25519";
  }
  return "?";
}

std::uint32_t Assertion::counter() const {
  if (auth_data.size() != kAuthDataSize) return 0;
  return (std::uint32_t{auth_data[33]} << 24) | (std::uint32_t{auth_data[34]} << 16) |
         (std::uint32_t{auth_data[35]} << 8) | std::uint32_t{auth_data[36]};
}

Bytes ed25519_public_key(ByteView seed) {
  auto key = private_key(seed);
  Bytes out(kEd25519KeySize);
  std::size_t len = out.size();
  if (EVP_PKEY_get_raw_public_key(key.get(), out.data(), &len) != 1 || len != out.size())
    throw Error(ErrorCode::kInternal, "EVP_PKEY_get_raw_public_key");
  return out;
}

Bytes ed25519_sign(ByteView seed, ByteView message) {
  auto key = private_key(seed);
  MdCtxPtr ctx(EVP_MD_CTX_new());
  Bytes sig(kEd25519SignatureSize);
  std::size_t len = sig.size();
  if (!ctx || EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr, key.get()) != 1 ||
      EVP_DigestSign(ctx.get(), sig.data(), &len, message.data(), message.size()) != 1 ||
      len != sig.size())
    throw Error(ErrorCode::kInternal, "ed25519 sign");
  return sig;
}

bool ed25519_verify(ByteView public_key, ByteView message, ByteView signature) {
  if (public_key.size() != kEd25519KeySize || signature.size() != kEd25519SignatureSize)
    return false;
  PkeyPtr key(EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr, public_key.data(),
                                          public_key.size()));
  if (!key) return false;
  MdCtxPtr ctx(EVP_MD_CTX_new());
  if (!ctx || EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr, key.get()) != 1)
    return false;
  return EVP_DigestVerify(ctx.get(), signature.data(), signature.size(), message.data(),
                          message.size()) == 1;
}

Bytes build_auth_data(std::string_view rp_id, std::uint8_t flags, std::uint32_t counter) {
  auto rp_hash = sha256(as_bytes(rp_id));
  Bytes out(rp_hash.begin(), rp_hash.end());
  out.push_back(flags);
  out.push_back(static_cast<std::uint8_t>(counter >> 24));
  out.push_back(static_cast<std::uint8_t>(counter >> 16));
  out.push_back(static_cast<std::uint8_t>(counter >> 8));
  out.push_back(static_cast<std::uint8_t>(counter));
  return out;
}

ErrorCode verify_assertion(const PublicKey& public_key, std::string_view rp_id,
                           const Digest& client_data_hash, const Assertion& assertion) {
  if (assertion.auth_data.size() != kAuthDataSize) return ErrorCode::kMalformedAuthData;
  auto rp_hash = sha256(as_bytes(rp_id));
  if (!std::equal(rp_hash.begin(), rp_hash.end(), assertion.auth_data.begin()))
    return ErrorCode::kRpMismatch;
  constexpr std::uint8_t kRequired = kFlagUserPresent | kFlagUserVerified;
  if ((assertion.flags() & kRequired) != kRequired) return ErrorCode::kFlagsMissing;
  switch (public_key.algorithm) {
    case CredentialAlgorithm::kEd25519: {
      auto signed_data = concat({assertion.auth_data, client_data_hash});
      if (!ed25519_verify(public_key.key, signed_data, assertion.signature))
        return ErrorCode::kBadSignature;
      return ErrorCode::kOk;
    }
  }
  return ErrorCode::kBadSignature;
}

SoftAuthenticator::SoftAuthenticator(std::string pin, RandomSource& rng)
    : pin_(std::move(pin)), rng_(&rng) {}

std::unique_ptr<SoftAuthenticator> SoftAuthenticator::clone() const {
  std::lock_guard lock(mu_);
  auto copy = std::make_unique<SoftAuthenticator>(pin_, *rng_);
  copy->credentials_ = credentials_;
  copy->presence_prompt_ = presence_prompt_;
  copy->presence_handler_ = presence_handler_;
  return copy;
}

StoredCredential SoftAuthenticator::make_credential(std::string_view rp_id, ByteView user_handle,
                                                    bool discoverable) {
  if (rp_id.empty()) throw Error(ErrorCode::kInvalidArgument, "empty rp_id");
  std::lock_guard lock(mu_);
  StoredCredential cred;
  do {
    cred.credential_id = rng_->bytes(kCredentialIdSize);
  } while (std::any_of(credentials_.begin(), credentials_.end(), [&](const StoredCredential& c) {
    return c.rp_id == rp_id && c.credential_id == cred.credential_id;
  }));
  cred.rp_id = std::string(rp_id);
  cred.user_handle = to_bytes(user_handle);
  cred.private_key = rng_->bytes(kEd25519KeySize);
  cred.public_key = {CredentialAlgorithm::kEd25519, ed25519_public_key(cred.private_key)};
  cred.counter = 0;
  cred.discoverable = discoverable;
  credentials_.push_back(cred);
  return cred;
}

Assertion SoftAuthenticator::get_assertion(std::string_view rp_id, const Digest& client_data_hash,
                                           const std::vector<Bytes>& allow_list,
                                           AssertionOptions options, std::string_view pin) {
  std::lock_guard lock(mu_);
  if (options.uv && !constant_time_equal(as_bytes(pin), as_bytes(pin_)))
    throw Error(ErrorCode::kPinInvalid);

  StoredCredential* selected = nullptr;
  if (!allow_list.empty()) {
    for (const auto& id : allow_list) {
      auto it = std::find_if(credentials_.begin(), credentials_.end(), [&](const StoredCredential& c) {
        return c.rp_id == rp_id && c.credential_id == id;
      });
      if (it != credentials_.end()) {
        selected = &*it;
        break;
      }
    }
  } else {
    auto it = std::find_if(credentials_.begin(), credentials_.end(), [&](const StoredCredential& c) {
      return c.rp_id == rp_id && c.discoverable;
    });
    if (it != credentials_.end()) selected = &*it;
  }
  if (!selected) throw Error(ErrorCode::kNoCredentials);

  if (options.up && presence_prompt_ && presence_handler_ && !presence_handler_())
    throw Error(ErrorCode::kUserPresenceDenied);

  std::uint8_t flags = 0;
  if (options.up) flags |= kFlagUserPresent;
  if (options.uv) flags |= kFlagUserVerified;
  if (selected->counter == UINT32_MAX) throw Error(ErrorCode::kInternal, "counter exhausted");
  std::uint32_t next = selected->counter + 1;

  Assertion out;
  out.auth_data = build_auth_data(rp_id, flags, next);
  out.signature = ed25519_sign(selected->private_key, concat({out.auth_data, client_data_hash}));
  out.credential_id = selected->credential_id;
  if (allow_list.empty()) out.user_handle = selected->user_handle;
  selected->counter = next;
  return out;
}

void SoftAuthenticator::set_presence_prompt(bool enabled) {
  std::lock_guard lock(mu_);
  presence_prompt_ = enabled;
}

void SoftAuthenticator::set_presence_handler(std::function<bool()> handler) {
  std::lock_guard lock(mu_);
  presence_handler_ = std::move(handler);
}

std::vector<StoredCredential> SoftAuthenticator::credentials() const {
  std::lock_guard lock(mu_);
  return credentials_;
}

void SoftAuthenticator::import_credential(StoredCredential credential) {
  std::lock_guard lock(mu_);
  for (const auto& c : credentials_)
    if (c.rp_id == credential.rp_id && c.credential_id == credential.credential_id)
      throw Error(ErrorCode::kDuplicateCredentialId);
  credentials_.push_back(std::move(credential));
}

}  // namespace eapfido
