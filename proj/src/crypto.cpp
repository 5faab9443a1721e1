#include "eapfido/crypto.hpp"

#include <cstring>
#include <memory>

#include <openssl/bn.h>
#include <openssl/crypto.h>
#include <openssl/ec.h>
#include <openssl/evp.h>
#include <openssl/kdf.h>
#include <openssl/obj_mac.h>
#include <openssl/rand.h>

#include "eapfido/error.hpp"

namespace eapfido {

namespace {

struct GroupDeleter { void operator()(EC_GROUP* g) const { EC_GROUP_free(g); } };
struct PointDeleter { void operator()(EC_POINT* p) const { EC_POINT_free(p); } };
struct BnDeleter { void operator()(BIGNUM* b) const { BN_clear_free(b); } };
struct BnCtxDeleter { void operator()(BN_CTX* c) const { BN_CTX_free(c); } };
struct PkeyCtxDeleter { void operator()(EVP_PKEY_CTX* c) const { EVP_PKEY_CTX_free(c); } };

using GroupPtr = std::unique_ptr<EC_GROUP, GroupDeleter>;
using PointPtr = std::unique_ptr<EC_POINT, PointDeleter>;
using BnPtr = std::unique_ptr<BIGNUM, BnDeleter>;
using BnCtxPtr = std::unique_ptr<BN_CTX, BnCtxDeleter>;

[[noreturn]] void openssl_failure(const char* what) { throw Error(ErrorCode::kInternal, what); }

const EC_GROUP* p384() {
  static const GroupPtr group(EC_GROUP_new_by_curve_name(NID_secp384r1));
  if (!group) openssl_failure("EC_GROUP_new_by_curve_name");
  return group.get();
}

Bytes public_from_scalar(const BIGNUM* scalar, BN_CTX* ctx) {
  PointPtr point(EC_POINT_new(p384()));
  if (!point || EC_POINT_mul(p384(), point.get(), scalar, nullptr, nullptr, ctx) != 1)
    openssl_failure("EC_POINT_mul");
  Bytes out(kPublicKeySize);
  if (EC_POINT_point2oct(p384(), point.get(), POINT_CONVERSION_UNCOMPRESSED, out.data(),
                         out.size(), ctx) != kPublicKeySize)
    openssl_failure("EC_POINT_point2oct");
  return out;
}

PointPtr parse_point(ByteView encoded, BN_CTX* ctx) {
  if (encoded.size() != kPublicKeySize || encoded[0] != 0x04) return nullptr;
  PointPtr point(EC_POINT_new(p384()));
  if (!point) openssl_failure("EC_POINT_new");
  // oct2point rejects coordinates that are not on the curve.
  if (EC_POINT_oct2point(p384(), point.get(), encoded.data(), encoded.size(), ctx) != 1)
    return nullptr;
  if (EC_POINT_is_at_infinity(p384(), point.get()) ||
      EC_POINT_is_on_curve(p384(), point.get(), ctx) != 1)
    return nullptr;
  return point;
}

}  // namespace

Bytes RandomSource::bytes(std::size_t n) {
  Bytes out(n);
  fill(out);
  return out;
}

void SystemRandom::fill(std::span<std::uint8_t> out) {
  if (out.empty()) return;
  if (RAND_bytes(out.data(), static_cast<int>(out.size())) != 1) openssl_failure("RAND_bytes");
}

RandomSource& system_random() {
  static SystemRandom rng;
  return rng;
}

SeededRandom::SeededRandom(std::uint64_t seed, std::string_view label) {
  for (int i = 7; i >= 0; --i) prefix_.push_back(static_cast<std::uint8_t>(seed >> (8 * i)));
  prefix_.insert(prefix_.end(), label.begin(), label.end());
}

void SeededRandom::fill(std::span<std::uint8_t> out) {
  for (auto& b : out) {
    if (used_ == block_.size()) {
      std::uint8_t ctr[8];
      for (int i = 0; i < 8; ++i) ctr[i] = static_cast<std::uint8_t>(counter_ >> (8 * (7 - i)));
      ++counter_;
      block_ = sha256({prefix_, ctr});
      used_ = 0;
    }
    b = block_[used_++];
  }
}

Digest sha256(ByteView data) { return sha256({data}); }

Digest sha256(std::initializer_list<ByteView> parts) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) openssl_failure("sha256");
  for (auto p : parts)
    if (!p.empty() && EVP_DigestUpdate(ctx.get(), p.data(), p.size()) != 1)
      openssl_failure("sha256");
  Digest out{};
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(ctx.get(), out.data(), &len) != 1 || len != out.size())
    openssl_failure("sha256");
  return out;
}

EcKeyPair EcKeyPair::generate(RandomSource& rng) {
  BnCtxPtr ctx(BN_CTX_new());
  const BIGNUM* order = EC_GROUP_get0_order(p384());
  Bytes candidate(kScalarSize);
  while (true) {
    rng.fill(candidate);
    BnPtr k(BN_bin2bn(candidate.data(), static_cast<int>(candidate.size()), nullptr));
    if (!k) openssl_failure("BN_bin2bn");
    // Rejection sampling keeps the scalar uniform in [1, n).
    if (BN_is_zero(k.get()) || BN_cmp(k.get(), order) >= 0) continue;
    auto pub = public_from_scalar(k.get(), ctx.get());
    return EcKeyPair(std::move(candidate), std::move(pub));
  }
}

EcKeyPair EcKeyPair::from_private(ByteView scalar) {
  if (scalar.size() != kScalarSize) throw Error(ErrorCode::kInvalidArgument, "scalar size");
  BnCtxPtr ctx(BN_CTX_new());
  BnPtr k(BN_bin2bn(scalar.data(), static_cast<int>(scalar.size()), nullptr));
  if (!k) openssl_failure("BN_bin2bn");
  if (BN_is_zero(k.get()) || BN_cmp(k.get(), EC_GROUP_get0_order(p384())) >= 0)
    throw Error(ErrorCode::kInvalidArgument, "scalar out of range");
  auto pub = public_from_scalar(k.get(), ctx.get());
  return EcKeyPair(to_bytes(scalar), std::move(pub));
}

EcKeyPair::~EcKeyPair() {
  if (!scalar_.empty()) OPENSSL_cleanse(scalar_.data(), scalar_.size());
}

Bytes EcKeyPair::derive_shared(ByteView remote) const {
  BnCtxPtr ctx(BN_CTX_new());
  auto point = parse_point(remote, ctx.get());
  if (!point) throw Error(ErrorCode::kInvalidPoint);
  BnPtr k(BN_bin2bn(scalar_.data(), static_cast<int>(scalar_.size()), nullptr));
  if (!k) openssl_failure("BN_bin2bn");
  BN_set_flags(k.get(), BN_FLG_CONSTTIME);

  PointPtr product(EC_POINT_new(p384()));
  if (!product || EC_POINT_mul(p384(), product.get(), nullptr, point.get(), k.get(), ctx.get()) != 1)
    openssl_failure("EC_POINT_mul");
  if (EC_POINT_is_at_infinity(p384(), product.get())) throw Error(ErrorCode::kInvalidPoint);

  BnPtr x(BN_new());
  if (!x || EC_POINT_get_affine_coordinates(p384(), product.get(), x.get(), nullptr, ctx.get()) != 1)
    openssl_failure("EC_POINT_get_affine_coordinates");
  Bytes out(kSharedSecretSize);
  if (BN_bn2binpad(x.get(), out.data(), static_cast<int>(out.size())) != kSharedSecretSize)
    openssl_failure("BN_bn2binpad");
  return out;
}

bool is_valid_public_key(ByteView point) {
  BnCtxPtr ctx(BN_CTX_new());
  return parse_point(point, ctx.get()) != nullptr;
}

Msk derive_msk(ByteView shared_secret) {
  if (shared_secret.empty()) throw Error(ErrorCode::kInvalidArgument, "empty shared secret");
  std::unique_ptr<EVP_PKEY_CTX, PkeyCtxDeleter> ctx(EVP_PKEY_CTX_new_id(EVP_PKEY_HKDF, nullptr));
  Msk out{};
  std::size_t len = out.size();
  if (!ctx || EVP_PKEY_derive_init(ctx.get()) <= 0 ||
      EVP_PKEY_CTX_set_hkdf_md(ctx.get(), EVP_sha256()) <= 0 ||
      EVP_PKEY_CTX_set1_hkdf_key(ctx.get(), shared_secret.data(),
                                 static_cast<int>(shared_secret.size())) <= 0 ||
      EVP_PKEY_CTX_add1_hkdf_info(ctx.get(), reinterpret_cast<const unsigned char*>(kMskInfo.data()),
                                  static_cast<int>(kMskInfo.size())) <= 0 ||
      EVP_PKEY_derive(ctx.get(), out.data(), &len) <= 0 || len != out.size())
    openssl_failure("HKDF");
  return out;
}

Bytes build_session_id(ByteView q_as, ByteView q_sta) {
  const std::uint8_t prefix[] = {kSessionIdPrefix};
  return concat({prefix, q_as, q_sta});
}

Digest client_data_hash(ByteView session_id, ByteView challenge) {
  return sha256({session_id, challenge});
}

Digest cookie_digest(const Msk& msk) { return sha256(msk); }

Digest proof_digest(const Digest& session_cookie, ByteView nonce, const Msk& msk) {
  return sha256({session_cookie, nonce, msk});
}

KeyMaterial KeyMaterial::complete(EcKeyPair local, ByteView remote_public, Role role) {
  KeyMaterial km(std::move(local));
  km.shared = km.local.derive_shared(remote_public);
  km.remote_public = to_bytes(remote_public);
  km.msk = derive_msk(km.shared);
  km.session_id = role == Role::kServer ? build_session_id(km.local.public_key(), remote_public)
                                        : build_session_id(remote_public, km.local.public_key());
  return km;
}

KeyMaterial::~KeyMaterial() {
  if (!shared.empty()) OPENSSL_cleanse(shared.data(), shared.size());
  OPENSSL_cleanse(msk.data(), msk.size());
}

}  // namespace eapfido
