#include <gtest/gtest.h>

#include <set>

#include "eapfido/crypto.hpp"
#include "eapfido/error.hpp"
#include "kat.hpp"

namespace eapfido {
namespace {

using testing::kat_bytes;

template <std::size_t N>
Bytes b(const std::array<std::uint8_t, N>& a) {
  return Bytes(a.begin(), a.end());
}

TEST(CryptoKat, EcdhP384SharedSecret) {
  auto as = EcKeyPair::from_private(kat_bytes("ecdh_p384", "d_as"));
  auto sta = EcKeyPair::from_private(kat_bytes("ecdh_p384", "d_sta"));
  EXPECT_EQ(as.public_key(), kat_bytes("ecdh_p384", "q_as"));
  EXPECT_EQ(sta.public_key(), kat_bytes("ecdh_p384", "q_sta"));
  EXPECT_EQ(as.derive_shared(sta.public_key()), kat_bytes("ecdh_p384", "shared_x"));
  EXPECT_EQ(sta.derive_shared(as.public_key()), kat_bytes("ecdh_p384", "shared_x"));
}

TEST(CryptoKat, HkdfMsk) {
  EXPECT_EQ(b(derive_msk(kat_bytes("hkdf_msk", "ikm"))), kat_bytes("hkdf_msk", "msk"));
  EXPECT_EQ(b(derive_msk(kat_bytes("ecdh_p384", "shared_x"))), kat_bytes("hkdf_msk", "ecdh_msk"));
}

TEST(CryptoKat, SessionIdAndClientDataHash) {
  auto sid = build_session_id(kat_bytes("ecdh_p384", "q_as"), kat_bytes("ecdh_p384", "q_sta"));
  EXPECT_EQ(sid, kat_bytes("session", "session_id"));
  EXPECT_EQ(b(client_data_hash(sid, kat_bytes("session", "challenge"))),
            kat_bytes("session", "client_data_hash"));
  EXPECT_EQ(b(client_data_hash(Bytes{0x20}, Bytes{0x01})),
            kat_bytes("session", "small_client_data_hash"));
}

TEST(CryptoKat, CookieAndProof) {
  Msk msk;
  auto raw = kat_bytes("hkdf_msk", "ecdh_msk");
  std::copy(raw.begin(), raw.end(), msk.begin());
  auto cookie = cookie_digest(msk);
  EXPECT_EQ(b(cookie), kat_bytes("cookie", "session_cookie"));
  EXPECT_EQ(b(proof_digest(cookie, kat_bytes("cookie", "nonce"), msk)), kat_bytes("cookie", "proof"));

  Msk fixed;
  fixed.fill(0x5a);
  auto fixed_cookie = cookie_digest(fixed);
  EXPECT_EQ(b(fixed_cookie), kat_bytes("cookie", "fixed_cookie"));
  EXPECT_EQ(b(proof_digest(fixed_cookie, kat_bytes("cookie", "fixed_nonce"), fixed)),
            kat_bytes("cookie", "fixed_proof"));
}

TEST(CryptoKat, KeyMaterialMatchesOnBothSides) {
  auto server = KeyMaterial::complete(EcKeyPair::from_private(kat_bytes("ecdh_p384", "d_as")),
                                      kat_bytes("ecdh_p384", "q_sta"), Role::kServer);
  auto peer = KeyMaterial::complete(EcKeyPair::from_private(kat_bytes("ecdh_p384", "d_sta")),
                                    kat_bytes("ecdh_p384", "q_as"), Role::kPeer);
  EXPECT_EQ(server.session_id, kat_bytes("session", "session_id"));
  EXPECT_EQ(peer.session_id, server.session_id);
  EXPECT_EQ(b(peer.msk), kat_bytes("hkdf_msk", "ecdh_msk"));
  EXPECT_EQ(peer.msk, server.msk);
}

TEST(Ecdh, GeneratedKeysAgreeAndValidate) {
  for (int i = 0; i < 20; ++i) {
    auto a = EcKeyPair::generate(system_random());
    auto c = EcKeyPair::generate(system_random());
    ASSERT_NE(a.public_key(), c.public_key());
    ASSERT_EQ(a.public_key().size(), kPublicKeySize);
    ASSERT_TRUE(is_valid_public_key(a.public_key()));
    auto k1 = a.derive_shared(c.public_key());
    ASSERT_EQ(k1.size(), kSharedSecretSize);
    ASSERT_EQ(k1, c.derive_shared(a.public_key()));
  }
}

TEST(Ecdh, SeededGenerationIsDeterministic) {
  SeededRandom r1(5, "x"), r2(5, "x"), r3(6, "x");
  auto a = EcKeyPair::generate(r1), c = EcKeyPair::generate(r2), d = EcKeyPair::generate(r3);
  EXPECT_EQ(a.public_key(), c.public_key());
  EXPECT_NE(a.public_key(), d.public_key());
}

TEST(Ecdh, InvalidPointsAreRejected) {
  auto a = EcKeyPair::generate(system_random());
  auto expect_invalid = [&](const Bytes& q) {
    EXPECT_FALSE(is_valid_public_key(q));
    try {
      a.derive_shared(q);
      ADD_FAILURE() << "accepted " << to_hex(q);
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kInvalidPoint);
    }
  };
  expect_invalid(Bytes(97, 0));
  expect_invalid({});
  auto q = kat_bytes("ecdh_p384", "q_as");
  expect_invalid(Bytes(q.begin(), q.begin() + 49));  // compressed-length prefix
  auto off_curve = q;
  off_curve[96] ^= 1;
  expect_invalid(off_curve);
  auto wrong_prefix = q;
  wrong_prefix[0] = 0x02;
  expect_invalid(wrong_prefix);
  auto too_long = q;
  too_long.push_back(0);
  expect_invalid(too_long);
}

TEST(Ecdh, PrivateScalarRangeIsEnforced) {
  EXPECT_THROW(EcKeyPair::from_private(Bytes(48, 0)), Error);
  EXPECT_THROW(EcKeyPair::from_private(Bytes(48, 0xff)), Error);  // >= n
  EXPECT_THROW(EcKeyPair::from_private(Bytes(47, 1)), Error);
}

TEST(Msk, DeterministicAndInputSensitive) {
  auto k = kat_bytes("ecdh_p384", "shared_x");
  EXPECT_EQ(derive_msk(k), derive_msk(k));
  auto k2 = k;
  k2[0] ^= 0x80;
  EXPECT_NE(derive_msk(k), derive_msk(k2));
  EXPECT_EQ(derive_msk(k).size(), 64u);
}

TEST(Msk, FreshAcrossHandshakes) {
  std::set<Msk> seen;
  for (int i = 0; i < 100; ++i) {
    auto a = EcKeyPair::generate(system_random());
    auto c = EcKeyPair::generate(system_random());
    auto pub = c.public_key();
    seen.insert(KeyMaterial::complete(std::move(a), pub, Role::kServer).msk);
  }
  EXPECT_EQ(seen.size(), 100u);
}

TEST(SessionId, LayoutAndOrder) {
  EXPECT_EQ(build_session_id(Bytes{0xaa}, Bytes{0xbb}), (Bytes{0x20, 0xaa, 0xbb}));
  EXPECT_NE(build_session_id(Bytes{0xaa}, Bytes{0xbb}), build_session_id(Bytes{0xbb}, Bytes{0xaa}));
  EXPECT_EQ(build_session_id(Bytes(97, 1), Bytes(97, 2)).size(), 1u + 97 + 97);
}

TEST(SessionId, AnyKeyChangeChangesClientDataHash) {
  auto q_as = kat_bytes("ecdh_p384", "q_as"), q_sta = kat_bytes("ecdh_p384", "q_sta");
  auto challenge = kat_bytes("session", "challenge");
  auto base = client_data_hash(build_session_id(q_as, q_sta), challenge);
  for (std::size_t i = 0; i < q_as.size(); i += 8) {
    auto m = q_as;
    m[i] ^= 1;
    EXPECT_NE(client_data_hash(build_session_id(m, q_sta), challenge), base);
    m = q_sta;
    m[i] ^= 1;
    EXPECT_NE(client_data_hash(build_session_id(q_as, m), challenge), base);
  }
  auto c = challenge;
  c[31] ^= 1;
  EXPECT_NE(client_data_hash(build_session_id(q_as, q_sta), c), base);
}

TEST(Proof, StaleNonceGivesDifferentDigest) {
  Msk msk;
  msk.fill(0x5a);
  auto cookie = cookie_digest(msk);
  EXPECT_EQ(proof_digest(cookie, Bytes(32, 1), msk), proof_digest(cookie, Bytes(32, 1), msk));
  EXPECT_NE(proof_digest(cookie, Bytes(32, 1), msk), proof_digest(cookie, Bytes(32, 2), msk));
}

TEST(Random, SeededStreamIsReproducibleAndLabelled) {
  SeededRandom a(1, "l"), c(1, "l"), d(1, "m");
  auto x = a.bytes(100);
  EXPECT_EQ(x, c.bytes(100));
  EXPECT_NE(x, d.bytes(100));
  EXPECT_NE(system_random().bytes(32), system_random().bytes(32));
}

}  // namespace
}  // namespace eapfido
