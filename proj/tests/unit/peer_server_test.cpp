#include <gtest/gtest.h>

#include <set>

#include "eapfido/error.hpp"
#include "eapfido/peer.hpp"
#include "eapfido/server.hpp"

namespace eapfido {
namespace {

constexpr const char* kRp = "eap-fido.example";
constexpr const char* kPin = "4913-canary-pin";

template <typename F>
ErrorCode error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kOk;
}

class FlowTest : public ::testing::Test {
 protected:
  FlowTest() {
    auto john = store.register_user("john-smith");
    john_cred = auth.make_credential(kRp, john.user_id, false);
    store.register_credential("john-smith", john_cred.credential_id, john_cred.public_key, false);
    auto jane = store.register_user("jane-doe");
    jane_cred = auth.make_credential(kRp, jane.user_id, true);
    store.register_credential("jane-doe", jane_cred.credential_id, jane_cred.public_key, true);
  }

  ServerConfig config() {
    ServerConfig c;
    c.rp_id = kRp;
    c.store = &store;
    c.clock = [this] { return now; };
    return c;
  }

  PeerConfig peer_config(std::string identity, std::optional<ReauthToken> token = std::nullopt,
                         std::string pin = kPin) {
    return {std::move(identity), std::move(token), &auth, std::move(pin)};
  }

  struct Full {
    bool success = false;
    ErrorCode reason = ErrorCode::kOk;
    std::optional<Msk> peer_msk;
    std::optional<Msk> server_msk;
    std::optional<ReauthToken> token;
    bool reauth = false;
  };

  // Drives one session through the typed handlers.
  Full run(std::string identity, std::optional<ReauthToken> token = std::nullopt) {
    EapServer server(config(), rng);
    EapPeer peer(peer_config(std::move(identity), token), rng);
    Full out;
    auto start = server.on_identity(peer.begin());
    auto start_response = peer.handle_fido_start(start);
    auto outcome = server.on_start_response(start_response);
    if (outcome.kind == StartOutcome::Kind::kFailure) {
      out.reason = outcome.reason;
      return out;
    }
    if (outcome.kind == StartOutcome::Kind::kContinue) {
      auto response = peer.handle_fido_request(*outcome.request);
      auto verdict = server.on_request_response(response);
      if (!verdict.success) {
        out.reason = verdict.reason;
        return out;
      }
    } else {
      out.reauth = true;
    }
    out.success = true;
    out.peer_msk = peer.on_success();
    out.server_msk = server.msk();
    out.token = peer.token();
    return out;
  }

  SeededRandom rng{3, "flow-test"};
  InMemoryCredentialStore store{rng};
  SoftAuthenticator auth{kPin, rng};
  StoredCredential john_cred, jane_cred;
  TimePoint now = TimePoint(std::chrono::seconds(1'800'000'000));
};

TEST_F(FlowTest, PeerBeginNormalizesIdentity) {
  EXPECT_EQ(EapPeer(peer_config("john-smith")).begin(), "john-smith");
  EXPECT_EQ(EapPeer(peer_config("?")).begin(), "anonymous");
  EXPECT_EQ(EapPeer(peer_config("")).begin(), "anonymous");
  EapPeer twice(peer_config("john-smith"));
  twice.begin();
  EXPECT_EQ(error_of([&] { twice.begin(); }), ErrorCode::kStateError);
}

TEST_F(FlowTest, StartResponseFieldsDependOnToken) {
  EapServer server(config(), rng);
  auto start = server.on_identity("john-smith");
  EapPeer plain(peer_config("john-smith"), rng);
  plain.begin();
  auto r = plain.handle_fido_start(start);
  ASSERT_EQ(r.data.size(), 1u);
  EXPECT_TRUE(r.has(Key::kQ));
  EXPECT_EQ(r.identifier, start.identifier);

  ReauthToken token{"cookie-1", {}};
  token.session_cookie.fill(7);
  EapPeer with_token(peer_config("john-smith", token), rng);
  with_token.begin();
  auto t = with_token.handle_fido_start(start);
  EXPECT_TRUE(t.has(Key::kQ) && t.has(Key::kD) && t.has(Key::kID));
  EXPECT_EQ(t.text(Key::kID), "cookie-1");
  auto expected = proof_digest(token.session_cookie, start.binary(Key::kC), with_token.keys()->msk);
  EXPECT_EQ(t.binary(Key::kD), Bytes(expected.begin(), expected.end()));
}

TEST_F(FlowTest, PeerRejectsOutOfOrderPackets) {
  EapPeer peer(peer_config("john-smith"), rng);
  peer.begin();
  auto request = make_fido_request(1, kRp, {}, Bytes(32, 1), "id");
  EXPECT_EQ(error_of([&] { peer.handle_fido_request(request); }), ErrorCode::kStateError);
  EXPECT_EQ(peer.state(), PeerState::kFailed);

  EapPeer idle(peer_config("john-smith"), rng);
  EXPECT_EQ(error_of([&] { idle.handle_fido_start(make_start_request(1, Bytes{4}, Bytes{1})); }),
            ErrorCode::kStateError);
  EXPECT_EQ(idle.state(), PeerState::kIdle);
}

TEST_F(FlowTest, PeerFailsSilentlyOnMalformedInput) {
  for (const Bytes& junk : {Bytes{}, Bytes{1, 2, 3}, Bytes{0x01, 0x07, 0x00, 0x06, 0x14, 0x03},
                            encode(make_start_request(1, Bytes(97, 0), Bytes{1}))}) {
    EapPeer peer(peer_config("john-smith"), rng);
    peer.begin();
    EXPECT_FALSE(peer.handle_bytes(junk).has_value());
    EXPECT_EQ(peer.state(), PeerState::kFailed);
    EXPECT_TRUE(peer.failure_reason().has_value());
    EXPECT_EQ(error_of([&] { peer.on_success(); }), ErrorCode::kStateError);
  }
}

TEST_F(FlowTest, ServerSideFlowSucceedsWithEqualMsk) {
  auto r = run("john-smith");
  ASSERT_TRUE(r.success) << to_string(r.reason);
  EXPECT_FALSE(r.reauth);
  EXPECT_EQ(*r.peer_msk, *r.server_msk);
  ASSERT_TRUE(r.token.has_value());
  EXPECT_EQ(store.find_credential(john_cred.credential_id).counter, 1u);
}

TEST_F(FlowTest, DiscoverableFlowUsesEmptyAllowListAndUserHandle) {
  EapServer server(config(), rng);
  EapPeer peer(peer_config("anonymous"), rng);
  auto start = server.on_identity(peer.begin());
  EXPECT_FALSE(server.identity().has_value());
  auto outcome = server.on_start_response(peer.handle_fido_start(start));
  ASSERT_EQ(outcome.kind, StartOutcome::Kind::kContinue);
  EXPECT_EQ(outcome.request->text(Key::kAC), "");
  auto response = peer.handle_fido_request(*outcome.request);
  EXPECT_EQ(response.binary(Key::kUH), store.find_user("jane-doe").user_id);
  auto verdict = server.on_request_response(response);
  ASSERT_TRUE(verdict.success) << to_string(verdict.reason);
  EXPECT_EQ(verdict.identity, "jane-doe");
  EXPECT_EQ(peer.on_success(), server.msk());
}

TEST_F(FlowTest, NamedFlowListsStoredCredentialsAndUsesThem) {
  auto second = auth.make_credential(kRp, store.find_user("john-smith").user_id, false);
  store.register_credential("john-smith", second.credential_id, second.public_key, false);
  EapServer server(config(), rng);
  EapPeer peer(peer_config("john-smith"), rng);
  auto outcome = server.on_start_response(peer.handle_fido_start(server.on_identity(peer.begin())));
  auto ac = outcome.request->binary_list(Key::kAC);
  EXPECT_EQ(ac.size(), 2u);
  auto verdict = server.on_request_response(peer.handle_fido_request(*outcome.request));
  EXPECT_TRUE(verdict.success) << to_string(verdict.reason);
  // Exactly one of the two listed credentials was used.
  EXPECT_EQ(store.find_credential(john_cred.credential_id).counter +
                store.find_credential(second.credential_id).counter,
            1u);
}

TEST_F(FlowTest, WrongPinFailsPeerWithoutResponse) {
  EapServer server(config(), rng);
  EapPeer peer(peer_config("john-smith", std::nullopt, "0000"), rng);
  auto start = encode(server.on_identity(peer.begin()));
  auto step = server.handle_bytes(*peer.handle_bytes(start));
  ASSERT_EQ(step.action, ServerStep::Action::kSendRequest);
  EXPECT_FALSE(peer.handle_bytes(step.packet).has_value());
  EXPECT_EQ(peer.failure_reason(), ErrorCode::kPinInvalid);
  EXPECT_EQ(store.find_credential(john_cred.credential_id).counter, 0u);
  EXPECT_EQ(auth.credentials().front().counter, 0u);
}

TEST_F(FlowTest, ResponseIdentifierEchoesRequest) {
  EapServer server(config(), rng);
  EapPeer peer(peer_config("john-smith"), rng);
  auto start = server.on_identity(peer.begin());
  auto sr = peer.handle_fido_start(start);
  EXPECT_EQ(sr.identifier, start.identifier);
  auto outcome = server.on_start_response(sr);
  EXPECT_EQ(outcome.request->identifier, static_cast<std::uint8_t>(start.identifier + 1));
  EXPECT_EQ(peer.handle_fido_request(*outcome.request).identifier, outcome.request->identifier);
}

TEST_F(FlowTest, ServerRejectsMismatchedIdentifier) {
  EapServer server(config(), rng);
  EapPeer peer(peer_config("john-smith"), rng);
  auto start = server.on_identity(peer.begin());
  auto sr = peer.handle_fido_start(start);
  sr.identifier++;
  EXPECT_EQ(server.on_start_response(sr).reason, ErrorCode::kStateError);
  EXPECT_EQ(server.state(), ServerState::kFailed);
}

TEST_F(FlowTest, PeerOnSuccessStateRules) {
  EapPeer idle(peer_config("john-smith"), rng);
  EXPECT_EQ(error_of([&] { idle.on_success(); }), ErrorCode::kStateError);
  EapPeer waiting(peer_config("john-smith"), rng);
  waiting.begin();
  EXPECT_EQ(error_of([&] { waiting.on_success(); }), ErrorCode::kStateError);
}

TEST_F(FlowTest, ServerIdentityHandling) {
  EapServer anon(config(), rng);
  anon.on_identity("anonymous");
  EXPECT_FALSE(anon.identity().has_value());
  EapServer named(config(), rng);
  named.on_identity("john-smith");
  EXPECT_EQ(named.identity(), "john-smith");
  EXPECT_EQ(error_of([&] { named.on_identity("john-smith"); }), ErrorCode::kStateError);
}

TEST_F(FlowTest, UnknownOrCredentialLessUserFailsAtStart) {
  EXPECT_EQ(run("nobody").reason, ErrorCode::kUnknownUser);
  store.register_user("no-creds");
  EXPECT_EQ(run("no-creds").reason, ErrorCode::kUnknownUser);
}

TEST_F(FlowTest, AnonymousWithoutDiscoverableCredentialsIsConfigurationError) {
  InMemoryCredentialStore empty(rng);
  auto c = config();
  c.store = &empty;
  EapServer server(c, rng);
  EXPECT_EQ(error_of([&] { server.on_identity("anonymous"); }), ErrorCode::kConfigurationError);
  EXPECT_EQ(server.result().reason, ErrorCode::kConfigurationError);
}

TEST_F(FlowTest, NoncesAndChallengesAreUnique) {
  std::set<Bytes> nonces, challenges;
  for (int i = 0; i < 1000; ++i) {
    EapServer server(config(), rng);
    EapPeer peer(peer_config("john-smith"), rng);
    auto start = server.on_identity(peer.begin());
    nonces.insert(start.binary(Key::kC));
    auto outcome = server.on_start_response(peer.handle_fido_start(start));
    auto cd = outcome.request->binary(Key::kCD);
    ASSERT_EQ(cd.size(), 32u);
    challenges.insert(cd);
  }
  EXPECT_EQ(nonces.size(), 1000u);
  EXPECT_EQ(challenges.size(), 1000u);
}

TEST_F(FlowTest, ReauthWithValidProofSkipsFidoRequest) {
  auto first = run("john-smith");
  ASSERT_TRUE(first.success);
  auto second = run("john-smith", first.token);
  ASSERT_TRUE(second.success) << to_string(second.reason);
  EXPECT_TRUE(second.reauth);
  EXPECT_EQ(*second.peer_msk, *second.server_msk);
  EXPECT_NE(*second.server_msk, *first.server_msk);  // fresh ECDH
  EXPECT_EQ(second.token, first.token);  // no new cookie on re-auth
  EXPECT_EQ(store.find_credential(john_cred.credential_id).counter, 1u);
}

TEST_F(FlowTest, ReauthFallsBackToFullAuthentication) {
  auto first = run("john-smith");
  ASSERT_TRUE(first.token);

  auto wrong_msk = *first.token;
  wrong_msk.session_cookie[0] ^= 1;  // D now computed from the wrong secret
  auto r1 = run("john-smith", wrong_msk);
  EXPECT_TRUE(r1.success);
  EXPECT_FALSE(r1.reauth);

  auto unknown = *first.token;
  unknown.cookie_id = "ffffffffffffffffffffffffffffffff";
  auto r2 = run("john-smith", unknown);
  EXPECT_TRUE(r2.success);
  EXPECT_FALSE(r2.reauth);

  // Bound to john-smith; another identity must not reuse it.
  auto other = run("jane-doe", r2.token);
  EXPECT_TRUE(other.success);
  EXPECT_FALSE(other.reauth);
}

TEST_F(FlowTest, ExpiredCookieFallsBackToFullAuthentication) {
  auto first = run("john-smith");
  now += kDefaultCookieTtl + std::chrono::seconds(1);
  auto r = run("john-smith", first.token);
  EXPECT_TRUE(r.success);
  EXPECT_FALSE(r.reauth);
}

TEST_F(FlowTest, SessionIsBoundOnlyAfterSuccess) {
  EapServer server(config(), rng);
  EapPeer peer(peer_config("john-smith", std::nullopt, "bad-pin"), rng);
  auto outcome = server.on_start_response(peer.handle_fido_start(server.on_identity(peer.begin())));
  ASSERT_EQ(outcome.kind, StartOutcome::Kind::kContinue);
  auto cookie = server.issued_cookie_id();
  EXPECT_EQ(error_of([&] { store.validate_session(cookie, now); }), ErrorCode::kUnbound);
  run("john-smith");
  EXPECT_EQ(error_of([&] { store.validate_session(cookie, now); }), ErrorCode::kUnbound);
}

TEST_F(FlowTest, CounterFiveOverFourSucceedsAndReplayRegresses) {
  auto c = auth.credentials().front();
  ASSERT_EQ(c.credential_id, john_cred.credential_id);
  c.counter = 4;
  SoftAuthenticator token(kPin, rng);
  token.import_credential(c);
  store.update_counter(c.credential_id, 4);

  EapServer server(config(), rng);
  EapPeer peer({"john-smith", std::nullopt, &token, kPin}, rng);
  auto outcome = server.on_start_response(peer.handle_fido_start(server.on_identity(peer.begin())));
  auto response = peer.handle_fido_request(*outcome.request);
  EXPECT_EQ(response.counter(), 5u);
  ASSERT_TRUE(server.on_request_response(response).success);
  EXPECT_EQ(store.find_credential(c.credential_id).counter, 5u);

  // Same counter in a later session: rejected before the signature is checked.
  EapServer again(config(), rng);
  EapPeer peer2({"john-smith", std::nullopt, &token, kPin}, rng);
  auto o2 = again.on_start_response(peer2.handle_fido_start(again.on_identity(peer2.begin())));
  peer2.handle_fido_request(*o2.request);
  response.identifier = o2.request->identifier;
  EXPECT_EQ(again.on_request_response(response).reason, ErrorCode::kCounterRegression);
}

TEST_F(FlowTest, SignatureOverAnotherSessionIsBadSignature) {
  EapServer a(config(), rng), c(config(), rng);
  EapPeer pa(peer_config("john-smith"), rng), pc(peer_config("john-smith"), rng);
  auto oa = a.on_start_response(pa.handle_fido_start(a.on_identity(pa.begin())));
  auto oc = c.on_start_response(pc.handle_fido_start(c.on_identity(pc.begin())));
  auto ra = pa.handle_fido_request(*oa.request);
  ra.identifier = oc.request->identifier;
  EXPECT_EQ(c.on_request_response(ra).reason, ErrorCode::kBadSignature);
  EXPECT_EQ(error_of([&] { c.msk(); }), ErrorCode::kStateError);
  EXPECT_EQ(store.find_credential(john_cred.credential_id).counter, 0u);
}

TEST_F(FlowTest, CounterFieldMustMatchAuthData) {
  EapServer server(config(), rng);
  EapPeer peer(peer_config("john-smith"), rng);
  auto o = server.on_start_response(peer.handle_fido_start(server.on_identity(peer.begin())));
  auto r = peer.handle_fido_request(*o.request);
  for (auto& f : r.data)
    if (f.key == Key::kC) f.value = "9";
  EXPECT_EQ(server.on_request_response(r).reason, ErrorCode::kCounterMismatch);
}

TEST_F(FlowTest, TamperedQInStartResponseIsRejected) {
  EapServer server(config(), rng);
  EapPeer peer(peer_config("john-smith"), rng);
  auto sr = peer.handle_fido_start(server.on_identity(peer.begin()));
  for (auto& f : sr.data)
    if (f.key == Key::kQ) f.value = base64_encode(Bytes(97, 0));
  EXPECT_EQ(server.on_start_response(sr).reason, ErrorCode::kInvalidPoint);
}

TEST_F(FlowTest, ServerHandleBytesAfterDoneSendsFailure) {
  auto c = config();
  EapServer server(c, rng);
  EXPECT_EQ(server.handle_bytes(Bytes{1, 2}).action, ServerStep::Action::kSendFailure);
  EXPECT_EQ(server.result().reason, ErrorCode::kStateError);
}

TEST_F(FlowTest, MskFreshAcrossRuns) {
  std::set<Msk> seen;
  for (int i = 0; i < 100; ++i) {
    auto r = run("john-smith");
    ASSERT_TRUE(r.success);
    ASSERT_EQ(*r.peer_msk, *r.server_msk);
    seen.insert(*r.server_msk);
  }
  EXPECT_EQ(seen.size(), 100u);
  EXPECT_EQ(store.find_credential(john_cred.credential_id).counter, 100u);
}

}  // namespace
}  // namespace eapfido
