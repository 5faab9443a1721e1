#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <string>

#include "eapfido/authenticator.hpp"
#include "eapfido/crypto.hpp"
#include "eapfido/error.hpp"
#include "eapfido/packet.hpp"
#include "eapfido/store.hpp"

namespace eapfido {

enum class ServerState { kIdle, kSentStart, kSentRequest, kDone, kFailed };

std::string_view to_string(ServerState state);

inline constexpr std::chrono::seconds kDefaultCookieTtl = std::chrono::hours(8);

struct ServerConfig {
  std::string rp_id;
  CredentialStore* store = nullptr;
  std::chrono::seconds cookie_ttl = kDefaultCookieTtl;
  std::function<TimePoint()> clock = [] { return Clock::now(); };
};

struct StartOutcome {
  enum class Kind { kContinue, kReauthAccepted, kFailure };
  Kind kind = Kind::kFailure;
  std::optional<EapFidoPacket> request;  // set for kContinue
  ErrorCode reason = ErrorCode::kOk;     // set for kFailure
};

struct AuthOutcome {
  bool success = false;
  std::string identity;
  ErrorCode reason = ErrorCode::kOk;
};

// What the server reports about a finished session. Never carries the MSK,
// only a short fingerprint that reveals neither the MSK nor the session cookie.
struct ServerResult {
  std::optional<std::string> identity;
  bool success = false;
  ErrorCode reason = ErrorCode::kOk;
  std::string msk_fingerprint;
  bool reauthenticated = false;
};

struct ServerStep {
  enum class Action { kSendRequest, kSendSuccess, kSendFailure };
  Action action = Action::kSendFailure;
  Bytes packet;  // kSendRequest only
};

// Authentication-server side:
//   Idle -> SentStart -> SentRequest -> Done, SentStart -> Done on an
//   accepted re-authentication proof, any in-progress state -> Failed.
class EapServer {
 public:
  explicit EapServer(ServerConfig config, RandomSource& rng = system_random());

  // Throws ConfigurationError for an anonymous identity when the store holds
  // no discoverable credentials.
  EapFidoPacket on_identity(std::string_view identity);
  StartOutcome on_start_response(const EapFidoPacket& response);
  AuthOutcome on_request_response(const EapFidoPacket& response);

  // Decodes a response and routes it by state. Decoding errors fail the
  // session with the codec's reason.
  ServerStep handle_bytes(ByteView packet);

  const Msk& msk() const;

  ServerState state() const { return state_; }
  const std::optional<std::string>& identity() const { return identity_; }
  ServerResult result() const;

  const Bytes& issued_challenge() const { return challenge_; }
  const std::string& issued_cookie_id() const { return issued_cookie_id_; }
  const KeyMaterial* keys() const { return keys_ ? &*keys_ : nullptr; }

 private:
  StartOutcome fail_start(ErrorCode reason);
  AuthOutcome fail_auth(ErrorCode reason);
  bool try_reauth(const EapFidoPacket& response);
  std::uint8_t next_identifier() { return ++identifier_; }

  ServerConfig config_;
  RandomSource* rng_;
  ServerState state_ = ServerState::kIdle;
  std::optional<std::string> identity_;
  std::optional<EcKeyPair> local_;
  std::optional<KeyMaterial> keys_;
  Bytes nonce_;
  Bytes challenge_;
  std::string issued_cookie_id_;
  std::vector<Bytes> allow_list_;
  std::uint8_t identifier_ = 0;
  ErrorCode reason_ = ErrorCode::kOk;
  bool reauthenticated_ = false;
};

}  // namespace eapfido
