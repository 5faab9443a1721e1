#pragma once

#include <optional>
#include <string>

#include "eapfido/authenticator.hpp"
#include "eapfido/crypto.hpp"
#include "eapfido/error.hpp"
#include "eapfido/packet.hpp"
#include "eapfido/store.hpp"

namespace eapfido {

enum class PeerState { kIdle, kAwaitStart, kAwaitRequest, kDone, kFailed };

std::string_view to_string(PeerState state);

struct PeerConfig {
  std::string identity;  // username, or "anonymous"/"?" for discoverable credentials
  std::optional<ReauthToken> stored_token;
  SoftAuthenticator* authenticator = nullptr;
  std::string pin;
};

// Supplicant side of the method:
//   Idle -> AwaitStart -> AwaitRequest -> Done, any in-progress state -> Failed.
// Success may arrive in AwaitRequest either after an assertion was sent or,
// when a re-authentication proof was offered, in place of FIDO-Request.
class EapPeer {
 public:
  explicit EapPeer(PeerConfig config, RandomSource& rng = system_random());

  // Identity for the EAP-Identity response.
  std::string begin();

  EapFidoPacket handle_fido_start(const EapFidoPacket& request);
  EapFidoPacket handle_fido_request(const EapFidoPacket& request);

  // Decodes and dispatches on OpCode. Any error moves the session to Failed
  // and yields no response.
  std::optional<Bytes> handle_bytes(ByteView packet);

  // EAP-Success: returns the MSK for installation.
  Msk on_success();
  void on_failure();

  PeerState state() const { return state_; }
  std::optional<ErrorCode> failure_reason() const { return failure_reason_; }
  bool offered_proof() const { return offered_proof_; }
  bool sent_assertion() const { return sent_assertion_; }

  // Token to present next session: the new one after a full authentication,
  // the old one after an accepted re-authentication.
  const std::optional<ReauthToken>& token() const { return token_; }

  const KeyMaterial* keys() const { return keys_ ? &*keys_ : nullptr; }

 private:
  [[noreturn]] void fail(ErrorCode code, const std::string& detail = {});
  void require_in_progress(PeerState expected);

  PeerConfig config_;
  RandomSource* rng_;
  PeerState state_ = PeerState::kIdle;
  std::optional<ErrorCode> failure_reason_;
  std::optional<KeyMaterial> keys_;
  std::optional<ReauthToken> token_;
  std::optional<ReauthToken> pending_token_;
  std::uint8_t last_identifier_ = 0;
  bool offered_proof_ = false;
  bool sent_assertion_ = false;
};

}  // namespace eapfido
