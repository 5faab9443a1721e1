#include "eapfido/peer.hpp"

namespace eapfido {

std::string_view to_string(PeerState state) {
  switch (state) {
    case PeerState::kIdle: return "Idle";
    case PeerState::kAwaitStart: return "AwaitStart";
    case PeerState::kAwaitRequest: return "AwaitRequest";
    case PeerState::kDone: return "Done";
    case PeerState::kFailed: return "Failed";
  }
  return "?";
}

EapPeer::EapPeer(PeerConfig config, RandomSource& rng)
    : config_(std::move(config)), rng_(&rng), token_(config_.stored_token) {}

void EapPeer::fail(ErrorCode code, const std::string& detail) {
  state_ = PeerState::kFailed;
  failure_reason_ = code;
  keys_.reset();
  pending_token_.reset();
  throw Error(code, detail);
}

void EapPeer::require_in_progress(PeerState expected) {
  if (state_ == expected) return;
  if (state_ == PeerState::kAwaitStart || state_ == PeerState::kAwaitRequest)
    fail(ErrorCode::kStateError, "unexpected packet in " + std::string(to_string(state_)));
  throw Error(ErrorCode::kStateError, std::string(to_string(state_)));
}

std::string EapPeer::begin() {
  if (state_ != PeerState::kIdle) throw Error(ErrorCode::kStateError, "begin called twice");
  state_ = PeerState::kAwaitStart;
  if (config_.identity.empty() || is_anonymous_identity(config_.identity)) return "anonymous";
  return config_.identity;
}

EapFidoPacket EapPeer::handle_fido_start(const EapFidoPacket& request) {
  require_in_progress(PeerState::kAwaitStart);
  if (request.code != Code::kRequest || request.op_code != OpCode::kFidoStart)
    fail(ErrorCode::kStateError, "expected FIDO-Start request");

  try {
    check_field_set(request);
    auto q_as = request.binary(Key::kQ);
    auto nonce = request.binary(Key::kC);
    if (nonce.empty()) fail(ErrorCode::kInvalidFieldSet, "empty nonce");
    keys_ = KeyMaterial::complete(EcKeyPair::generate(*rng_), q_as, Role::kPeer);

    last_identifier_ = request.identifier;
    state_ = PeerState::kAwaitRequest;
    if (token_) {
      offered_proof_ = true;
      auto proof = proof_digest(token_->session_cookie, nonce, keys_->msk);
      return make_start_response(request.identifier, keys_->local.public_key(), proof,
                                 token_->cookie_id);
    }
    return make_start_response(request.identifier, keys_->local.public_key());
  } catch (const Error& e) {
    if (state_ == PeerState::kFailed) throw;
    fail(e.code(), e.what());
  }
}

EapFidoPacket EapPeer::handle_fido_request(const EapFidoPacket& request) {
  require_in_progress(PeerState::kAwaitRequest);
  if (request.code != Code::kRequest || request.op_code != OpCode::kFidoRequest)
    fail(ErrorCode::kStateError, "expected FIDO-Request request");
  if (sent_assertion_) fail(ErrorCode::kStateError, "second FIDO-Request");

  try {
    check_field_set(request);
    const auto& rp_id = request.text(Key::kRP);
    auto allow_list = request.binary_list(Key::kAC);
    auto challenge = request.binary(Key::kCD);
    const auto& cookie_id = request.text(Key::kID);
    if (challenge.empty()) fail(ErrorCode::kInvalidFieldSet, "empty challenge");

    auto hash = client_data_hash(keys_->session_id, challenge);
    if (!config_.authenticator) fail(ErrorCode::kConfigurationError, "no authenticator");
    auto assertion = config_.authenticator->get_assertion(rp_id, hash, allow_list,
                                                          AssertionOptions{true, true}, config_.pin);
    // Committed on EAP-Success only.
    pending_token_ = ReauthToken{cookie_id, cookie_digest(keys_->msk)};
    sent_assertion_ = true;
    last_identifier_ = request.identifier;
    return make_fido_response(request.identifier, assertion.auth_data, assertion.signature,
                              assertion.counter(), assertion.user_handle);
  } catch (const Error& e) {
    if (state_ == PeerState::kFailed) throw;
    fail(e.code(), e.what());
  }
}

std::optional<Bytes> EapPeer::handle_bytes(ByteView packet) {
  try {
    EapFidoPacket request;
    try {
      request = decode(packet);
    } catch (const Error& e) {
      if (state_ == PeerState::kAwaitStart || state_ == PeerState::kAwaitRequest)
        fail(e.code(), e.what());
      throw;
    }
    auto response = request.op_code == OpCode::kFidoStart ? handle_fido_start(request)
                                                          : handle_fido_request(request);
    return encode(response);
  } catch (const Error&) {
    return std::nullopt;
  }
}

Msk EapPeer::on_success() {
  if (state_ != PeerState::kAwaitRequest || !(sent_assertion_ || offered_proof_))
    throw Error(ErrorCode::kStateError, "EAP-Success in " + std::string(to_string(state_)));
  auto msk = keys_->msk;
  if (sent_assertion_) token_ = pending_token_;
  pending_token_.reset();
  state_ = PeerState::kDone;
  return msk;
}

void EapPeer::on_failure() {
  if (state_ == PeerState::kDone || state_ == PeerState::kFailed) return;
  state_ = PeerState::kFailed;
  keys_.reset();
  pending_token_.reset();
}

}  // namespace eapfido
