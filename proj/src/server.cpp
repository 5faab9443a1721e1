#include "eapfido/server.hpp"

#include <algorithm>

namespace eapfido {

namespace {

constexpr std::size_t kChallengeSize = 32;
constexpr std::size_t kCookieIdSize = 16;

}  // namespace

std::string_view to_string(ServerState state) {
  switch (state) {
    case ServerState::kIdle: return "Idle";
    case ServerState::kSentStart: return "SentStart";
    case ServerState::kSentRequest: return "SentRequest";
    case ServerState::kDone: return "Done";
    case ServerState::kFailed: return "Failed";
  }
  return "?";
}

EapServer::EapServer(ServerConfig config, RandomSource& rng)
    : config_(std::move(config)), rng_(&rng) {
  if (config_.rp_id.empty()) throw Error(ErrorCode::kConfigurationError, "empty rp_id");
  if (!config_.store) throw Error(ErrorCode::kConfigurationError, "no credential store");
  identifier_ = rng_->bytes(1)[0];
}

EapFidoPacket EapServer::on_identity(std::string_view identity) {
  if (state_ != ServerState::kIdle) throw Error(ErrorCode::kStateError, std::string(to_string(state_)));
  if (identity.empty() || is_anonymous_identity(identity)) {
    if (!config_.store->has_discoverable_credentials()) {
      state_ = ServerState::kFailed;
      reason_ = ErrorCode::kConfigurationError;
      throw Error(ErrorCode::kConfigurationError,
                  "anonymous identity needs discoverable credentials");
    }
    identity_.reset();
  } else {
    identity_ = std::string(identity);
  }
  local_ = EcKeyPair::generate(*rng_);
  nonce_ = rng_->bytes(kNonceSize);
  state_ = ServerState::kSentStart;
  return make_start_request(next_identifier(), local_->public_key(), nonce_);
}

StartOutcome EapServer::fail_start(ErrorCode reason) {
  state_ = ServerState::kFailed;
  reason_ = reason;
  return {StartOutcome::Kind::kFailure, std::nullopt, reason};
}

AuthOutcome EapServer::fail_auth(ErrorCode reason) {
  state_ = ServerState::kFailed;
  reason_ = reason;
  return {false, identity_.value_or(""), reason};
}

bool EapServer::try_reauth(const EapFidoPacket& response) {
  const auto* cookie_id = response.find(Key::kID);
  if (!cookie_id || !response.has(Key::kD)) return false;
  auto proof = response.binary(Key::kD);

  SessionRecord record;
  try {
    record = config_.store->validate_session(*cookie_id, config_.clock());
  } catch (const Error&) {
    return false;  // unknown, expired or unbound: full authentication
  }
  if (identity_ && record.identity != identity_) return false;

  auto expected = proof_digest(record.cookie_digest, nonce_, keys_->msk);
  if (!constant_time_equal(expected, proof)) return false;
  identity_ = record.identity;
  return true;
}

StartOutcome EapServer::on_start_response(const EapFidoPacket& response) {
  if (state_ != ServerState::kSentStart) return fail_start(ErrorCode::kStateError);
  if (response.code != Code::kResponse || response.op_code != OpCode::kFidoStart ||
      response.identifier != identifier_)
    return fail_start(ErrorCode::kStateError);

  try {
    check_field_set(response);
    keys_ = KeyMaterial::complete(std::move(*local_), response.binary(Key::kQ), Role::kServer);
    local_.reset();

    if (try_reauth(response)) {
      state_ = ServerState::kDone;
      reauthenticated_ = true;
      return {StartOutcome::Kind::kReauthAccepted, std::nullopt, ErrorCode::kOk};
    }

    allow_list_.clear();
    if (identity_) {
      std::vector<AuthenticatorRecord> creds;
      try {
        creds = config_.store->credentials_for(*identity_);
      } catch (const Error&) {
        return fail_start(ErrorCode::kUnknownUser);
      }
      // An empty list would turn a named login into the discoverable flow.
      if (creds.empty()) return fail_start(ErrorCode::kUnknownUser);
      for (const auto& c : creds) allow_list_.push_back(c.credential_id);
    }

    challenge_ = rng_->bytes(kChallengeSize);
    issued_cookie_id_ = to_hex(rng_->bytes(kCookieIdSize));
    config_.store->create_session(issued_cookie_id_, cookie_digest(keys_->msk), config_.cookie_ttl,
                                  config_.clock());
    state_ = ServerState::kSentRequest;
    return {StartOutcome::Kind::kContinue,
            make_fido_request(next_identifier(), config_.rp_id, allow_list_, challenge_,
                              issued_cookie_id_),
            ErrorCode::kOk};
  } catch (const Error& e) {
    return fail_start(e.code());
  }
}

AuthOutcome EapServer::on_request_response(const EapFidoPacket& response) {
  if (state_ != ServerState::kSentRequest) return fail_auth(ErrorCode::kStateError);
  if (response.code != Code::kResponse || response.op_code != OpCode::kFidoRequest ||
      response.identifier != identifier_)
    return fail_auth(ErrorCode::kStateError);

  try {
    check_field_set(response);
    Assertion assertion;
    assertion.auth_data = response.binary(Key::kAD);
    assertion.signature = response.binary(Key::kSIG);
    assertion.user_handle = response.binary(Key::kUH);
    const std::uint32_t counter = response.counter();

    std::vector<AuthenticatorRecord> candidates;
    std::string username;
    if (allow_list_.empty()) {
      // Discoverable flow: the user handle names the user.
      try {
        auto user = config_.store->find_user_by_handle(assertion.user_handle);
        username = user.username;
        for (auto& c : config_.store->credentials_for_handle(assertion.user_handle))
          if (c.discoverable) candidates.push_back(std::move(c));
      } catch (const Error&) {
        return fail_auth(ErrorCode::kUnknownUserHandle);
      }
      if (candidates.empty()) return fail_auth(ErrorCode::kUnknownUserHandle);
    } else {
      username = *identity_;
      for (const auto& id : allow_list_) candidates.push_back(config_.store->find_credential(id));
    }

    if (assertion.auth_data.size() != kAuthDataSize) return fail_auth(ErrorCode::kMalformedAuthData);
    if (assertion.counter() != counter) return fail_auth(ErrorCode::kCounterMismatch);

    auto hash = client_data_hash(keys_->session_id, challenge_);
    const AuthenticatorRecord* selected = nullptr;
    if (candidates.size() == 1) {
      // Counter before signature.
      if (counter <= candidates[0].counter) return fail_auth(ErrorCode::kCounterRegression);
      auto verdict = verify_assertion(candidates[0].public_key, config_.rp_id, hash, assertion);
      if (verdict != ErrorCode::kOk) return fail_auth(verdict);
      selected = &candidates[0];
    } else {
      // The response does not name its credential; the one whose key
      // verifies the signature is the one that produced it.
      ErrorCode first_failure = ErrorCode::kOk;
      for (const auto& c : candidates) {
        auto verdict = verify_assertion(c.public_key, config_.rp_id, hash, assertion);
        if (verdict == ErrorCode::kOk) {
          selected = &c;
          break;
        }
        if (first_failure == ErrorCode::kOk) first_failure = verdict;
      }
      if (!selected) return fail_auth(first_failure);
      if (counter <= selected->counter) return fail_auth(ErrorCode::kCounterRegression);
    }

    config_.store->update_counter(selected->credential_id, counter);
    config_.store->bind_identity(issued_cookie_id_, username);
    identity_ = username;
    state_ = ServerState::kDone;
    return {true, username, ErrorCode::kOk};
  } catch (const Error& e) {
    return fail_auth(e.code());
  }
}

ServerStep EapServer::handle_bytes(ByteView packet) {
  using Action = ServerStep::Action;
  if (state_ != ServerState::kSentStart && state_ != ServerState::kSentRequest) {
    if (state_ != ServerState::kDone) {
      state_ = ServerState::kFailed;
      if (reason_ == ErrorCode::kOk) reason_ = ErrorCode::kStateError;
    }
    return {Action::kSendFailure, {}};
  }
  EapFidoPacket response;
  try {
    response = decode(packet);
  } catch (const Error& e) {
    state_ = ServerState::kFailed;
    reason_ = e.code();
    return {Action::kSendFailure, {}};
  }
  if (state_ == ServerState::kSentStart) {
    auto outcome = on_start_response(response);
    switch (outcome.kind) {
      case StartOutcome::Kind::kContinue: return {Action::kSendRequest, encode(*outcome.request)};
      case StartOutcome::Kind::kReauthAccepted: return {Action::kSendSuccess, {}};
      case StartOutcome::Kind::kFailure: return {Action::kSendFailure, {}};
    }
  }
  auto outcome = on_request_response(response);
  return {outcome.success ? Action::kSendSuccess : Action::kSendFailure, {}};
}

const Msk& EapServer::msk() const {
  if (state_ != ServerState::kDone) throw Error(ErrorCode::kStateError, std::string(to_string(state_)));
  return keys_->msk;
}

ServerResult EapServer::result() const {
  ServerResult r;
  r.identity = identity_;
  r.success = state_ == ServerState::kDone;
  r.reason = reason_;
  r.reauthenticated = reauthenticated_;
  if (r.success) {
    // Domain-separated and truncated: SHA-256(msk) alone is the session cookie.
    static constexpr std::string_view kLabel = "EAP-FIDO-MSK-fingerprint";
    auto digest = sha256({as_bytes(kLabel), keys_->msk});
    r.msk_fingerprint = to_hex(ByteView(digest).first(8));
  }
  return r;
}

}  // namespace eapfido
