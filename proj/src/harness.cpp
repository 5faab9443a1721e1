#include "eapfido/harness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace eapfido {

namespace {

using SteadyClock = std::chrono::steady_clock;

constexpr int kMaxSteps = 64;

std::int64_t micros_between(SteadyClock::time_point a, SteadyClock::time_point b) {
  return std::chrono::duration_cast<std::chrono::microseconds>(b - a).count();
}

std::string_view to_string(Direction d) { return d == Direction::kToPeer ? "to_peer" : "to_server"; }

Frame method_frame(Direction d, Bytes packet) { return {d, FrameKind::kMethod, std::move(packet)}; }

bool is_method(const Frame& f, Direction d, Code code, OpCode op) {
  if (f.direction != d || f.kind != FrameKind::kMethod || f.payload.size() < kHeaderSize)
    return false;
  return f.payload[0] == static_cast<std::uint8_t>(code) &&
         f.payload[5] == static_cast<std::uint8_t>(op);
}

// Re-encodes a method frame after `edit` changes its decoded packet.
template <typename Edit>
Frame rewrite(Frame frame, Edit&& edit) {
  auto packet = decode(frame.payload);
  edit(packet);
  frame.payload = encode(packet);
  return frame;
}

void replace_value(EapFidoPacket& p, Key key, std::string value) {
  for (auto& f : p.data)
    if (f.key == key) f.value = std::move(value);
}

void add_secret(std::vector<Secret>& out, std::string label, ByteView value) {
  if (!value.empty()) out.push_back({std::move(label), to_bytes(value)});
}

void add_key_secrets(std::vector<Secret>& out, const std::string& who, const KeyMaterial* keys) {
  if (!keys) return;
  add_secret(out, who + ".ecdh_private", keys->local.private_scalar());
  add_secret(out, who + ".shared_secret", keys->shared);
  add_secret(out, who + ".msk", keys->msk);
  add_secret(out, who + ".session_cookie", cookie_digest(keys->msk));
}

}  // namespace

std::string Frame::label() const {
  switch (kind) {
    case FrameKind::kIdentityRequest: return "Identity-Request";
    case FrameKind::kIdentityResponse: return "Identity-Response";
    case FrameKind::kSuccess: return "Success";
    case FrameKind::kFailure: return "Failure";
    case FrameKind::kMethod: break;
  }
  if (payload.size() < kHeaderSize || (payload[5] != 1 && payload[5] != 2) ||
      (payload[0] != 1 && payload[0] != 2))
    return "Method";
  std::string name = payload[5] == 1 ? "FidoStart" : "FidoRequest";
  return name + (payload[0] == 1 ? "-Request" : "-Response");
}

void TunnelChannel::send(Frame frame) {
  if (interceptor_) {
    auto delivered = interceptor_(std::move(frame));
    if (!delivered) return;
    frame = std::move(*delivered);
  }
  transcript_.push_back(frame);
  (frame.direction == Direction::kToPeer ? to_peer_ : to_server_).push_back(std::move(frame));
}

std::optional<Frame> TunnelChannel::receive(Direction to) {
  auto& queue = to == Direction::kToPeer ? to_peer_ : to_server_;
  if (queue.empty()) return std::nullopt;
  Frame f = std::move(queue.front());
  queue.pop_front();
  return f;
}

std::string_view to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::kServerSide: return "server_side";
    case ScenarioKind::kDiscoverable: return "discoverable";
    case ScenarioKind::kReauth: return "reauth";
  }
  return "?";
}

std::string_view to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::kMitmEcdh: return "mitm_ecdh";
    case AttackKind::kReplayAssertion: return "replay_assertion";
    case AttackKind::kStaleCounter: return "stale_counter";
    case AttackKind::kRogueChallenge: return "rogue_challenge";
  }
  return "?";
}

std::optional<ScenarioKind> scenario_from_string(std::string_view name) {
  for (auto k : {ScenarioKind::kServerSide, ScenarioKind::kDiscoverable, ScenarioKind::kReauth})
    if (to_string(k) == name) return k;
  return std::nullopt;
}

std::optional<AttackKind> attack_from_string(std::string_view name) {
  for (auto k : {AttackKind::kMitmEcdh, AttackKind::kReplayAssertion, AttackKind::kStaleCounter,
                 AttackKind::kRogueChallenge})
    if (to_string(k) == name) return k;
  return std::nullopt;
}

ErrorCode expected_reason(AttackKind kind) {
  switch (kind) {
    case AttackKind::kMitmEcdh:
    case AttackKind::kReplayAssertion:
    case AttackKind::kRogueChallenge: return ErrorCode::kBadSignature;
    case AttackKind::kStaleCounter: return ErrorCode::kCounterRegression;
  }
  return ErrorCode::kInternal;
}

nlohmann::json to_json(const ScenarioReport& r) {
  nlohmann::json transcript = nlohmann::json::array();
  for (const auto& f : r.transcript) {
    nlohmann::json frame{{"direction", to_string(f.direction)}, {"frame", f.label()}};
    if (f.kind == FrameKind::kIdentityResponse)
      frame["identity"] = std::string(f.payload.begin(), f.payload.end());
    if (f.kind == FrameKind::kMethod) {
      frame["bytes"] = f.payload.size();
      if (f.payload.size() >= kHeaderSize) {
        frame["identifier"] = f.payload[1];
        frame["data"] = std::string(f.payload.begin() + kHeaderSize, f.payload.end());
      }
    }
    transcript.push_back(std::move(frame));
  }
  nlohmann::json j{
      {"scenario", r.name},
      {"outcome", r.success ? "Success" : "Failure"},
      {"reason", r.success ? nlohmann::json(nullptr) : nlohmann::json(std::string(to_string(r.reason)))},
      {"expected_outcome", r.expected_outcome},
      {"identity", r.identity ? nlohmann::json(*r.identity) : nlohmann::json(nullptr)},
      {"msk_match", r.msk_match},
      {"msk_fingerprint", r.msk_fingerprint},
      {"round_trips", r.round_trips},
      {"timings", {{"t_total_us", r.timings.t_total_us}, {"t_inner_us", r.timings.t_inner_us}}},
      {"transcript", std::move(transcript)},
  };
  j["seed"] = r.seed ? nlohmann::json(*r.seed) : nlohmann::json(nullptr);
  if (r.expected_failure) j["expected_reason"] = std::string(to_string(*r.expected_failure));
  if (r.primer_timings)
    j["primer_timings"] = {{"t_total_us", r.primer_timings->t_total_us},
                           {"t_inner_us", r.primer_timings->t_inner_us}};
  return j;
}

std::vector<std::string> scan_transcript_for_secrets(const std::vector<Frame>& transcript,
                                                     const std::vector<Secret>& secrets) {
  std::vector<Bytes> haystacks;
  for (const auto& f : transcript) {
    haystacks.push_back(f.payload);
    if (f.kind != FrameKind::kMethod || f.payload.size() < kHeaderSize) continue;
    std::string_view data(reinterpret_cast<const char*>(f.payload.data()) + kHeaderSize,
                          f.payload.size() - kHeaderSize);
    // Every '='-separated value, and every comma-separated item within it,
    // is tried as base64.
    std::size_t pos = 0;
    while (pos <= data.size()) {
      auto end = data.find(' ', pos);
      if (end == std::string_view::npos) end = data.size();
      auto token = data.substr(pos, end - pos);
      auto eq = token.find('=');
      if (eq != std::string_view::npos) {
        auto value = token.substr(eq + 1);
        std::size_t ip = 0;
        while (ip <= value.size()) {
          auto ie = value.find(',', ip);
          if (ie == std::string_view::npos) ie = value.size();
          if (auto decoded = base64_decode(value.substr(ip, ie - ip))) haystacks.push_back(*decoded);
          ip = ie + 1;
        }
      }
      pos = end + 1;
    }
  }
  std::vector<std::string> leaks;
  for (const auto& s : secrets) {
    auto b64 = base64_encode(s.value);
    auto hex = to_hex(s.value);
    for (const auto& h : haystacks) {
      if (contains(h, s.value) || contains(h, as_bytes(b64)) || contains(h, as_bytes(hex))) {
        leaks.push_back(s.label);
        break;
      }
    }
  }
  return leaks;
}

Stats summarize(const std::vector<double>& values) {
  Stats s;
  if (values.empty()) return s;
  auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  s.min = *lo;
  s.max = *hi;
  s.avg = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
  if (values.size() > 1) {
    double sq = 0;
    for (double v : values) sq += (v - s.avg) * (v - s.avg);
    s.stdev = std::sqrt(sq / (values.size() - 1));
  }
  return s;
}

nlohmann::json to_json(const BenchSummary& b) {
  auto stats = [](const Stats& s) {
    return nlohmann::json{{"avg", s.avg}, {"stdev", s.stdev}, {"max", s.max}, {"min", s.min}};
  };
  nlohmann::json runs = nlohmann::json::array();
  for (std::size_t i = 0; i < b.runs.size(); ++i)
    runs.push_back({{"t_total_us", b.runs[i].t_total_us},
                    {"t_inner_us", b.runs[i].t_inner_us},
                    {"round_trips", b.round_trips[i]}});
  return {{"scenario", to_string(b.kind)}, {"n", b.n},
          {"all_success", b.all_success},  {"t_total_ms", stats(b.t_total_ms)},
          {"t_inner_ms", stats(b.t_inner_ms)}, {"runs", std::move(runs)}};
}

struct Harness::RunResult {
  ScenarioReport report;
  std::optional<ReauthToken> token;
};

std::unique_ptr<Harness> Harness::seeded(std::uint64_t seed, HarnessOptions options) {
  auto rng = std::make_unique<SeededRandom>(seed, "fixture");
  auto store = std::make_shared<InMemoryCredentialStore>(*rng);
  auto authenticator = std::make_shared<SoftAuthenticator>(options.pin, *rng);

  auto server_side = store->register_user(options.server_side_user);
  auto cred = authenticator->make_credential(options.rp_id, server_side.user_id, false);
  store->register_credential(options.server_side_user, cred.credential_id, cred.public_key, false);

  auto discoverable = store->register_user(options.discoverable_user);
  auto dcred = authenticator->make_credential(options.rp_id, discoverable.user_id, true);
  store->register_credential(options.discoverable_user, dcred.credential_id, dcred.public_key, true);

  auto harness = std::make_unique<Harness>(std::move(store), std::move(authenticator), std::move(options));
  harness->fixture_rng_ = std::move(rng);
  return harness;
}

Harness::Harness(std::shared_ptr<CredentialStore> store,
                 std::shared_ptr<SoftAuthenticator> authenticator, HarnessOptions options)
    : store_(std::move(store)), authenticator_(std::move(authenticator)), options_(std::move(options)) {
  authenticator_->set_presence_prompt(options_.presence_prompt);
  // Simulated touch: the user always consents.
  authenticator_->set_presence_handler([] { return true; });
}

void Harness::set_presence_prompt(bool enabled) {
  options_.presence_prompt = enabled;
  authenticator_->set_presence_prompt(enabled);
}

std::unique_ptr<RandomSource> Harness::make_rng(std::optional<std::uint64_t> seed,
                                                std::string_view label) const {
  if (seed) return std::make_unique<SeededRandom>(*seed, label);
  return std::make_unique<SystemRandom>();
}

std::vector<Secret> Harness::static_secrets(const SoftAuthenticator& authenticator) const {
  std::vector<Secret> out;
  add_secret(out, "pin", as_bytes(options_.pin));
  for (const auto& c : authenticator.credentials())
    add_secret(out, "credential_private:" + to_hex(c.credential_id), c.private_key);
  return out;
}

Harness::RunResult Harness::run_full(const std::string& identity, std::optional<ReauthToken> token,
                                     SoftAuthenticator& authenticator,
                                     std::optional<std::uint64_t> seed, std::string_view phase,
                                     TunnelChannel::Interceptor interceptor) {
  auto peer_rng = make_rng(seed, std::string(phase) + "/peer");
  auto server_rng = make_rng(seed, std::string(phase) + "/server");

  ServerConfig config;
  config.rp_id = options_.rp_id;
  config.store = store_.get();
  config.cookie_ttl = options_.cookie_ttl;
  EapServer server(config, *server_rng);
  EapPeer peer({identity, token, &authenticator, options_.pin}, *peer_rng);

  TunnelChannel channel;
  channel.set_interceptor(std::move(interceptor));

  RunResult out;
  auto& report = out.report;
  report.seed = seed;
  report.secrets = static_secrets(authenticator);
  if (token) add_secret(report.secrets, "token.session_cookie", token->session_cookie);

  bool peer_success = false;
  bool stalled = false;
  Msk peer_msk{};
  auto t_start = SteadyClock::now();
  std::optional<SteadyClock::time_point> t_inner_start;
  auto t_end = t_start;

  channel.send({Direction::kToPeer, FrameKind::kIdentityRequest, {}});
  bool finished = false;
  for (int step = 0; step < kMaxSteps && !finished; ++step) {
    if (auto f = channel.receive(Direction::kToPeer)) {
      switch (f->kind) {
        case FrameKind::kIdentityRequest: {
          auto id = peer.begin();
          channel.send({Direction::kToServer, FrameKind::kIdentityResponse, to_bytes(as_bytes(id))});
          break;
        }
        case FrameKind::kMethod: {
          if (!t_inner_start) t_inner_start = SteadyClock::now();
          ++report.round_trips;
          auto response = peer.handle_bytes(f->payload);
          if (!response) {
            finished = true;  // peer aborted; nothing is sent
            break;
          }
          channel.send(method_frame(Direction::kToServer, std::move(*response)));
          break;
        }
        case FrameKind::kSuccess:
          try {
            peer_msk = peer.on_success();
            peer_success = true;
          } catch (const Error&) {
            peer.on_failure();
          }
          t_end = SteadyClock::now();
          finished = true;
          break;
        case FrameKind::kFailure:
          peer.on_failure();
          t_end = SteadyClock::now();
          finished = true;
          break;
        case FrameKind::kIdentityResponse:
          break;
      }
      add_key_secrets(report.secrets, "peer", peer.keys());
      continue;
    }
    if (auto f = channel.receive(Direction::kToServer)) {
      if (f->kind == FrameKind::kIdentityResponse) {
        try {
          auto start = server.on_identity(std::string(f->payload.begin(), f->payload.end()));
          channel.send(method_frame(Direction::kToPeer, encode(start)));
        } catch (const Error&) {
          channel.send({Direction::kToPeer, FrameKind::kFailure, {}});
        }
      } else if (f->kind == FrameKind::kMethod) {
        auto step_result = server.handle_bytes(f->payload);
        switch (step_result.action) {
          case ServerStep::Action::kSendRequest:
            channel.send(method_frame(Direction::kToPeer, std::move(step_result.packet)));
            break;
          case ServerStep::Action::kSendSuccess:
            channel.send({Direction::kToPeer, FrameKind::kSuccess, {}});
            break;
          case ServerStep::Action::kSendFailure:
            channel.send({Direction::kToPeer, FrameKind::kFailure, {}});
            break;
        }
      }
      add_key_secrets(report.secrets, "server", server.keys());
      continue;
    }
    stalled = true;
    t_end = SteadyClock::now();
    break;
  }

  auto result = server.result();
  report.success = peer_success && result.success;
  report.identity = result.identity;
  if (!report.success) {
    if (result.reason != ErrorCode::kOk) report.reason = result.reason;
    else if (peer.failure_reason()) report.reason = *peer.failure_reason();
    else if (stalled) report.reason = ErrorCode::kTimeout;
    else report.reason = ErrorCode::kStateError;
  }
  if (report.success) {
    report.msk_match = constant_time_equal(peer_msk, server.msk());
    report.msk_fingerprint = result.msk_fingerprint;
    out.token = peer.token();
  }
  report.timings.t_total_us = micros_between(t_start, t_end);
  report.timings.t_inner_us = t_inner_start ? micros_between(*t_inner_start, t_end) : 0;
  report.transcript = channel.transcript();
  return out;
}

ScenarioReport Harness::run_scenario(ScenarioKind kind, std::optional<std::uint64_t> seed) {
  RunResult run;
  switch (kind) {
    case ScenarioKind::kServerSide:
      run = run_full(options_.server_side_user, std::nullopt, *authenticator_, seed, "server_side");
      break;
    case ScenarioKind::kDiscoverable:
      run = run_full("anonymous", std::nullopt, *authenticator_, seed, "discoverable");
      break;
    case ScenarioKind::kReauth: {
      auto primer = run_full(options_.server_side_user, std::nullopt, *authenticator_, seed, "primer");
      if (!primer.report.success || !primer.token) {
        primer.report.name = std::string(to_string(kind));
        return primer.report;
      }
      run = run_full(options_.server_side_user, primer.token, *authenticator_, seed, "reauth");
      run.report.primer_timings = primer.report.timings;
      break;
    }
  }
  auto& report = run.report;
  report.name = std::string(to_string(kind));
  report.expected_outcome = report.success && report.msk_match;
  if (kind == ScenarioKind::kReauth) report.expected_outcome &= report.round_trips == 1;
  if (report.success && run.token) peer_token_ = run.token;
  return report;
}

ScenarioReport Harness::run_attack(AttackKind kind, std::optional<std::uint64_t> seed) {
  ScenarioReport report;
  switch (kind) {
    case AttackKind::kMitmEcdh: report = attack_mitm(seed); break;
    case AttackKind::kReplayAssertion: report = attack_replay(seed); break;
    case AttackKind::kStaleCounter: report = attack_stale_counter(seed); break;
    case AttackKind::kRogueChallenge: report = attack_rogue_challenge(seed); break;
  }
  report.name = "attack:" + std::string(to_string(kind));
  report.expected_failure = expected_reason(kind);
  report.expected_outcome = !report.success && report.reason == expected_reason(kind);
  return report;
}

// The attacker answers each side's ECDH with its own key.
ScenarioReport Harness::attack_mitm(std::optional<std::uint64_t> seed) {
  auto attacker_rng = make_rng(seed, "mitm/attacker");
  auto toward_peer = EcKeyPair::generate(*attacker_rng);
  auto toward_server = EcKeyPair::generate(*attacker_rng);
  auto interceptor = [&](Frame f) -> std::optional<Frame> {
    if (is_method(f, Direction::kToPeer, Code::kRequest, OpCode::kFidoStart))
      return rewrite(std::move(f), [&](EapFidoPacket& p) {
        replace_value(p, Key::kQ, base64_encode(toward_peer.public_key()));
      });
    if (is_method(f, Direction::kToServer, Code::kResponse, OpCode::kFidoStart))
      return rewrite(std::move(f), [&](EapFidoPacket& p) {
        replace_value(p, Key::kQ, base64_encode(toward_server.public_key()));
      });
    return f;
  };
  return run_full(options_.server_side_user, std::nullopt, *authenticator_, seed, "mitm", interceptor)
      .report;
}

// A response captured (and suppressed) in one session is injected into the
// next one in place of the genuine response.
ScenarioReport Harness::attack_replay(std::optional<std::uint64_t> seed) {
  std::optional<Frame> captured;
  auto capture = [&](Frame f) -> std::optional<Frame> {
    if (is_method(f, Direction::kToServer, Code::kResponse, OpCode::kFidoRequest)) {
      captured = f;
      return std::nullopt;
    }
    return f;
  };
  auto first = run_full(options_.server_side_user, std::nullopt, *authenticator_, seed, "replay/capture",
                        capture);
  if (!captured) return first.report;

  auto inject = [&](Frame f) -> std::optional<Frame> {
    if (is_method(f, Direction::kToServer, Code::kResponse, OpCode::kFidoRequest)) {
      Frame replay = *captured;
      replay.payload[1] = f.payload[1];  // identifier is not signed
      return replay;
    }
    return f;
  };
  auto second = run_full(options_.server_side_user, std::nullopt, *authenticator_, seed,
                         "replay/inject", inject);
  auto& report = second.report;
  report.secrets.insert(report.secrets.end(), first.report.secrets.begin(),
                        first.report.secrets.end());
  return report;
}

// A clone taken before a successful authentication later signs with a
// counter the server has already seen.
ScenarioReport Harness::attack_stale_counter(std::optional<std::uint64_t> seed) {
  auto clone = authenticator_->clone();
  auto genuine = run_full(options_.server_side_user, std::nullopt, *authenticator_, seed,
                          "stale/genuine");
  if (!genuine.report.success) return genuine.report;
  return run_full(options_.server_side_user, std::nullopt, *clone, seed, "stale/clone").report;
}

// A rogue server runs its own session with the victim, issues its own
// challenge, and relays the victim's assertion into a session it holds with
// the real server.
ScenarioReport Harness::attack_rogue_challenge(std::optional<std::uint64_t> seed) {
  auto peer_rng = make_rng(seed, "rogue/peer");
  auto server_rng = make_rng(seed, "rogue/server");
  auto rogue_rng = make_rng(seed, "rogue/attacker");

  ServerConfig config;
  config.rp_id = options_.rp_id;
  config.store = store_.get();
  config.cookie_ttl = options_.cookie_ttl;
  EapServer real(config, *server_rng);
  EapPeer victim({options_.server_side_user, std::nullopt, authenticator_.get(), options_.pin}, *peer_rng);

  TunnelChannel victim_leg;
  TunnelChannel server_leg;
  ScenarioReport report;
  report.seed = seed;
  report.secrets = static_secrets(*authenticator_);
  auto t_start = SteadyClock::now();

  auto finish = [&](ErrorCode reason) {
    auto result = real.result();
    report.success = false;
    report.reason = result.reason != ErrorCode::kOk ? result.reason : reason;
    report.identity = result.identity;
    report.timings.t_total_us = micros_between(t_start, SteadyClock::now());
    report.transcript = victim_leg.transcript();
    report.transcript.insert(report.transcript.end(), server_leg.transcript().begin(),
                             server_leg.transcript().end());
    add_key_secrets(report.secrets, "peer", victim.keys());
    add_key_secrets(report.secrets, "server", real.keys());
    return report;
  };

  // Victim identifies itself to the rogue; the rogue repeats it to the real server.
  victim_leg.send({Direction::kToPeer, FrameKind::kIdentityRequest, {}});
  victim_leg.receive(Direction::kToPeer);
  auto identity = victim.begin();
  victim_leg.send({Direction::kToServer, FrameKind::kIdentityResponse, to_bytes(as_bytes(identity))});
  victim_leg.receive(Direction::kToServer);

  server_leg.send({Direction::kToServer, FrameKind::kIdentityResponse, to_bytes(as_bytes(identity))});
  server_leg.receive(Direction::kToServer);
  server_leg.send(method_frame(Direction::kToPeer, encode(real.on_identity(identity))));
  auto real_start = decode(server_leg.receive(Direction::kToPeer)->payload);

  // Rogue completes ECDH with the real server under its own key.
  auto rogue_as_peer = EcKeyPair::generate(*rogue_rng);
  auto rogue_to_real = KeyMaterial::complete(std::move(rogue_as_peer), real_start.binary(Key::kQ), Role::kPeer);
  server_leg.send(method_frame(Direction::kToServer,
                               encode(make_start_response(real_start.identifier,
                                                          rogue_to_real.local.public_key()))));
  auto step = real.handle_bytes(server_leg.receive(Direction::kToServer)->payload);
  if (step.action != ServerStep::Action::kSendRequest) return finish(ErrorCode::kStateError);
  server_leg.send(method_frame(Direction::kToPeer, step.packet));
  auto real_request = decode(server_leg.receive(Direction::kToPeer)->payload);

  // Rogue runs its own session toward the victim.
  auto rogue_as_server = EcKeyPair::generate(*rogue_rng);
  auto rogue_public = rogue_as_server.public_key();
  std::uint8_t rogue_id = rogue_rng->bytes(1)[0];
  victim_leg.send(method_frame(Direction::kToPeer,
                               encode(make_start_request(rogue_id, rogue_public,
                                                         rogue_rng->bytes(kNonceSize)))));
  auto victim_start = victim.handle_bytes(victim_leg.receive(Direction::kToPeer)->payload);
  if (!victim_start) return finish(ErrorCode::kStateError);
  victim_leg.send(method_frame(Direction::kToServer, *victim_start));
  victim_leg.receive(Direction::kToServer);

  auto rogue_request = make_fido_request(static_cast<std::uint8_t>(rogue_id + 1),
                                         real_request.text(Key::kRP),
                                         real_request.binary_list(Key::kAC),
                                         rogue_rng->bytes(32), real_request.text(Key::kID));
  victim_leg.send(method_frame(Direction::kToPeer, encode(rogue_request)));
  auto victim_response = victim.handle_bytes(victim_leg.receive(Direction::kToPeer)->payload);
  if (!victim_response) return finish(ErrorCode::kStateError);
  victim_leg.send(method_frame(Direction::kToServer, *victim_response));
  auto relayed = victim_leg.receive(Direction::kToServer)->payload;
  relayed[1] = real_request.identifier;
  report.round_trips = 2;

  server_leg.send(method_frame(Direction::kToServer, relayed));
  auto verdict = real.handle_bytes(server_leg.receive(Direction::kToServer)->payload);
  server_leg.send({Direction::kToPeer,
                   verdict.action == ServerStep::Action::kSendSuccess ? FrameKind::kSuccess
                                                                      : FrameKind::kFailure,
                   {}});
  if (verdict.action == ServerStep::Action::kSendSuccess) {
    // The relay fooled the server.
    auto r = finish(ErrorCode::kOk);
    r.success = true;
    r.reason = ErrorCode::kOk;
    return r;
  }
  return finish(ErrorCode::kStateError);
}

BenchSummary Harness::measure(ScenarioKind kind, int n, std::optional<std::uint64_t> seed) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "n must be >= 1");
  BenchSummary summary;
  summary.kind = kind;
  summary.n = n;
  summary.all_success = true;
  // Kept in memory; callers write the summary once at the end.
  std::vector<double> total_ms, inner_ms;
  for (int i = 0; i < n; ++i) {
    auto run_seed = seed ? std::optional<std::uint64_t>(*seed + static_cast<std::uint64_t>(i)) : std::nullopt;
    auto report = run_scenario(kind, run_seed);
    summary.all_success &= report.expected_outcome;
    summary.runs.push_back(report.timings);
    summary.round_trips.push_back(report.round_trips);
    total_ms.push_back(report.timings.t_total_us / 1000.0);
    inner_ms.push_back(report.timings.t_inner_us / 1000.0);
  }
  summary.t_total_ms = summarize(total_ms);
  summary.t_inner_ms = summarize(inner_ms);
  return summary;
}

}  // namespace eapfido
