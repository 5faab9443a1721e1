#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "eapfido/authenticator.hpp"
#include "eapfido/error.hpp"
#include "eapfido/packet.hpp"
#include "eapfido/peer.hpp"
#include "eapfido/server.hpp"
#include "eapfido/store.hpp"

namespace eapfido {

enum class Direction { kToPeer, kToServer };

// Outer EAP frames are symbolic; only kMethod frames carry EAP-FIDO bytes.
enum class FrameKind { kIdentityRequest, kIdentityResponse, kMethod, kSuccess, kFailure };

struct Frame {
  Direction direction = Direction::kToPeer;
  FrameKind kind = FrameKind::kMethod;
  Bytes payload;  // identity string for kIdentityResponse, packet bytes for kMethod

  // "Identity-Request", "FidoStart-Response", ... ; malformed method frames
  // are labelled "Method".
  std::string label() const;
};

// In-order, lossless channel standing in for the PEAP/EAP-TTLS inner tunnel.
// The interceptor sees every frame before delivery and may rewrite it or
// drop it (return nullopt).
class TunnelChannel {
 public:
  using Interceptor = std::function<std::optional<Frame>(Frame)>;

  void set_interceptor(Interceptor interceptor) { interceptor_ = std::move(interceptor); }
  void send(Frame frame);
  std::optional<Frame> receive(Direction to);
  const std::vector<Frame>& transcript() const { return transcript_; }

 private:
  Interceptor interceptor_;
  std::deque<Frame> to_peer_;
  std::deque<Frame> to_server_;
  std::vector<Frame> transcript_;
};

enum class ScenarioKind { kServerSide, kDiscoverable, kReauth };
enum class AttackKind { kMitmEcdh, kReplayAssertion, kStaleCounter, kRogueChallenge };

std::string_view to_string(ScenarioKind kind);
std::string_view to_string(AttackKind kind);
std::optional<ScenarioKind> scenario_from_string(std::string_view name);
std::optional<AttackKind> attack_from_string(std::string_view name);
ErrorCode expected_reason(AttackKind kind);

struct Timings {
  std::int64_t t_total_us = 0;  // Identity-Request sent .. Success handled by the peer
  std::int64_t t_inner_us = 0;  // first FIDO-Start request at the peer .. same end point
};

struct Secret {
  std::string label;
  Bytes value;
};

struct ScenarioReport {
  std::string name;
  std::optional<std::uint64_t> seed;
  bool success = false;
  ErrorCode reason = ErrorCode::kOk;
  std::optional<ErrorCode> expected_failure;  // attacks only
  bool expected_outcome = false;              // success for scenarios, expected reason for attacks
  std::optional<std::string> identity;
  bool msk_match = false;
  std::string msk_fingerprint;
  int round_trips = 0;
  Timings timings;
  std::optional<Timings> primer_timings;  // full run preceding a re-authentication
  std::vector<Frame> transcript;

  // Secret values observed during the run, kept for leak scanning. Never
  // serialized.
  std::vector<Secret> secrets;
};

nlohmann::json to_json(const ScenarioReport& report);

// Labels of the secrets that appear in any frame, raw or inside a decoded
// base64 value. Empty means no leak.
std::vector<std::string> scan_transcript_for_secrets(const std::vector<Frame>& transcript,
                                                     const std::vector<Secret>& secrets);

struct Stats {
  double avg = 0, stdev = 0, max = 0, min = 0;
};

Stats summarize(const std::vector<double>& values);

struct BenchSummary {
  ScenarioKind kind = ScenarioKind::kServerSide;
  int n = 0;
  bool all_success = false;
  std::vector<Timings> runs;
  std::vector<int> round_trips;
  Stats t_total_ms;
  Stats t_inner_ms;
};

nlohmann::json to_json(const BenchSummary& summary);

struct HarnessOptions {
  std::string rp_id = "eap-fido.example";
  std::string pin = "4913-canary-pin";
  std::string server_side_user = "john-smith";
  std::string discoverable_user = "jane-doe";
  bool presence_prompt = true;
  std::chrono::seconds cookie_ttl = kDefaultCookieTtl;
};

// Wires peer, server, authenticator and store over a TunnelChannel.
// Runs given a seed draw every nonce, key and identifier from SeededRandom
// and are reproducible from the same starting state; runs without a seed use
// system entropy.
class Harness {
 public:
  // Fresh fixture: one server-side credential for `server_side_user`, one
  // discoverable credential for `discoverable_user`, both on one authenticator.
  // The fixture's store and authenticator draw from a stream owned by the
  // harness and must not outlive it.
  static std::unique_ptr<Harness> seeded(std::uint64_t seed, HarnessOptions options = {});

  Harness(std::shared_ptr<CredentialStore> store, std::shared_ptr<SoftAuthenticator> authenticator,
          HarnessOptions options);

  ScenarioReport run_scenario(ScenarioKind kind, std::optional<std::uint64_t> seed = std::nullopt);
  ScenarioReport run_attack(AttackKind kind, std::optional<std::uint64_t> seed = std::nullopt);
  BenchSummary measure(ScenarioKind kind, int n, std::optional<std::uint64_t> seed = std::nullopt);

  void set_presence_prompt(bool enabled);

  CredentialStore& store() { return *store_; }
  SoftAuthenticator& authenticator() { return *authenticator_; }
  const HarnessOptions& options() const { return options_; }
  const std::optional<ReauthToken>& peer_token() const { return peer_token_; }

 private:
  struct RunResult;

  RunResult run_full(const std::string& identity, std::optional<ReauthToken> token,
                     SoftAuthenticator& authenticator, std::optional<std::uint64_t> seed,
                     std::string_view phase, TunnelChannel::Interceptor interceptor = {});
  ScenarioReport attack_mitm(std::optional<std::uint64_t> seed);
  ScenarioReport attack_replay(std::optional<std::uint64_t> seed);
  ScenarioReport attack_stale_counter(std::optional<std::uint64_t> seed);
  ScenarioReport attack_rogue_challenge(std::optional<std::uint64_t> seed);
  std::vector<Secret> static_secrets(const SoftAuthenticator& authenticator) const;
  std::unique_ptr<RandomSource> make_rng(std::optional<std::uint64_t> seed,
                                         std::string_view label) const;

  std::shared_ptr<CredentialStore> store_;
  std::shared_ptr<SoftAuthenticator> authenticator_;
  HarnessOptions options_;
  std::unique_ptr<RandomSource> fixture_rng_;
  std::optional<ReauthToken> peer_token_;
};

}  // namespace eapfido
