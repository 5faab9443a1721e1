#include "eapfido.h"

#include <cstring>
#include <memory>
#include <numeric>
#include <string>

#include <nlohmann/json.hpp>

#include "eapfido/authenticator.hpp"
#include "eapfido/harness.hpp"
#include "eapfido/packet.hpp"
#include "eapfido/peer.hpp"
#include "eapfido/server.hpp"
#include "eapfido/store.hpp"

using namespace eapfido;

struct eapfido_store {
  std::shared_ptr<InMemoryCredentialStore> store;
};

struct eapfido_authenticator {
  std::shared_ptr<SoftAuthenticator> authenticator;
  std::optional<ReauthToken> token;
};

struct eapfido_peer {
  eapfido_authenticator* owner;
  EapPeer peer;
};

struct eapfido_server {
  EapServer server;
};

struct eapfido_harness {
  std::unique_ptr<Harness> harness;
};

struct eapfido_report {
  nlohmann::json json;
  bool success = false;
  bool expected = false;
  ErrorCode reason = ErrorCode::kOk;
  bool msk_match = false;
  int round_trips = 0;
  std::int64_t t_total_us = 0;
  std::int64_t t_inner_us = 0;
  std::vector<std::string> labels;
  std::size_t leaks = 0;
};

namespace {

thread_local std::string g_last_error;

int status_of(ErrorCode code) { return -static_cast<int>(code); }

int fail(int status, std::string detail) {
  g_last_error = std::move(detail);
  return status;
}

// Runs `body`, mapping exceptions to status codes.
template <typename Body>
int guarded(Body&& body) noexcept {
  try {
    g_last_error.clear();
    return body();
  } catch (const Error& e) {
    return fail(status_of(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(EAPFIDO_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(EAPFIDO_E_INTERNAL, e.what());
  }
}

int write_out(ByteView data, std::uint8_t* out, std::size_t cap, std::size_t* out_len) {
  if (!out_len) return fail(EAPFIDO_E_INVALID_ARGUMENT, "out_len is NULL");
  *out_len = data.size();
  if (!out || cap < data.size()) return fail(EAPFIDO_E_BUFFER_TOO_SMALL, "buffer too small");
  std::memcpy(out, data.data(), data.size());
  return EAPFIDO_OK;
}

int write_text(std::string_view text, char* out, std::size_t cap, std::size_t* out_len) {
  if (!out_len) return fail(EAPFIDO_E_INVALID_ARGUMENT, "out_len is NULL");
  *out_len = text.size();
  if (!out || cap < text.size() + 1) return fail(EAPFIDO_E_BUFFER_TOO_SMALL, "buffer too small");
  std::memcpy(out, text.data(), text.size());
  out[text.size()] = '\0';
  return EAPFIDO_OK;
}

bool packet_capacity_ok(const std::uint8_t* out, std::size_t cap, std::size_t* out_len) {
  if (out_len) *out_len = 0;
  return out && out_len && cap >= EAPFIDO_MAX_PACKET_SIZE;
}

HarnessOptions to_options(const eapfido_harness_options* o) {
  HarnessOptions options;
  if (!o) return options;
  if (o->rp_id) options.rp_id = o->rp_id;
  if (o->pin) options.pin = o->pin;
  if (o->server_side_user) options.server_side_user = o->server_side_user;
  if (o->discoverable_user) options.discoverable_user = o->discoverable_user;
  options.presence_prompt = o->presence_prompt != 0;
  if (o->cookie_ttl_seconds > 0) options.cookie_ttl = std::chrono::seconds(o->cookie_ttl_seconds);
  return options;
}

std::optional<std::uint64_t> opt_seed(const std::uint64_t* seed) {
  return seed ? std::optional<std::uint64_t>(*seed) : std::nullopt;
}

std::unique_ptr<eapfido_report> make_report(const ScenarioReport& r) {
  auto out = std::make_unique<eapfido_report>();
  out->json = to_json(r);
  out->success = r.success;
  out->expected = r.expected_outcome;
  out->reason = r.reason;
  out->msk_match = r.msk_match;
  out->round_trips = r.round_trips;
  out->t_total_us = r.timings.t_total_us;
  out->t_inner_us = r.timings.t_inner_us;
  for (const auto& f : r.transcript) out->labels.push_back(f.label());
  out->leaks = scan_transcript_for_secrets(r.transcript, r.secrets).size();
  out->json["leaks"] = out->leaks;
  return out;
}

std::unique_ptr<eapfido_report> make_report(const BenchSummary& b) {
  auto out = std::make_unique<eapfido_report>();
  out->json = to_json(b);
  out->success = b.all_success;
  out->expected = b.all_success;
  out->reason = b.all_success ? ErrorCode::kOk : ErrorCode::kInternal;
  out->msk_match = b.all_success;
  out->round_trips = b.round_trips.empty() ? 0 : b.round_trips.front();
  out->t_total_us = static_cast<std::int64_t>(b.t_total_ms.avg * 1000.0);
  out->t_inner_us = static_cast<std::int64_t>(b.t_inner_ms.avg * 1000.0);
  return out;
}

}  // namespace

extern "C" {

const char* eapfido_status_name(int status) {
  if (status == EAPFIDO_OK) return "Ok";
  if (status == EAPFIDO_E_BUFFER_TOO_SMALL) return "BufferTooSmall";
  if (status > 0) return "Unknown";
  auto name = to_string(static_cast<ErrorCode>(-status));
  // to_string returns literals, so data() is NUL-terminated.
  return name.data();
}

const char* eapfido_last_error(void) { return g_last_error.c_str(); }

int eapfido_packet_check(const uint8_t* data, size_t len) {
  if (!data && len) return fail(EAPFIDO_E_INVALID_ARGUMENT, "data is NULL");
  return guarded([&]() -> int {
    (void)decode(ByteView(data, len));
    return EAPFIDO_OK;
  });
}

int eapfido_packet_describe(const uint8_t* data, size_t len, char* out, size_t cap,
                            size_t* out_len) {
  if (!data && len) return fail(EAPFIDO_E_INVALID_ARGUMENT, "data is NULL");
  return guarded([&]() -> int {
    auto p = decode(ByteView(data, len));
    nlohmann::json fields = nlohmann::json::object();
    for (const auto& f : p.data) fields[std::string(key_name(f.key))] = f.value;
    nlohmann::json j{{"code", static_cast<int>(p.code)},
                     {"identifier", p.identifier},
                     {"op_code", static_cast<int>(p.op_code)},
                     {"fields", std::move(fields)}};
    return write_text(j.dump(), out, cap, out_len);
  });
}

int eapfido_store_create(eapfido_store** out) {
  if (!out) return fail(EAPFIDO_E_INVALID_ARGUMENT, "out is NULL");
  return guarded([&]() -> int {
    *out = new eapfido_store{std::make_shared<InMemoryCredentialStore>()};
    return EAPFIDO_OK;
  });
}

int eapfido_store_load(const char* path, eapfido_store** out) {
  if (!path || !out) return fail(EAPFIDO_E_INVALID_ARGUMENT, "path or out is NULL");
  return guarded([&]() -> int {
    *out = new eapfido_store{std::shared_ptr<InMemoryCredentialStore>(load_store(path))};
    return EAPFIDO_OK;
  });
}

int eapfido_store_save(const eapfido_store* store, const char* path) {
  if (!store || !path) return fail(EAPFIDO_E_INVALID_ARGUMENT, "store or path is NULL");
  return guarded([&]() -> int {
    save_store(*store->store, path);
    return EAPFIDO_OK;
  });
}

void eapfido_store_free(eapfido_store* store) { delete store; }

int eapfido_store_register_user(eapfido_store* store, const char* username) {
  if (!store || !username) return fail(EAPFIDO_E_INVALID_ARGUMENT, "store or username is NULL");
  return guarded([&]() -> int {
    store->store->register_user(username);
    return EAPFIDO_OK;
  });
}

int eapfido_store_register_credential(eapfido_store* store, const char* username,
                                      const uint8_t* credential_id, size_t id_len,
                                      const uint8_t* public_key, size_t key_len,
                                      int discoverable) {
  if (!store || !username || !credential_id || !public_key)
    return fail(EAPFIDO_E_INVALID_ARGUMENT, "NULL argument");
  return guarded([&]() -> int {
    PublicKey key{CredentialAlgorithm::kEd25519, Bytes(public_key, public_key + key_len)};
    store->store->register_credential(username, ByteView(credential_id, id_len), key,
                                      discoverable != 0);
    return EAPFIDO_OK;
  });
}

int eapfido_store_credential_counter(const eapfido_store* store, const uint8_t* credential_id,
                                     size_t id_len, uint32_t* counter) {
  if (!store || !credential_id || !counter) return fail(EAPFIDO_E_INVALID_ARGUMENT, "NULL argument");
  return guarded([&]() -> int {
    *counter = store->store->find_credential(ByteView(credential_id, id_len)).counter;
    return EAPFIDO_OK;
  });
}

int eapfido_store_has_user(const eapfido_store* store, const char* username) {
  if (!store || !username) return 0;
  try {
    store->store->find_user(username);
    return 1;
  } catch (const std::exception&) {
    return 0;
  }
}

int eapfido_store_user_handle(const eapfido_store* store, const char* username, uint8_t* out,
                              size_t cap, size_t* out_len) {
  if (!store || !username) return fail(EAPFIDO_E_INVALID_ARGUMENT, "NULL argument");
  return guarded([&]() -> int { return write_out(store->store->find_user(username).user_id, out, cap, out_len); });
}

int eapfido_authenticator_create(const char* pin, eapfido_authenticator** out) {
  if (!pin || !out) return fail(EAPFIDO_E_INVALID_ARGUMENT, "pin or out is NULL");
  return guarded([&]() -> int {
    *out = new eapfido_authenticator{std::make_shared<SoftAuthenticator>(pin), std::nullopt};
    return EAPFIDO_OK;
  });
}

int eapfido_authenticator_load(const char* path, const char* pin, eapfido_authenticator** out) {
  if (!path || !pin || !out) return fail(EAPFIDO_E_INVALID_ARGUMENT, "NULL argument");
  return guarded([&]() -> int {
    auto state = load_client_state(path);
    auto auth = std::make_shared<SoftAuthenticator>(pin);
    for (auto& c : state.credentials) auth->import_credential(std::move(c));
    *out = new eapfido_authenticator{std::move(auth), state.token};
    return EAPFIDO_OK;
  });
}

int eapfido_authenticator_save(const eapfido_authenticator* auth, const char* path) {
  if (!auth || !path) return fail(EAPFIDO_E_INVALID_ARGUMENT, "auth or path is NULL");
  return guarded([&]() -> int {
    save_client_state({auth->authenticator->credentials(), auth->token}, path);
    return EAPFIDO_OK;
  });
}

void eapfido_authenticator_free(eapfido_authenticator* auth) { delete auth; }

int eapfido_authenticator_make_credential(eapfido_authenticator* auth, const char* rp_id,
                                          const uint8_t* user_handle, size_t handle_len,
                                          int discoverable, uint8_t* credential_id, size_t id_cap,
                                          size_t* id_len, uint8_t* public_key, size_t key_cap,
                                          size_t* key_len) {
  if (!auth || !rp_id || (!user_handle && handle_len))
    return fail(EAPFIDO_E_INVALID_ARGUMENT, "NULL argument");
  if (!credential_id || id_cap < kCredentialIdSize || !public_key || key_cap < 32 || !id_len ||
      !key_len)
    return fail(EAPFIDO_E_BUFFER_TOO_SMALL, "credential id needs 16 bytes, public key 32");
  return guarded([&]() -> int {
    auto c = auth->authenticator->make_credential(rp_id, ByteView(user_handle, handle_len),
                                                  discoverable != 0);
    write_out(c.credential_id, credential_id, id_cap, id_len);
    return write_out(c.public_key.key, public_key, key_cap, key_len);
  });
}

int eapfido_authenticator_set_presence_prompt(eapfido_authenticator* auth, int enabled) {
  if (!auth) return fail(EAPFIDO_E_INVALID_ARGUMENT, "auth is NULL");
  auth->authenticator->set_presence_prompt(enabled != 0);
  return EAPFIDO_OK;
}

int eapfido_authenticator_has_token(const eapfido_authenticator* auth) {
  return auth && auth->token ? 1 : 0;
}

int eapfido_peer_create(eapfido_authenticator* auth, const char* identity, const char* pin,
                        int use_token, eapfido_peer** out) {
  if (!auth || !pin || !out) return fail(EAPFIDO_E_INVALID_ARGUMENT, "NULL argument");
  return guarded([&]() -> int {
    PeerConfig config{identity ? identity : "", use_token ? auth->token : std::nullopt,
                      auth->authenticator.get(), pin};
    *out = new eapfido_peer{auth, EapPeer(std::move(config))};
    return EAPFIDO_OK;
  });
}

void eapfido_peer_free(eapfido_peer* peer) { delete peer; }

int eapfido_peer_begin(eapfido_peer* peer, char* out, size_t cap, size_t* out_len) {
  if (!peer) return fail(EAPFIDO_E_INVALID_ARGUMENT, "peer is NULL");
  return guarded([&]() -> int { return write_text(peer->peer.begin(), out, cap, out_len); });
}

int eapfido_peer_handle(eapfido_peer* peer, const uint8_t* in, size_t in_len, uint8_t* out,
                        size_t cap, size_t* out_len) {
  if (!peer || (!in && in_len)) return fail(EAPFIDO_E_INVALID_ARGUMENT, "NULL argument");
  if (!packet_capacity_ok(out, cap, out_len))
    return fail(EAPFIDO_E_BUFFER_TOO_SMALL, "output needs EAPFIDO_MAX_PACKET_SIZE bytes");
  return guarded([&]() -> int {
    auto response = peer->peer.handle_bytes(ByteView(in, in_len));
    if (!response) {
      auto reason = peer->peer.failure_reason().value_or(ErrorCode::kStateError);
      return fail(status_of(reason), std::string(to_string(reason)));
    }
    return write_out(*response, out, cap, out_len);
  });
}

int eapfido_peer_on_success(eapfido_peer* peer, uint8_t msk[EAPFIDO_MSK_SIZE]) {
  if (!peer || !msk) return fail(EAPFIDO_E_INVALID_ARGUMENT, "NULL argument");
  return guarded([&]() -> int {
    auto key = peer->peer.on_success();
    std::memcpy(msk, key.data(), key.size());
    if (peer->peer.token()) peer->owner->token = peer->peer.token();
    return EAPFIDO_OK;
  });
}

int eapfido_peer_on_failure(eapfido_peer* peer) {
  if (!peer) return fail(EAPFIDO_E_INVALID_ARGUMENT, "peer is NULL");
  return guarded([&]() -> int {
    peer->peer.on_failure();
    return EAPFIDO_OK;
  });
}

int eapfido_server_create(eapfido_store* store, const char* rp_id, eapfido_server** out) {
  if (!store || !rp_id || !out) return fail(EAPFIDO_E_INVALID_ARGUMENT, "NULL argument");
  return guarded([&]() -> int {
    ServerConfig config;
    config.rp_id = rp_id;
    config.store = store->store.get();
    *out = new eapfido_server{EapServer(std::move(config))};
    return EAPFIDO_OK;
  });
}

void eapfido_server_free(eapfido_server* server) { delete server; }

int eapfido_server_on_identity(eapfido_server* server, const char* identity, uint8_t* out,
                               size_t cap, size_t* out_len) {
  if (!server || !identity) return fail(EAPFIDO_E_INVALID_ARGUMENT, "NULL argument");
  if (!packet_capacity_ok(out, cap, out_len))
    return fail(EAPFIDO_E_BUFFER_TOO_SMALL, "output needs EAPFIDO_MAX_PACKET_SIZE bytes");
  return guarded([&]() -> int { return write_out(encode(server->server.on_identity(identity)), out, cap, out_len); });
}

int eapfido_server_handle(eapfido_server* server, const uint8_t* in, size_t in_len, int* action,
                          uint8_t* out, size_t cap, size_t* out_len) {
  if (!server || !action || (!in && in_len)) return fail(EAPFIDO_E_INVALID_ARGUMENT, "NULL argument");
  if (!packet_capacity_ok(out, cap, out_len))
    return fail(EAPFIDO_E_BUFFER_TOO_SMALL, "output needs EAPFIDO_MAX_PACKET_SIZE bytes");
  return guarded([&]() -> int {
    auto step = server->server.handle_bytes(ByteView(in, in_len));
    switch (step.action) {
      case ServerStep::Action::kSendRequest:
        *action = EAPFIDO_ACTION_REQUEST;
        return write_out(step.packet, out, cap, out_len);
      case ServerStep::Action::kSendSuccess:
        *action = EAPFIDO_ACTION_SUCCESS;
        return EAPFIDO_OK;
      case ServerStep::Action::kSendFailure:
        break;
    }
    *action = EAPFIDO_ACTION_FAILURE;
    return EAPFIDO_OK;
  });
}

int eapfido_server_msk(const eapfido_server* server, uint8_t msk[EAPFIDO_MSK_SIZE]) {
  if (!server || !msk) return fail(EAPFIDO_E_INVALID_ARGUMENT, "NULL argument");
  return guarded([&]() -> int {
    const auto& key = server->server.msk();
    std::memcpy(msk, key.data(), key.size());
    return EAPFIDO_OK;
  });
}

int eapfido_server_result(const eapfido_server* server, char* out, size_t cap, size_t* out_len) {
  if (!server) return fail(EAPFIDO_E_INVALID_ARGUMENT, "server is NULL");
  return guarded([&]() -> int {
    auto r = server->server.result();
    nlohmann::json j{{"identity", r.identity ? nlohmann::json(*r.identity) : nlohmann::json(nullptr)},
                     {"success", r.success},
                     {"reason", r.success ? nlohmann::json(nullptr)
                                          : nlohmann::json(std::string(to_string(r.reason)))},
                     {"msk_fingerprint", r.msk_fingerprint},
                     {"reauthenticated", r.reauthenticated}};
    return write_text(j.dump(), out, cap, out_len);
  });
}

void eapfido_harness_options_init(eapfido_harness_options* options) {
  if (!options) return;
  static const HarnessOptions defaults;
  options->rp_id = defaults.rp_id.c_str();
  options->pin = defaults.pin.c_str();
  options->server_side_user = defaults.server_side_user.c_str();
  options->discoverable_user = defaults.discoverable_user.c_str();
  options->presence_prompt = defaults.presence_prompt ? 1 : 0;
  options->cookie_ttl_seconds = defaults.cookie_ttl.count();
}

int eapfido_harness_create_seeded(uint64_t seed, const eapfido_harness_options* options,
                                  eapfido_harness** out) {
  if (!out) return fail(EAPFIDO_E_INVALID_ARGUMENT, "out is NULL");
  return guarded([&]() -> int {
    *out = new eapfido_harness{Harness::seeded(seed, to_options(options))};
    return EAPFIDO_OK;
  });
}

int eapfido_harness_create(eapfido_store* store, eapfido_authenticator* auth,
                           const eapfido_harness_options* options, eapfido_harness** out) {
  if (!store || !auth || !out) return fail(EAPFIDO_E_INVALID_ARGUMENT, "NULL argument");
  return guarded([&]() -> int {
    *out = new eapfido_harness{
        std::make_unique<Harness>(store->store, auth->authenticator, to_options(options))};
    return EAPFIDO_OK;
  });
}

void eapfido_harness_free(eapfido_harness* harness) { delete harness; }

int eapfido_harness_save(const eapfido_harness* harness, const char* store_path,
                         const char* client_path) {
  if (!harness) return fail(EAPFIDO_E_INVALID_ARGUMENT, "harness is NULL");
  return guarded([&]() -> int {
    auto& h = *harness->harness;
    if (store_path) save_store(h.store(), store_path);
    if (client_path) save_client_state({h.authenticator().credentials(), h.peer_token()}, client_path);
    return EAPFIDO_OK;
  });
}

int eapfido_harness_run_scenario(eapfido_harness* harness, const char* kind, const uint64_t* seed,
                                 eapfido_report** out) {
  if (!harness || !kind || !out) return fail(EAPFIDO_E_INVALID_ARGUMENT, "NULL argument");
  auto k = scenario_from_string(kind);
  if (!k) return fail(EAPFIDO_E_INVALID_ARGUMENT, std::string("unknown scenario: ") + kind);
  return guarded([&]() -> int {
    *out = make_report(harness->harness->run_scenario(*k, opt_seed(seed))).release();
    return EAPFIDO_OK;
  });
}

int eapfido_harness_run_attack(eapfido_harness* harness, const char* kind, const uint64_t* seed,
                               eapfido_report** out) {
  if (!harness || !kind || !out) return fail(EAPFIDO_E_INVALID_ARGUMENT, "NULL argument");
  auto k = attack_from_string(kind);
  if (!k) return fail(EAPFIDO_E_INVALID_ARGUMENT, std::string("unknown attack: ") + kind);
  return guarded([&]() -> int {
    *out = make_report(harness->harness->run_attack(*k, opt_seed(seed))).release();
    return EAPFIDO_OK;
  });
}

int eapfido_harness_bench(eapfido_harness* harness, const char* kind, int n, const uint64_t* seed,
                          eapfido_report** out) {
  if (!harness || !kind || !out) return fail(EAPFIDO_E_INVALID_ARGUMENT, "NULL argument");
  auto k = scenario_from_string(kind);
  if (!k) return fail(EAPFIDO_E_INVALID_ARGUMENT, std::string("unknown scenario: ") + kind);
  return guarded([&]() -> int {
    *out = make_report(harness->harness->measure(*k, n, opt_seed(seed))).release();
    return EAPFIDO_OK;
  });
}

void eapfido_report_free(eapfido_report* report) { delete report; }

int eapfido_report_expected(const eapfido_report* r) { return r && r->expected ? 1 : 0; }
int eapfido_report_success(const eapfido_report* r) { return r && r->success ? 1 : 0; }
int eapfido_report_reason(const eapfido_report* r) {
  return r ? status_of(r->reason) : EAPFIDO_E_INVALID_ARGUMENT;
}
int eapfido_report_msk_match(const eapfido_report* r) { return r && r->msk_match ? 1 : 0; }
int eapfido_report_round_trips(const eapfido_report* r) { return r ? r->round_trips : 0; }
int64_t eapfido_report_t_total_us(const eapfido_report* r) { return r ? r->t_total_us : 0; }
int64_t eapfido_report_t_inner_us(const eapfido_report* r) { return r ? r->t_inner_us : 0; }
size_t eapfido_report_frame_count(const eapfido_report* r) { return r ? r->labels.size() : 0; }
size_t eapfido_report_leak_count(const eapfido_report* r) { return r ? r->leaks : 0; }

int eapfido_report_frame_label(const eapfido_report* r, size_t index, char* out, size_t cap,
                               size_t* out_len) {
  if (!r || index >= r->labels.size()) return fail(EAPFIDO_E_INVALID_ARGUMENT, "bad index");
  return write_text(r->labels[index], out, cap, out_len);
}

int eapfido_report_json(const eapfido_report* r, char* out, size_t cap, size_t* out_len) {
  if (!r) return fail(EAPFIDO_E_INVALID_ARGUMENT, "report is NULL");
  return guarded([&]() -> int { return write_text(r->json.dump(2), out, cap, out_len); });
}

}  // extern "C"
