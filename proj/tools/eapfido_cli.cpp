// eapfido: runs EAP-FIDO scenarios, attacks and benchmarks through the C API.
//
// Exit status: 0 iff the run reached its expected outcome, 1 otherwise,
// 2 for usage or I/O errors.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "eapfido.h"

namespace {

constexpr int kExitExpected = 0;
constexpr int kExitUnexpected = 1;
constexpr int kExitError = 2;

struct Options {
  std::string store_path;
  std::string client_path;
  std::string report_path = "eapfido-report.json";
  std::string rp_id = "eap-fido.example";
  std::string pin = "4913-canary-pin";
  std::string user = "john-smith";
  std::string discoverable_user = "jane-doe";
  std::uint64_t fixture_seed = 1;
  bool no_up = false;
};

struct Deleter {
  void operator()(eapfido_store* p) const { eapfido_store_free(p); }
  void operator()(eapfido_authenticator* p) const { eapfido_authenticator_free(p); }
  void operator()(eapfido_harness* p) const { eapfido_harness_free(p); }
  void operator()(eapfido_report* p) const { eapfido_report_free(p); }
};
template <typename T>
using Handle = std::unique_ptr<T, Deleter>;

class CliError : public std::runtime_error {
 public:
  CliError(const std::string& what, int status)
      : std::runtime_error(what + ": " + eapfido_status_name(status) +
                           (*eapfido_last_error() ? std::string(" (") + eapfido_last_error() + ")"
                                                  : std::string())) {}
};

void check(int status, const std::string& what) {
  if (status != EAPFIDO_OK) throw CliError(what, status);
}

std::string client_path(const Options& o) {
  return o.client_path.empty() ? o.store_path + ".client" : o.client_path;
}

std::string report_json(const eapfido_report* report) {
  std::size_t len = 0;
  eapfido_report_json(report, nullptr, 0, &len);
  std::string text(len + 1, '\0');
  check(eapfido_report_json(report, text.data(), text.size(), &len), "report");
  text.resize(len);
  return text;
}

void write_report(const Options& o, const std::string& json) {
  if (o.report_path.empty()) return;
  std::ofstream out(o.report_path, std::ios::trunc);
  out << json << '\n';
  if (!out) throw std::runtime_error("cannot write report " + o.report_path);
}

eapfido_harness_options harness_options(const Options& o) {
  eapfido_harness_options h;
  eapfido_harness_options_init(&h);
  h.rp_id = o.rp_id.c_str();
  h.pin = o.pin.c_str();
  h.server_side_user = o.user.c_str();
  h.discoverable_user = o.discoverable_user.c_str();
  h.presence_prompt = o.no_up ? 0 : 1;
  return h;
}

// With --store the persisted store and client state are used; otherwise a
// seeded in-memory fixture.
Handle<eapfido_harness> open_harness(const Options& o) {
  auto options = harness_options(o);
  eapfido_harness* raw = nullptr;
  if (o.store_path.empty()) {
    check(eapfido_harness_create_seeded(o.fixture_seed, &options, &raw), "fixture");
    return Handle<eapfido_harness>(raw);
  }
  eapfido_store* store = nullptr;
  check(eapfido_store_load(o.store_path.c_str(), &store), "load " + o.store_path);
  Handle<eapfido_store> store_handle(store);
  eapfido_authenticator* auth = nullptr;
  check(eapfido_authenticator_load(client_path(o).c_str(), o.pin.c_str(), &auth),
        "load " + client_path(o));
  Handle<eapfido_authenticator> auth_handle(auth);
  check(eapfido_harness_create(store, auth, &options, &raw), "harness");
  return Handle<eapfido_harness>(raw);
}

void persist(const Options& o, const eapfido_harness* h) {
  if (o.store_path.empty()) return;
  check(eapfido_harness_save(h, o.store_path.c_str(), client_path(o).c_str()), "save");
}

void print_row(const std::string& key, const std::string& value) {
  std::cout << std::left << std::setw(14) << key << value << '\n';
}

int print_report(const Options& o, const eapfido_report* r) {
  auto json = report_json(r);
  auto j = nlohmann::json::parse(json);
  bool success = eapfido_report_success(r);
  print_row("scenario", j.value("scenario", ""));
  print_row("outcome", success ? "Success"
                               : std::string("Failure(") +
                                     eapfido_status_name(eapfido_report_reason(r)) + ")");
  if (j.contains("expected_reason")) print_row("expected", j["expected_reason"].get<std::string>());
  if (j["identity"].is_string()) print_row("identity", j["identity"].get<std::string>());
  print_row("msk_match", eapfido_report_msk_match(r) ? "yes" : "no");
  print_row("round_trips", std::to_string(eapfido_report_round_trips(r)));
  print_row("t_total_us", std::to_string(eapfido_report_t_total_us(r)));
  print_row("t_inner_us", std::to_string(eapfido_report_t_inner_us(r)));
  print_row("leaks", std::to_string(eapfido_report_leak_count(r)));
  std::string frames;
  for (std::size_t i = 0; i < eapfido_report_frame_count(r); ++i) {
    char label[64];
    std::size_t len = 0;
    check(eapfido_report_frame_label(r, i, label, sizeof label, &len), "frame");
    frames += (i ? " > " : "") + std::string(label, len);
  }
  print_row("transcript", frames);
  bool expected = eapfido_report_expected(r);
  print_row("verdict", expected ? "as expected" : "UNEXPECTED");
  write_report(o, json);
  return expected ? kExitExpected : kExitUnexpected;
}

int print_bench(const Options& o, const eapfido_report* r) {
  auto json = report_json(r);
  auto j = nlohmann::json::parse(json);
  std::cout << "scenario " << j["scenario"].get<std::string>() << ", n=" << j["n"].get<int>()
            << ", all_success=" << (j["all_success"].get<bool>() ? "yes" : "no") << '\n';
  std::cout << std::left << std::setw(10) << "phase" << std::right << std::setw(12) << "avg ms"
            << std::setw(12) << "stdev" << std::setw(12) << "max" << std::setw(12) << "min" << '\n';
  for (const char* phase : {"t_total_ms", "t_inner_ms"}) {
    const auto& s = j[phase];
    std::cout << std::left << std::setw(10) << std::string(phase).substr(0, 7) << std::right
              << std::fixed << std::setprecision(3) << std::setw(12) << s["avg"].get<double>()
              << std::setw(12) << s["stdev"].get<double>() << std::setw(12)
              << s["max"].get<double>() << std::setw(12) << s["min"].get<double>() << '\n';
  }
  write_report(o, json);
  return eapfido_report_expected(r) ? kExitExpected : kExitUnexpected;
}

int cmd_register(const Options& o, bool discoverable) {
  if (o.store_path.empty()) throw std::runtime_error("register requires --store");
  eapfido_store* store = nullptr;
  if (std::filesystem::exists(o.store_path))
    check(eapfido_store_load(o.store_path.c_str(), &store), "load " + o.store_path);
  else
    check(eapfido_store_create(&store), "store");
  Handle<eapfido_store> store_handle(store);

  eapfido_authenticator* auth = nullptr;
  if (std::filesystem::exists(client_path(o)))
    check(eapfido_authenticator_load(client_path(o).c_str(), o.pin.c_str(), &auth), "load client");
  else
    check(eapfido_authenticator_create(o.pin.c_str(), &auth), "authenticator");
  Handle<eapfido_authenticator> auth_handle(auth);

  if (!eapfido_store_has_user(store, o.user.c_str()))
    check(eapfido_store_register_user(store, o.user.c_str()), "register user " + o.user);
  std::uint8_t handle[64];
  std::size_t handle_len = 0;
  check(eapfido_store_user_handle(store, o.user.c_str(), handle, sizeof handle, &handle_len),
        "user handle");

  std::uint8_t id[16], key[32];
  std::size_t id_len = 0, key_len = 0;
  check(eapfido_authenticator_make_credential(auth, o.rp_id.c_str(), handle, handle_len,
                                              discoverable ? 1 : 0, id, sizeof id, &id_len, key,
                                              sizeof key, &key_len),
        "make credential");
  check(eapfido_store_register_credential(store, o.user.c_str(), id, id_len, key, key_len,
                                          discoverable ? 1 : 0),
        "register credential");
  check(eapfido_store_save(store, o.store_path.c_str()), "save " + o.store_path);
  check(eapfido_authenticator_save(auth, client_path(o).c_str()), "save " + client_path(o));

  static const char* hex = "0123456789abcdef";
  std::string id_hex;
  for (std::size_t i = 0; i < id_len; ++i) {
    id_hex += hex[id[i] >> 4];
    id_hex += hex[id[i] & 15];
  }
  print_row("user", o.user);
  print_row("credential", id_hex);
  print_row("discoverable", discoverable ? "yes" : "no");
  print_row("rp_id", o.rp_id);
  return kExitExpected;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"EAP-FIDO scenario runner"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--store", o.store_path, "Credential store file; omit for a seeded in-memory fixture");
  app.add_option("--client", o.client_path, "Client state file (default: <store>.client)");
  app.add_option("--report", o.report_path, "JSON report file (empty to skip)");
  app.add_option("--rp-id", o.rp_id, "Relying party id");
  app.add_option("--pin", o.pin, "Authenticator PIN");
  app.add_option("--user", o.user, "Server-side credential user");
  app.add_option("--discoverable-user", o.discoverable_user, "Discoverable credential user");
  app.add_option("--fixture-seed", o.fixture_seed, "Seed of the in-memory fixture");

  bool discoverable = false;
  auto* reg = app.add_subcommand("register", "Register a user and a new credential in --store");
  reg->add_flag("--discoverable", discoverable, "Create a discoverable credential");

  std::string scenario;
  std::uint64_t seed = 0;
  auto* run = app.add_subcommand("run", "Run one authentication scenario");
  run->add_option("scenario", scenario, "server_side | discoverable | reauth")->required();
  auto* run_seed = run->add_option("--seed", seed, "Run seed");
  run->add_flag("--no-up", o.no_up, "Disable the user presence prompt");

  std::string attack;
  auto* atk = app.add_subcommand("attack", "Run one attack scenario");
  atk->add_option("kind", attack, "mitm_ecdh | replay_assertion | stale_counter | rogue_challenge")
      ->required();
  auto* atk_seed = atk->add_option("--seed", seed, "Run seed");

  int reps = 20;
  auto* bench = app.add_subcommand("bench", "Measure a scenario over repeated runs");
  bench->add_option("scenario", scenario, "server_side | discoverable | reauth")->required();
  bench->add_option("-n", reps, "Repetitions")->check(CLI::PositiveNumber);
  auto* bench_seed = bench->add_option("--seed", seed, "Seed of the first run");
  bench->add_flag("--no-up", o.no_up, "Disable the user presence prompt");

  CLI11_PARSE(app, argc, argv);

  try {
    if (reg->parsed()) return cmd_register(o, discoverable);

    auto h = open_harness(o);
    eapfido_report* raw = nullptr;
    int code = kExitError;
    auto seed_ptr = [&](CLI::Option* opt) { return opt->count() ? &seed : nullptr; };
    if (run->parsed()) {
      check(eapfido_harness_run_scenario(h.get(), scenario.c_str(), seed_ptr(run_seed), &raw),
            "run " + scenario);
      Handle<eapfido_report> report(raw);
      code = print_report(o, report.get());
    } else if (atk->parsed()) {
      check(eapfido_harness_run_attack(h.get(), attack.c_str(), seed_ptr(atk_seed), &raw),
            "attack " + attack);
      Handle<eapfido_report> report(raw);
      code = print_report(o, report.get());
    } else if (bench->parsed()) {
      check(eapfido_harness_bench(h.get(), scenario.c_str(), reps, seed_ptr(bench_seed), &raw),
            "bench " + scenario);
      Handle<eapfido_report> report(raw);
      code = print_bench(o, report.get());
    }
    persist(o, h.get());
    return code;
  } catch (const std::exception& e) {
    std::cerr << "eapfido: " << e.what() << '\n';
    return kExitError;
  }
}
