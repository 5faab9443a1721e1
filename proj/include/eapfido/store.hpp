#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "eapfido/authenticator.hpp"
#include "eapfido/bytes.hpp"
#include "eapfido/crypto.hpp"

namespace eapfido {

using Clock = std::chrono::system_clock;
using TimePoint = Clock::time_point;

inline constexpr std::size_t kUserIdSize = 16;

// "anonymous" and "?" both select the discoverable-credential flow.
bool is_anonymous_identity(std::string_view identity);

struct UserRecord {
  Bytes user_id;  // doubles as the FIDO2 user handle
  std::string username;

  bool operator==(const UserRecord&) const = default;
};

struct AuthenticatorRecord {
  Bytes credential_id;
  Bytes user_id;
  PublicKey public_key;
  std::uint32_t counter = 0;
  bool discoverable = false;

  bool operator==(const AuthenticatorRecord&) const = default;
};

struct SessionRecord {
  std::string cookie_id;
  Digest cookie_digest{};
  std::optional<std::string> identity;
  TimePoint issued_at;
  TimePoint expires_at;

  bool operator==(const SessionRecord&) const = default;
};

// Server-side persistence: users, their credentials ("authenticator"
// table) and fast re-authentication sessions. Every operation is atomic.
class CredentialStore {
 public:
  virtual ~CredentialStore() = default;

  virtual UserRecord register_user(std::string_view username) = 0;
  virtual AuthenticatorRecord register_credential(std::string_view username,
                                                  ByteView credential_id,
                                                  const PublicKey& public_key,
                                                  bool discoverable) = 0;

  // Lookups throw NotFound.
  virtual UserRecord find_user(std::string_view username) const = 0;
  virtual UserRecord find_user_by_handle(ByteView user_handle) const = 0;
  virtual AuthenticatorRecord find_credential(ByteView credential_id) const = 0;
  virtual std::vector<AuthenticatorRecord> credentials_for(std::string_view username) const = 0;
  virtual std::vector<AuthenticatorRecord> credentials_for_handle(ByteView user_handle) const = 0;
  virtual bool has_discoverable_credentials() const = 0;

  // Compare-and-set: succeeds iff new_counter > stored.
  virtual void update_counter(ByteView credential_id, std::uint32_t new_counter) = 0;

  virtual SessionRecord create_session(std::string cookie_id, const Digest& cookie_digest,
                                       std::chrono::seconds ttl, TimePoint now) = 0;
  virtual void bind_identity(std::string_view cookie_id, std::string_view username) = 0;
  // Throws UnknownCookieId, Expired (and purges the record) or Unbound.
  virtual SessionRecord validate_session(std::string_view cookie_id, TimePoint now) = 0;

  virtual std::vector<UserRecord> users() const = 0;
  virtual std::vector<AuthenticatorRecord> credentials() const = 0;
  virtual std::vector<SessionRecord> sessions() const = 0;
};

class InMemoryCredentialStore final : public CredentialStore {
 public:
  explicit InMemoryCredentialStore(RandomSource& rng = system_random());

  UserRecord register_user(std::string_view username) override;
  AuthenticatorRecord register_credential(std::string_view username, ByteView credential_id,
                                          const PublicKey& public_key, bool discoverable) override;

  UserRecord find_user(std::string_view username) const override;
  UserRecord find_user_by_handle(ByteView user_handle) const override;
  AuthenticatorRecord find_credential(ByteView credential_id) const override;
  std::vector<AuthenticatorRecord> credentials_for(std::string_view username) const override;
  std::vector<AuthenticatorRecord> credentials_for_handle(ByteView user_handle) const override;
  bool has_discoverable_credentials() const override;

  void update_counter(ByteView credential_id, std::uint32_t new_counter) override;

  SessionRecord create_session(std::string cookie_id, const Digest& cookie_digest,
                               std::chrono::seconds ttl, TimePoint now) override;
  void bind_identity(std::string_view cookie_id, std::string_view username) override;
  SessionRecord validate_session(std::string_view cookie_id, TimePoint now) override;

  std::vector<UserRecord> users() const override;
  std::vector<AuthenticatorRecord> credentials() const override;
  std::vector<SessionRecord> sessions() const override;

  // Bulk load used by the file reader. Enforces the same integrity rules.
  void restore(const std::vector<UserRecord>& users,
               const std::vector<AuthenticatorRecord>& credentials,
               const std::vector<SessionRecord>& sessions);

 private:
  std::vector<AuthenticatorRecord> credentials_for_user_id_locked(const Bytes& user_id) const;
  void insert_user_locked(UserRecord user);
  void insert_credential_locked(AuthenticatorRecord record);

  mutable std::mutex mu_;
  RandomSource* rng_;
  std::map<std::string, UserRecord, std::less<>> users_by_name_;
  std::map<Bytes, std::string> name_by_user_id_;
  std::map<Bytes, AuthenticatorRecord> credentials_;  // by credential_id
  std::map<std::string, SessionRecord, std::less<>> sessions_;
};

// Line-oriented text formats, one record per line:
//
//   eapfido-store 1
//   user <user_id hex> <username>
//   credential <credential_id b64> <user_id hex> <alg> <public_key b64> <counter> <0|1>
//   session <cookie_id> <digest hex> <username|-> <issued_at us> <expires_at us>
//
// Records are written sorted by key, so save(load(f)) == f byte for byte.
void save_store(const CredentialStore& store, const std::filesystem::path& path);
std::unique_ptr<InMemoryCredentialStore> load_store(const std::filesystem::path& path,
                                                    RandomSource& rng = system_random());
std::string serialize_store(const CredentialStore& store);
std::unique_ptr<InMemoryCredentialStore> parse_store(std::string_view text,
                                                     RandomSource& rng = system_random());

// Peer-side fast re-authentication token.
struct ReauthToken {
  std::string cookie_id;
  Digest session_cookie{};

  bool operator==(const ReauthToken&) const = default;
};

// Supplicant-side state: the soft authenticator's credentials and the
// re-authentication token.
//
//   eapfido-client 1
//   credential <credential_id b64> <rp_id> <user_handle b64|-> <alg> <private b64> <counter> <0|1>
//   token <cookie_id> <session_cookie hex>
struct ClientState {
  std::vector<StoredCredential> credentials;
  std::optional<ReauthToken> token;
};

std::string serialize_client_state(const ClientState& state);
ClientState parse_client_state(std::string_view text);
void save_client_state(const ClientState& state, const std::filesystem::path& path);
ClientState load_client_state(const std::filesystem::path& path);

}  // namespace eapfido
