#include "eapfido/store.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "eapfido/error.hpp"

namespace eapfido {

namespace {

constexpr std::string_view kStoreHeader = "eapfido-store 1";
constexpr std::string_view kClientHeader = "eapfido-client 1";
constexpr std::string_view kUnbound = "-";

bool valid_username(std::string_view name) {
  if (name.empty() || name == kUnbound || is_anonymous_identity(name)) return false;
  return std::all_of(name.begin(), name.end(), [](char c) { return c > 0x20 && c < 0x7f; });
}

std::vector<std::string_view> fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos <= line.size()) {
    auto next = line.find(' ', pos);
    if (next == std::string_view::npos) next = line.size();
    out.push_back(line.substr(pos, next - pos));
    pos = next + 1;
  }
  return out;
}

[[noreturn]] void parse_error(std::size_t line_no, const std::string& what) {
  throw Error(ErrorCode::kParseError, "line " + std::to_string(line_no) + ": " + what);
}

template <typename Int>
Int parse_int(std::string_view text, std::size_t line_no) {
  Int value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) parse_error(line_no, "bad integer");
  return value;
}

Bytes parse_hex(std::string_view text, std::size_t line_no) {
  auto v = from_hex(text);
  if (!v) parse_error(line_no, "bad hex");
  return *v;
}

Bytes parse_b64(std::string_view text, std::size_t line_no) {
  auto v = base64_decode(text);
  if (!v) parse_error(line_no, "bad base64");
  return *v;
}

Digest parse_digest(std::string_view text, std::size_t line_no) {
  auto bytes = parse_hex(text, line_no);
  if (bytes.size() != sizeof(Digest)) parse_error(line_no, "bad digest length");
  Digest d{};
  std::copy(bytes.begin(), bytes.end(), d.begin());
  return d;
}

bool parse_flag(std::string_view text, std::size_t line_no) {
  if (text == "1") return true;
  if (text == "0") return false;
  parse_error(line_no, "bad flag");
}

CredentialAlgorithm parse_algorithm(std::string_view text, std::size_t line_no) {
  if (text == to_string(CredentialAlgorithm::kEd25519)) return CredentialAlgorithm::kEd25519;
  parse_error(line_no, "unknown algorithm");
}

std::int64_t to_micros(TimePoint t) {
  return std::chrono::duration_cast<std::chrono::microseconds>(t.time_since_epoch()).count();
}

TimePoint from_micros(std::int64_t us) {
  return TimePoint(std::chrono::duration_cast<Clock::duration>(std::chrono::microseconds(us)));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomically(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIoError, "cannot write " + tmp.string());
    out << contents;
    if (!out.flush()) throw Error(ErrorCode::kIoError, "write failed " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIoError, ec.message());
}

template <typename Fn>
void for_each_line(std::string_view text, std::string_view header, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool saw_header = false;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    if (!saw_header) {
      if (line != header) parse_error(line_no, "missing header");
      saw_header = true;
      continue;
    }
    fn(fields(line), line_no);
  }
  if (!saw_header) parse_error(line_no, "missing header");
}

}  // namespace

bool is_anonymous_identity(std::string_view identity) {
  return identity == "anonymous" || identity == "?";
}

InMemoryCredentialStore::InMemoryCredentialStore(RandomSource& rng) : rng_(&rng) {}

void InMemoryCredentialStore::insert_user_locked(UserRecord user) {
  if (!valid_username(user.username)) throw Error(ErrorCode::kInvalidUsername, user.username);
  if (users_by_name_.count(user.username)) throw Error(ErrorCode::kDuplicateUsername, user.username);
  if (name_by_user_id_.count(user.user_id)) throw Error(ErrorCode::kInvalidArgument, "duplicate user_id");
  name_by_user_id_[user.user_id] = user.username;
  users_by_name_.emplace(user.username, std::move(user));
}

void InMemoryCredentialStore::insert_credential_locked(AuthenticatorRecord record) {
  if (record.credential_id.empty()) throw Error(ErrorCode::kInvalidArgument, "empty credential id");
  if (!name_by_user_id_.count(record.user_id)) throw Error(ErrorCode::kUnknownUser);
  if (credentials_.count(record.credential_id)) throw Error(ErrorCode::kDuplicateCredentialId);
  auto key = record.credential_id;
  credentials_.emplace(std::move(key), std::move(record));
}

UserRecord InMemoryCredentialStore::register_user(std::string_view username) {
  std::lock_guard lock(mu_);
  UserRecord user;
  user.username = std::string(username);
  if (!valid_username(user.username)) throw Error(ErrorCode::kInvalidUsername, user.username);
  if (users_by_name_.count(user.username)) throw Error(ErrorCode::kDuplicateUsername, user.username);
  do {
    user.user_id = rng_->bytes(kUserIdSize);
  } while (name_by_user_id_.count(user.user_id));
  insert_user_locked(user);
  return user;
}

AuthenticatorRecord InMemoryCredentialStore::register_credential(std::string_view username,
                                                                 ByteView credential_id,
                                                                 const PublicKey& public_key,
                                                                 bool discoverable) {
  std::lock_guard lock(mu_);
  auto it = users_by_name_.find(username);
  if (it == users_by_name_.end()) throw Error(ErrorCode::kUnknownUser, std::string(username));
  AuthenticatorRecord record{to_bytes(credential_id), it->second.user_id, public_key, 0, discoverable};
  insert_credential_locked(record);
  return record;
}

UserRecord InMemoryCredentialStore::find_user(std::string_view username) const {
  std::lock_guard lock(mu_);
  auto it = users_by_name_.find(username);
  if (it == users_by_name_.end()) throw Error(ErrorCode::kNotFound, "user");
  return it->second;
}

UserRecord InMemoryCredentialStore::find_user_by_handle(ByteView user_handle) const {
  std::lock_guard lock(mu_);
  auto it = name_by_user_id_.find(to_bytes(user_handle));
  if (it == name_by_user_id_.end()) throw Error(ErrorCode::kNotFound, "user handle");
  return users_by_name_.find(it->second)->second;
}

AuthenticatorRecord InMemoryCredentialStore::find_credential(ByteView credential_id) const {
  std::lock_guard lock(mu_);
  auto it = credentials_.find(to_bytes(credential_id));
  if (it == credentials_.end()) throw Error(ErrorCode::kNotFound, "credential");
  return it->second;
}

std::vector<AuthenticatorRecord> InMemoryCredentialStore::credentials_for_user_id_locked(
    const Bytes& user_id) const {
  std::vector<AuthenticatorRecord> out;
  for (const auto& [id, rec] : credentials_)
    if (rec.user_id == user_id) out.push_back(rec);
  if (out.empty()) throw Error(ErrorCode::kNotFound, "no credentials");
  return out;
}

std::vector<AuthenticatorRecord> InMemoryCredentialStore::credentials_for(
    std::string_view username) const {
  std::lock_guard lock(mu_);
  auto it = users_by_name_.find(username);
  if (it == users_by_name_.end()) throw Error(ErrorCode::kNotFound, "user");
  return credentials_for_user_id_locked(it->second.user_id);
}

std::vector<AuthenticatorRecord> InMemoryCredentialStore::credentials_for_handle(
    ByteView user_handle) const {
  std::lock_guard lock(mu_);
  auto id = to_bytes(user_handle);
  if (!name_by_user_id_.count(id)) throw Error(ErrorCode::kNotFound, "user handle");
  return credentials_for_user_id_locked(id);
}

bool InMemoryCredentialStore::has_discoverable_credentials() const {
  std::lock_guard lock(mu_);
  return std::any_of(credentials_.begin(), credentials_.end(),
                     [](const auto& kv) { return kv.second.discoverable; });
}

void InMemoryCredentialStore::update_counter(ByteView credential_id, std::uint32_t new_counter) {
  std::lock_guard lock(mu_);
  auto it = credentials_.find(to_bytes(credential_id));
  if (it == credentials_.end()) throw Error(ErrorCode::kNotFound, "credential");
  if (new_counter <= it->second.counter) throw Error(ErrorCode::kCounterRegression);
  it->second.counter = new_counter;
}

SessionRecord InMemoryCredentialStore::create_session(std::string cookie_id,
                                                      const Digest& cookie_digest,
                                                      std::chrono::seconds ttl, TimePoint now) {
  if (ttl <= std::chrono::seconds::zero()) throw Error(ErrorCode::kInvalidArgument, "ttl");
  if (cookie_id.empty() || cookie_id.find(' ') != std::string::npos)
    throw Error(ErrorCode::kInvalidArgument, "cookie id");
  std::lock_guard lock(mu_);
  if (sessions_.count(cookie_id)) throw Error(ErrorCode::kDuplicateCookieId);
  SessionRecord rec{cookie_id, cookie_digest, std::nullopt, now, now + ttl};
  sessions_.emplace(std::move(cookie_id), rec);
  return rec;
}

void InMemoryCredentialStore::bind_identity(std::string_view cookie_id, std::string_view username) {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(cookie_id);
  if (it == sessions_.end()) throw Error(ErrorCode::kUnknownCookieId);
  if (!users_by_name_.count(username)) throw Error(ErrorCode::kUnknownUser, std::string(username));
  it->second.identity = std::string(username);
}

SessionRecord InMemoryCredentialStore::validate_session(std::string_view cookie_id, TimePoint now) {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(cookie_id);
  if (it == sessions_.end()) throw Error(ErrorCode::kUnknownCookieId);
  if (now >= it->second.expires_at) {
    sessions_.erase(it);
    throw Error(ErrorCode::kExpired);
  }
  if (!it->second.identity) throw Error(ErrorCode::kUnbound);
  return it->second;
}

std::vector<UserRecord> InMemoryCredentialStore::users() const {
  std::lock_guard lock(mu_);
  std::vector<UserRecord> out;
  for (const auto& [name, user] : users_by_name_) out.push_back(user);
  return out;
}

std::vector<AuthenticatorRecord> InMemoryCredentialStore::credentials() const {
  std::lock_guard lock(mu_);
  std::vector<AuthenticatorRecord> out;
  for (const auto& [id, rec] : credentials_) out.push_back(rec);
  return out;
}

std::vector<SessionRecord> InMemoryCredentialStore::sessions() const {
  std::lock_guard lock(mu_);
  std::vector<SessionRecord> out;
  for (const auto& [id, rec] : sessions_) out.push_back(rec);
  return out;
}

void InMemoryCredentialStore::restore(const std::vector<UserRecord>& users,
                                      const std::vector<AuthenticatorRecord>& credentials,
                                      const std::vector<SessionRecord>& sessions) {
  std::lock_guard lock(mu_);
  for (const auto& u : users) insert_user_locked(u);
  for (const auto& c : credentials) insert_credential_locked(c);
  for (const auto& s : sessions) {
    if (s.expires_at <= s.issued_at) throw Error(ErrorCode::kInvalidArgument, "session lifetime");
    if (s.identity && !users_by_name_.count(*s.identity)) throw Error(ErrorCode::kUnknownUser);
    if (!sessions_.emplace(s.cookie_id, s).second) throw Error(ErrorCode::kDuplicateCookieId);
  }
}

std::string serialize_store(const CredentialStore& store) {
  std::ostringstream out;
  out << kStoreHeader << '\n';
  for (const auto& u : store.users()) out << "user " << to_hex(u.user_id) << ' ' << u.username << '\n';
  for (const auto& c : store.credentials())
    out << "credential " << base64_encode(c.credential_id) << ' ' << to_hex(c.user_id) << ' '
        << to_string(c.public_key.algorithm) << ' ' << base64_encode(c.public_key.key) << ' '
        << c.counter << ' ' << (c.discoverable ? 1 : 0) << '\n';
  for (const auto& s : store.sessions())
    out << "session " << s.cookie_id << ' ' << to_hex(s.cookie_digest) << ' '
        << (s.identity ? *s.identity : std::string(kUnbound)) << ' ' << to_micros(s.issued_at)
        << ' ' << to_micros(s.expires_at) << '\n';
  return out.str();
}

std::unique_ptr<InMemoryCredentialStore> parse_store(std::string_view text, RandomSource& rng) {
  std::vector<UserRecord> users;
  std::vector<AuthenticatorRecord> creds;
  std::vector<SessionRecord> sessions;
  for_each_line(text, kStoreHeader, [&](const std::vector<std::string_view>& f, std::size_t n) {
    if (f[0] == "user" && f.size() == 3) {
      users.push_back({parse_hex(f[1], n), std::string(f[2])});
    } else if (f[0] == "credential" && f.size() == 7) {
      creds.push_back({parse_b64(f[1], n), parse_hex(f[2], n),
                       {parse_algorithm(f[3], n), parse_b64(f[4], n)},
                       parse_int<std::uint32_t>(f[5], n), parse_flag(f[6], n)});
    } else if (f[0] == "session" && f.size() == 6) {
      SessionRecord s;
      s.cookie_id = std::string(f[1]);
      s.cookie_digest = parse_digest(f[2], n);
      if (f[3] != kUnbound) s.identity = std::string(f[3]);
      s.issued_at = from_micros(parse_int<std::int64_t>(f[4], n));
      s.expires_at = from_micros(parse_int<std::int64_t>(f[5], n));
      sessions.push_back(std::move(s));
    } else {
      parse_error(n, "unknown record");
    }
  });
  auto store = std::make_unique<InMemoryCredentialStore>(rng);
  try {
    store->restore(users, creds, sessions);
  } catch (const Error& e) {
    // Dangling references and duplicates are file corruption, not lookups.
    throw Error(ErrorCode::kParseError, std::string("inconsistent store: ") + e.what());
  }
  return store;
}

void save_store(const CredentialStore& store, const std::filesystem::path& path) {
  write_file_atomically(path, serialize_store(store));
}

std::unique_ptr<InMemoryCredentialStore> load_store(const std::filesystem::path& path,
                                                    RandomSource& rng) {
  return parse_store(read_file(path), rng);
}

std::string serialize_client_state(const ClientState& state) {
  std::ostringstream out;
  out << kClientHeader << '\n';
  for (const auto& c : state.credentials)
    out << "credential " << base64_encode(c.credential_id) << ' ' << c.rp_id << ' '
        << (c.user_handle.empty() ? std::string(kUnbound) : base64_encode(c.user_handle)) << ' '
        << to_string(c.public_key.algorithm) << ' ' << base64_encode(c.private_key) << ' '
        << c.counter << ' ' << (c.discoverable ? 1 : 0) << '\n';
  if (state.token)
    out << "token " << state.token->cookie_id << ' ' << to_hex(state.token->session_cookie) << '\n';
  return out.str();
}

ClientState parse_client_state(std::string_view text) {
  ClientState state;
  for_each_line(text, kClientHeader, [&](const std::vector<std::string_view>& f, std::size_t n) {
    if (f[0] == "credential" && f.size() == 8) {
      StoredCredential c;
      c.credential_id = parse_b64(f[1], n);
      c.rp_id = std::string(f[2]);
      if (f[3] != kUnbound) c.user_handle = parse_b64(f[3], n);
      c.public_key.algorithm = parse_algorithm(f[4], n);
      c.private_key = parse_b64(f[5], n);
      if (c.private_key.size() != 32) parse_error(n, "bad private key length");
      c.public_key.key = ed25519_public_key(c.private_key);
      c.counter = parse_int<std::uint32_t>(f[6], n);
      c.discoverable = parse_flag(f[7], n);
      state.credentials.push_back(std::move(c));
    } else if (f[0] == "token" && f.size() == 3) {
      state.token = ReauthToken{std::string(f[1]), parse_digest(f[2], n)};
    } else {
      parse_error(n, "unknown record");
    }
  });
  return state;
}

void save_client_state(const ClientState& state, const std::filesystem::path& path) {
  write_file_atomically(path, serialize_client_state(state));
}

ClientState load_client_state(const std::filesystem::path& path) {
  return parse_client_state(read_file(path));
}

}  // namespace eapfido
