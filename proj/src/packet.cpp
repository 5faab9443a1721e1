#include "eapfido/packet.hpp"

#include <algorithm>
#include <array>
#include <charconv>

#include "eapfido/error.hpp"

namespace eapfido {

namespace {

enum class ValueKind { kBinary, kBinaryList, kCounter, kIdentifier };

struct FieldSet {
  std::vector<Key> required;
  std::vector<Key> optional_group;  // all-or-nothing
};

const FieldSet& field_set_for(Code code, OpCode op) {
  static const FieldSet kStartRequest{{Key::kQ, Key::kC}, {}};
  static const FieldSet kStartResponse{{Key::kQ}, {Key::kD, Key::kID}};
  static const FieldSet kFidoRequest{{Key::kRP, Key::kAC, Key::kCD, Key::kID}, {}};
  static const FieldSet kFidoResponse{{Key::kAD, Key::kSIG, Key::kC, Key::kUH}, {}};
  if (op == OpCode::kFidoStart) return code == Code::kRequest ? kStartRequest : kStartResponse;
  return code == Code::kRequest ? kFidoRequest : kFidoResponse;
}

ValueKind value_kind(Code code, OpCode op, Key key) {
  switch (key) {
    case Key::kAC: return ValueKind::kBinaryList;
    case Key::kRP:
    case Key::kID: return ValueKind::kIdentifier;
    case Key::kC:
      return (code == Code::kResponse && op == OpCode::kFidoRequest) ? ValueKind::kCounter
                                                                     : ValueKind::kBinary;
    default: return ValueKind::kBinary;
  }
}

bool is_identifier_char(char c) { return c >= 0x21 && c <= 0x7e; }

std::optional<std::uint32_t> parse_counter(std::string_view text) {
  if (text.empty() || text.size() > 10) return std::nullopt;
  if (text.size() > 1 && text[0] == '0') return std::nullopt;
  if (!std::all_of(text.begin(), text.end(), [](char c) { return c >= '0' && c <= '9'; }))
    return std::nullopt;
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || value > 0xffffffffULL)
    return std::nullopt;
  return static_cast<std::uint32_t>(value);
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    auto pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(text.substr(start));
      return parts;
    }
    parts.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

void check_value(ValueKind kind, std::string_view value) {
  switch (kind) {
    case ValueKind::kBinary:
      if (!base64_decode(value)) throw Error(ErrorCode::kBadBase64);
      return;
    case ValueKind::kBinaryList:
      if (value.empty()) return;
      for (auto item : split(value, ',')) {
        if (item.empty()) throw Error(ErrorCode::kMalformedPair, "empty allow-list entry");
        if (!base64_decode(item)) throw Error(ErrorCode::kBadBase64);
      }
      return;
    case ValueKind::kCounter:
      if (!parse_counter(value)) throw Error(ErrorCode::kMalformedPair, "bad counter");
      return;
    case ValueKind::kIdentifier:
      if (value.empty() || !std::all_of(value.begin(), value.end(), is_identifier_char))
        throw Error(ErrorCode::kMalformedPair, "bad identifier");
      return;
  }
}

void check_values(const EapFidoPacket& p) {
  for (const auto& f : p.data) check_value(value_kind(p.code, p.op_code, f.key), f.value);
}

void check_unique(const EapFidoPacket& p) {
  std::array<bool, 10> seen{};
  for (const auto& f : p.data) {
    auto idx = static_cast<std::size_t>(f.key);
    if (seen[idx]) throw Error(ErrorCode::kDuplicateKey, std::string(key_name(f.key)));
    seen[idx] = true;
  }
}

}  // namespace

std::string_view key_name(Key key) {
  switch (key) {
    case Key::kQ: return "Q";
    case Key::kC: return "C";
    case Key::kD: return "D";
    case Key::kID: return "ID";
    case Key::kRP: return "RP";
    case Key::kAC: return "AC";
    case Key::kCD: return "CD";
    case Key::kAD: return "AD";
    case Key::kSIG: return "SIG";
    case Key::kUH: return "UH";
  }
  return "?";
}

std::optional<Key> key_from_name(std::string_view name) {
  static constexpr std::array<Key, 10> kAll{Key::kQ,  Key::kC,  Key::kD,  Key::kID,  Key::kRP,
                                            Key::kAC, Key::kCD, Key::kAD, Key::kSIG, Key::kUH};
  for (auto k : kAll)
    if (key_name(k) == name) return k;
  return std::nullopt;
}

const std::string* EapFidoPacket::find(Key key) const {
  for (const auto& f : data)
    if (f.key == key) return &f.value;
  return nullptr;
}

const std::string& EapFidoPacket::text(Key key) const {
  const auto* v = find(key);
  if (!v) throw Error(ErrorCode::kInvalidFieldSet, "missing " + std::string(key_name(key)));
  return *v;
}

Bytes EapFidoPacket::binary(Key key) const {
  auto decoded = base64_decode(text(key));
  if (!decoded) throw Error(ErrorCode::kBadBase64, std::string(key_name(key)));
  return std::move(*decoded);
}

std::vector<Bytes> EapFidoPacket::binary_list(Key key) const {
  const auto& value = text(key);
  std::vector<Bytes> out;
  if (value.empty()) return out;
  for (auto item : split(value, ',')) {
    auto decoded = base64_decode(item);
    if (!decoded || item.empty()) throw Error(ErrorCode::kBadBase64, std::string(key_name(key)));
    out.push_back(std::move(*decoded));
  }
  return out;
}

std::uint32_t EapFidoPacket::counter() const {
  auto v = parse_counter(text(Key::kC));
  if (!v) throw Error(ErrorCode::kMalformedPair, "bad counter");
  return *v;
}

EapFidoPacket& EapFidoPacket::add_text(Key key, std::string value) {
  data.push_back({key, std::move(value)});
  return *this;
}

EapFidoPacket& EapFidoPacket::add_binary(Key key, ByteView value) {
  return add_text(key, base64_encode(value));
}

EapFidoPacket& EapFidoPacket::add_binary_list(Key key, const std::vector<Bytes>& values) {
  std::string joined;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) joined.push_back(',');
    joined += base64_encode(values[i]);
  }
  return add_text(key, std::move(joined));
}

EapFidoPacket& EapFidoPacket::add_counter(std::uint32_t value) {
  return add_text(Key::kC, std::to_string(value));
}

void check_field_set(const EapFidoPacket& p) {
  const auto& set = field_set_for(p.code, p.op_code);
  auto present = [&](Key k) { return p.has(k); };
  for (auto k : set.required)
    if (!present(k))
      throw Error(ErrorCode::kInvalidFieldSet, "missing " + std::string(key_name(k)));
  std::size_t optional_count = std::count_if(set.optional_group.begin(), set.optional_group.end(), present);
  if (optional_count != 0 && optional_count != set.optional_group.size())
    throw Error(ErrorCode::kInvalidFieldSet, "partial optional group");
  if (p.data.size() != set.required.size() + optional_count)
    throw Error(ErrorCode::kInvalidFieldSet, "unexpected key");
}

std::string serialize_data(const EapFidoPacket& packet) {
  std::string out;
  for (std::size_t i = 0; i < packet.data.size(); ++i) {
    if (i) out.push_back(' ');
    out += key_name(packet.data[i].key);
    out.push_back('=');
    out += packet.data[i].value;
  }
  return out;
}

Bytes encode(const EapFidoPacket& packet) {
  check_unique(packet);
  check_field_set(packet);
  check_values(packet);
  auto data = serialize_data(packet);
  std::size_t total = kHeaderSize + data.size();
  if (total > kMaxPacketSize) throw Error(ErrorCode::kValueTooLarge);

  Bytes out;
  out.reserve(total);
  out.push_back(static_cast<std::uint8_t>(packet.code));
  out.push_back(packet.identifier);
  out.push_back(static_cast<std::uint8_t>(total >> 8));
  out.push_back(static_cast<std::uint8_t>(total & 0xff));
  out.push_back(kEapTypeFido);
  out.push_back(static_cast<std::uint8_t>(packet.op_code));
  out.insert(out.end(), data.begin(), data.end());
  return out;
}

EapFidoPacket decode(ByteView bytes) {
  if (bytes.size() < kHeaderSize) throw Error(ErrorCode::kTruncated);
  std::size_t length = (static_cast<std::size_t>(bytes[2]) << 8) | bytes[3];
  if (length != bytes.size()) throw Error(ErrorCode::kTruncated, "length mismatch");
  if (bytes[0] != 0x1 && bytes[0] != 0x2) throw Error(ErrorCode::kUnknownCode);
  if (bytes[4] != kEapTypeFido) throw Error(ErrorCode::kUnknownType);
  if (bytes[5] != 0x1 && bytes[5] != 0x2) throw Error(ErrorCode::kUnknownOpCode);

  EapFidoPacket p;
  p.code = static_cast<Code>(bytes[0]);
  p.identifier = bytes[1];
  p.op_code = static_cast<OpCode>(bytes[5]);

  auto region = bytes.subspan(kHeaderSize);
  if (std::any_of(region.begin(), region.end(), [](std::uint8_t b) { return b < 0x20 || b > 0x7e; }))
    throw Error(ErrorCode::kMalformedPair, "non-ASCII data");
  std::string_view data(reinterpret_cast<const char*>(region.data()), region.size());

  if (!data.empty()) {
    for (auto token : split(data, ' ')) {
      auto eq = token.find('=');
      if (eq == std::string_view::npos || eq == 0)
        throw Error(ErrorCode::kMalformedPair, std::string(token));
      auto key = key_from_name(token.substr(0, eq));
      // A token whose prefix is not a known key is not a key=value pair.
      if (!key) throw Error(ErrorCode::kMalformedPair, std::string(token));
      p.data.push_back({*key, std::string(token.substr(eq + 1))});
    }
  }
  check_unique(p);
  check_field_set(p);
  check_values(p);
  return p;
}

EapFidoPacket make_start_request(std::uint8_t id, ByteView q_as, ByteView nonce) {
  EapFidoPacket p{Code::kRequest, id, OpCode::kFidoStart, {}};
  p.add_binary(Key::kQ, q_as).add_binary(Key::kC, nonce);
  return p;
}

EapFidoPacket make_start_response(std::uint8_t id, ByteView q_sta) {
  EapFidoPacket p{Code::kResponse, id, OpCode::kFidoStart, {}};
  p.add_binary(Key::kQ, q_sta);
  return p;
}

EapFidoPacket make_start_response(std::uint8_t id, ByteView q_sta, const Digest& proof,
                                  std::string_view cookie_id) {
  auto p = make_start_response(id, q_sta);
  p.add_binary(Key::kD, proof).add_text(Key::kID, std::string(cookie_id));
  return p;
}

EapFidoPacket make_fido_request(std::uint8_t id, std::string_view rp_id,
                                const std::vector<Bytes>& allow_list, ByteView challenge,
                                std::string_view cookie_id) {
  EapFidoPacket p{Code::kRequest, id, OpCode::kFidoRequest, {}};
  p.add_text(Key::kRP, std::string(rp_id))
      .add_binary_list(Key::kAC, allow_list)
      .add_binary(Key::kCD, challenge)
      .add_text(Key::kID, std::string(cookie_id));
  return p;
}

EapFidoPacket make_fido_response(std::uint8_t id, ByteView auth_data, ByteView signature,
                                 std::uint32_t counter, ByteView user_handle) {
  EapFidoPacket p{Code::kResponse, id, OpCode::kFidoRequest, {}};
  p.add_binary(Key::kAD, auth_data)
      .add_binary(Key::kSIG, signature)
      .add_counter(counter)
      .add_binary(Key::kUH, user_handle);
  return p;
}

}  // namespace eapfido
