#pragma once

// EAP-FIDO method packets.
//
//  0                   1                   2                   3
//  0 1 2 3 4 5 6 7 8 9 0 1 2 3 4 5 6 7 8 9 0 1 2 3 4 5 6 7 8 9 0 1
// +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
// |     Code      |  Identifier   |            Length             |
// +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
// |   Type (20)   |    OpCode     |  Data (ASCII "K=V K=V ...")
// +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-
//
// Which keys may appear depends on (Code, OpCode); "C" is a base64 nonce in
// a FIDO-Start request but a decimal counter in a FIDO-Request response.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "eapfido/bytes.hpp"

namespace eapfido {

inline constexpr std::uint8_t kEapTypeFido = 20;
inline constexpr std::size_t kHeaderSize = 6;
inline constexpr std::size_t kMaxPacketSize = 65535;

enum class Code : std::uint8_t { kRequest = 0x1, kResponse = 0x2 };
enum class OpCode : std::uint8_t { kFidoStart = 0x1, kFidoRequest = 0x2 };

enum class Key { kQ, kC, kD, kID, kRP, kAC, kCD, kAD, kSIG, kUH };

std::string_view key_name(Key key);
std::optional<Key> key_from_name(std::string_view name);

struct Field {
  Key key;
  std::string value;  // wire text

  bool operator==(const Field&) const = default;
};

struct EapFidoPacket {
  Code code = Code::kRequest;
  std::uint8_t identifier = 0;
  OpCode op_code = OpCode::kFidoStart;
  std::vector<Field> data;

  bool operator==(const EapFidoPacket&) const = default;

  const std::string* find(Key key) const;
  bool has(Key key) const { return find(key) != nullptr; }

  // Typed accessors; throw InvalidFieldSet when the key is absent.
  const std::string& text(Key key) const;
  Bytes binary(Key key) const;
  std::vector<Bytes> binary_list(Key key) const;
  std::uint32_t counter() const;

  EapFidoPacket& add_text(Key key, std::string value);
  EapFidoPacket& add_binary(Key key, ByteView value);
  EapFidoPacket& add_binary_list(Key key, const std::vector<Bytes>& values);
  EapFidoPacket& add_counter(std::uint32_t value);
};

Bytes encode(const EapFidoPacket& packet);
EapFidoPacket decode(ByteView bytes);

// Data string without the header, as it would appear on the wire.
std::string serialize_data(const EapFidoPacket& packet);

// Throws InvalidFieldSet unless the keys present are exactly an allowed set
// for (code, op_code).
void check_field_set(const EapFidoPacket& packet);

// Builders for the four messages of the method.
EapFidoPacket make_start_request(std::uint8_t id, ByteView q_as, ByteView nonce);
EapFidoPacket make_start_response(std::uint8_t id, ByteView q_sta);
EapFidoPacket make_start_response(std::uint8_t id, ByteView q_sta, const Digest& proof,
                                  std::string_view cookie_id);
EapFidoPacket make_fido_request(std::uint8_t id, std::string_view rp_id,
                                const std::vector<Bytes>& allow_list, ByteView challenge,
                                std::string_view cookie_id);
EapFidoPacket make_fido_response(std::uint8_t id, ByteView auth_data, ByteView signature,
                                 std::uint32_t counter, ByteView user_handle);

}  // namespace eapfido
