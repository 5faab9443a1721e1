#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace eapfido {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

// Fixed-size digests and keys. Lengths are enforced by the type.
using Digest = std::array<std::uint8_t, 32>;
using Msk = std::array<std::uint8_t, 64>;

inline ByteView as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

inline Bytes to_bytes(ByteView v) { return Bytes(v.begin(), v.end()); }

Bytes concat(std::initializer_list<ByteView> parts);

std::string to_hex(ByteView data);
std::optional<Bytes> from_hex(std::string_view hex);

// Standard alphabet, padded. Decoding is strict: no whitespace, required
// padding, and the unused trailing bits of the last symbol must be zero, so
// every byte string has exactly one accepted encoding.
std::string base64_encode(ByteView data);
std::optional<Bytes> base64_decode(std::string_view text);

bool constant_time_equal(ByteView a, ByteView b);

// True when `needle` occurs as a contiguous run inside `haystack`.
bool contains(ByteView haystack, ByteView needle);

}  // namespace eapfido
