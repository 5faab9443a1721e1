#include <gtest/gtest.h>

#include <random>

#include "eapfido/error.hpp"
#include "eapfido/packet.hpp"
#include "grammar_oracle.hpp"
#include "packet_gen.hpp"

namespace eapfido {
namespace {

using testing::mutate;
using testing::oracle_accepts;
using testing::random_valid_packet;

// Header [01 07 00 13 14 01] followed by "Q=QQ== C=Qg==", assembled by hand.
const Bytes kStartRequest19 = {0x01, 0x07, 0x00, 0x13, 0x14, 0x01, 'Q', '=', 'Q', 'Q',
                               '=',  '=',  ' ',  'C',  '=',  'Q',  'g', '=', '='};

Bytes with_data(std::uint8_t code, std::uint8_t op, std::string_view data) {
  Bytes b = {code, 0x09, 0, 0, 20, op};
  b.insert(b.end(), data.begin(), data.end());
  b[2] = static_cast<std::uint8_t>(b.size() >> 8);
  b[3] = static_cast<std::uint8_t>(b.size());
  return b;
}

ErrorCode decode_error(const Bytes& b) {
  try {
    decode(b);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kOk;
}

ErrorCode encode_error(const EapFidoPacket& p) {
  try {
    encode(p);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kOk;
}

TEST(PacketEncode, StartRequestMatchesHandAssembledBytes) {
  auto p = make_start_request(7, Bytes{0x41}, Bytes{0x42});
  EXPECT_EQ(encode(p), kStartRequest19);
  EXPECT_EQ(encode(p).size(), 19u);
}

TEST(PacketEncode, AllowListIsCommaJoinedBase64) {
  auto p = make_fido_request(3, "eap-fido.example", {Bytes{0x01}, Bytes{0x02}}, Bytes(32, 0), "abc");
  auto bytes = encode(p);
  std::string data(bytes.begin() + 6, bytes.end());
  EXPECT_NE(data.find("AC=AQ==,Ag=="), std::string::npos) << data;
}

TEST(PacketEncode, EmptyAllowListEncodesAsEmptyValue) {
  auto p = make_fido_request(3, "rp", {}, Bytes{1}, "id");
  auto bytes = encode(p);
  std::string data(bytes.begin() + 6, bytes.end());
  EXPECT_EQ(data, "RP=rp AC= CD=AQ== ID=id");
  EXPECT_TRUE(decode(bytes).binary_list(Key::kAC).empty());
}

TEST(PacketEncode, CounterIsDecimal) {
  auto p = make_fido_response(1, Bytes{1}, Bytes{2}, 4294967295u, Bytes{});
  auto bytes = encode(p);
  std::string data(bytes.begin() + 6, bytes.end());
  EXPECT_EQ(data, "AD=AQ== SIG=Ag== C=4294967295 UH=");
  EXPECT_EQ(decode(bytes).counter(), 4294967295u);
}

TEST(PacketEncode, RejectsWrongFieldSet) {
  EapFidoPacket p{Code::kRequest, 1, OpCode::kFidoStart, {}};
  p.add_binary(Key::kQ, Bytes{1});
  EXPECT_EQ(encode_error(p), ErrorCode::kInvalidFieldSet);  // missing C
  p.add_binary(Key::kC, Bytes{1});
  p.add_binary(Key::kD, Bytes{1});
  EXPECT_EQ(encode_error(p), ErrorCode::kInvalidFieldSet);  // D not allowed

  EapFidoPacket r{Code::kResponse, 1, OpCode::kFidoStart, {}};
  r.add_binary(Key::kQ, Bytes{1}).add_binary(Key::kD, Bytes{1});
  EXPECT_EQ(encode_error(r), ErrorCode::kInvalidFieldSet);  // D without ID
}

TEST(PacketEncode, RejectsDuplicateKey) {
  auto p = make_start_request(7, Bytes{0x41}, Bytes{0x42});
  p.add_binary(Key::kQ, Bytes{1});
  EXPECT_EQ(encode_error(p), ErrorCode::kDuplicateKey);
}

TEST(PacketEncode, RejectsOversizedPacket) {
  auto p = make_start_request(7, Bytes(49200, 0x41), Bytes{0x42});
  EXPECT_EQ(encode_error(p), ErrorCode::kValueTooLarge);
  auto fits = make_start_request(7, Bytes(3, 0x41), Bytes{});
  EXPECT_EQ(encode_error(fits), ErrorCode::kOk);
}

TEST(PacketEncode, LengthFieldEqualsByteCount) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 1000; ++i) {
    auto bytes = encode(random_valid_packet(rng));
    ASSERT_EQ((bytes[2] << 8) | bytes[3], static_cast<int>(bytes.size()));
    ASSERT_EQ(bytes[4], kEapTypeFido);
  }
}

TEST(PacketDecode, HandAssembledStartRequest) {
  auto p = decode(kStartRequest19);
  EXPECT_EQ(p.code, Code::kRequest);
  EXPECT_EQ(p.identifier, 7);
  EXPECT_EQ(p.op_code, OpCode::kFidoStart);
  EXPECT_EQ(p.binary(Key::kQ), Bytes{0x41});
  EXPECT_EQ(p.binary(Key::kC), Bytes{0x42});
}

TEST(PacketDecode, UnknownOpCode) {
  EXPECT_EQ(decode_error({0x01, 0x07, 0x00, 0x06, 0x14, 0x03}), ErrorCode::kUnknownOpCode);
}

TEST(PacketDecode, TokenWithoutKeySeparatorIsMalformedPair) {
  EXPECT_EQ(decode_error(with_data(1, 1, "QQ==")), ErrorCode::kMalformedPair);
  EXPECT_EQ(decode_error(with_data(1, 1, "Q=QQ== QQ==")), ErrorCode::kMalformedPair);
  EXPECT_EQ(decode_error(with_data(1, 1, "Q")), ErrorCode::kMalformedPair);
  EXPECT_EQ(decode_error(with_data(1, 1, "=QQ==")), ErrorCode::kMalformedPair);
}

TEST(PacketDecode, HeaderErrors) {
  EXPECT_EQ(decode_error({}), ErrorCode::kTruncated);
  EXPECT_EQ(decode_error({0x01, 0x07, 0x00, 0x06, 0x14}), ErrorCode::kTruncated);
  EXPECT_EQ(decode_error({0x01, 0x07, 0x00, 0x07, 0x14, 0x01}), ErrorCode::kTruncated);
  auto longer = kStartRequest19;
  longer.push_back(' ');
  EXPECT_EQ(decode_error(longer), ErrorCode::kTruncated);
  EXPECT_EQ(decode_error({0x03, 0x07, 0x00, 0x06, 0x14, 0x01}), ErrorCode::kUnknownCode);
  EXPECT_EQ(decode_error({0x01, 0x07, 0x00, 0x06, 0x15, 0x01}), ErrorCode::kUnknownType);
  EXPECT_EQ(decode_error({0x01, 0x07, 0x00, 0x06, 0x14, 0x00}), ErrorCode::kUnknownOpCode);
}

TEST(PacketDecode, DataRegionErrors) {
  EXPECT_EQ(decode_error(with_data(1, 1, "Q=QQ== Q=Qg==")), ErrorCode::kDuplicateKey);
  EXPECT_EQ(decode_error(with_data(1, 1, "Q=QQ== C=Qg")), ErrorCode::kBadBase64);
  EXPECT_EQ(decode_error(with_data(1, 1, "Q=QQ== C=Qh==")), ErrorCode::kBadBase64);  // non-canonical
  EXPECT_EQ(decode_error(with_data(1, 1, "Q=QQ== C=Q-==")), ErrorCode::kBadBase64);
  EXPECT_EQ(decode_error(with_data(1, 1, "Q=QQ==")), ErrorCode::kInvalidFieldSet);
  EXPECT_EQ(decode_error(with_data(1, 1, "Q=QQ== C=Qg== D=AA==")), ErrorCode::kInvalidFieldSet);
  EXPECT_EQ(decode_error(with_data(1, 1, "")), ErrorCode::kInvalidFieldSet);
  EXPECT_EQ(decode_error(with_data(1, 1, "Q=QQ==  C=Qg==")), ErrorCode::kMalformedPair);
  EXPECT_EQ(decode_error(with_data(1, 1, "Q=QQ== C=Qg== ")), ErrorCode::kMalformedPair);
  EXPECT_EQ(decode_error(with_data(1, 1, "Q=QQ==\tC=Qg==")), ErrorCode::kMalformedPair);
  EXPECT_EQ(decode_error(with_data(1, 1, "Q=QQ== C=Qg==\xc3")), ErrorCode::kMalformedPair);
  EXPECT_EQ(decode_error(with_data(2, 1, "Q=QQ== D=AA==")), ErrorCode::kInvalidFieldSet);
  EXPECT_EQ(decode_error(with_data(2, 1, "Q=QQ== D=AA== ID=")), ErrorCode::kMalformedPair);
  EXPECT_EQ(decode_error(with_data(1, 2, "RP=r AC=AQ==, CD= ID=x")), ErrorCode::kMalformedPair);
  EXPECT_EQ(decode_error(with_data(1, 2, "RP=r AC=AQ==,,Ag== CD= ID=x")), ErrorCode::kMalformedPair);
  EXPECT_EQ(decode_error(with_data(1, 2, "RP=r AC=AQ= CD= ID=x")), ErrorCode::kBadBase64);
  EXPECT_EQ(decode_error(with_data(2, 2, "AD= SIG= C=01 UH=")), ErrorCode::kMalformedPair);
  EXPECT_EQ(decode_error(with_data(2, 2, "AD= SIG= C=4294967296 UH=")), ErrorCode::kMalformedPair);
  EXPECT_EQ(decode_error(with_data(2, 2, "AD= SIG= C=-1 UH=")), ErrorCode::kMalformedPair);
  EXPECT_EQ(decode_error(with_data(2, 2, "AD= SIG= C=0 UH=")), ErrorCode::kOk);
}

TEST(PacketDecode, KeyMeaningDependsOnMessage) {
  // C is a nonce in FidoStart requests and a counter in FidoRequest responses.
  EXPECT_EQ(decode_error(with_data(1, 1, "Q= C=12")), ErrorCode::kBadBase64);
  EXPECT_EQ(decode_error(with_data(2, 2, "AD= SIG= C=QQ== UH=")), ErrorCode::kMalformedPair);
  EXPECT_EQ(decode_error(with_data(1, 2, "RP=r AC= CD= ID=x C=1")), ErrorCode::kInvalidFieldSet);
}

TEST(PacketDecode, FieldOrderIsPreserved) {
  auto p = decode(with_data(1, 1, "C=Qg== Q=QQ=="));
  ASSERT_EQ(p.data.size(), 2u);
  EXPECT_EQ(p.data[0].key, Key::kC);
  EXPECT_EQ(encode(p), with_data(1, 1, "C=Qg== Q=QQ=="));
}

TEST(PacketProperty, RoundTripOverGeneratedPackets) {
  std::mt19937_64 rng(20240501);
  for (int i = 0; i < 10000; ++i) {
    auto p = random_valid_packet(rng);
    auto bytes = encode(p);
    ASSERT_TRUE(oracle_accepts(bytes)) << i;
    ASSERT_EQ(decode(bytes), p) << i;
  }
}

TEST(PacketProperty, DecoderAgreesWithGrammarOracleOnMutations) {
  std::mt19937_64 rng(77);
  int accepted = 0;
  for (int i = 0; i < 100000; ++i) {
    auto input = mutate(encode(random_valid_packet(rng)), rng);
    bool expect = oracle_accepts(input);
    bool got = decode_error(input) == ErrorCode::kOk;
    ASSERT_EQ(got, expect) << to_hex(input);
    if (got) {
      ++accepted;
      ASSERT_EQ(encode(decode(input)), input);
    }
  }
  EXPECT_GT(accepted, 1000);  // the mutator still reaches valid inputs
}

TEST(GrammarOracle, SanityOnKnownInputs) {
  EXPECT_TRUE(oracle_accepts(kStartRequest19));
  EXPECT_FALSE(oracle_accepts(with_data(1, 1, "QQ==")));
  EXPECT_FALSE(oracle_accepts(with_data(1, 1, "Q=QQ== C=Qh==")));
  EXPECT_TRUE(oracle_accepts(with_data(2, 1, "Q=QQ== D=AA== ID=x")));
  EXPECT_FALSE(oracle_accepts(with_data(2, 1, "Q=QQ== D=AA==")));
}

}  // namespace
}  // namespace eapfido
