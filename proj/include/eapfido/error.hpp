#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace eapfido {

// Every failure the library can report. The numeric values are part of the
// C API (negated) and must stay stable.
enum class ErrorCode : int {
  kOk = 0,
  kInvalidArgument = 1,
  kStateError = 2,
  kInternal = 3,
  kIoError = 4,
  kParseError = 5,
  kConfigurationError = 6,
  kTimeout = 7,  // a frame the state machine waited for never arrived

  // packet codec
  kTruncated = 10,
  kUnknownCode = 11,
  kUnknownType = 12,
  kUnknownOpCode = 13,
  kMalformedPair = 14,
  kDuplicateKey = 15,
  kBadBase64 = 16,
  kInvalidFieldSet = 17,
  kValueTooLarge = 18,

  // crypto
  kInvalidPoint = 20,

  // authenticator / assertion verification
  kPinInvalid = 30,
  kNoCredentials = 31,
  kUserPresenceDenied = 32,
  kRpMismatch = 33,
  kFlagsMissing = 34,
  kBadSignature = 35,
  kMalformedAuthData = 36,
  kCounterMismatch = 37,

  // credential store
  kDuplicateUsername = 40,
  kInvalidUsername = 41,
  kUnknownUser = 42,
  kDuplicateCredentialId = 43,
  kNotFound = 44,
  kCounterRegression = 45,
  kUnknownCookieId = 46,
  kExpired = 47,
  kUnbound = 48,
  kDuplicateCookieId = 49,

  // server
  kUnknownUserHandle = 50,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  explicit Error(ErrorCode code);
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace eapfido
