#include "eapfido/error.hpp"

namespace eapfido {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kOk: return "Ok";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kStateError: return "StateError";
    case ErrorCode::kInternal: return "Internal";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kConfigurationError: return "ConfigurationError";
    case ErrorCode::kTimeout: return "Timeout";
    case ErrorCode::kTruncated: return "Truncated";
    case ErrorCode::kUnknownCode: return "UnknownCode";
    case ErrorCode::kUnknownType: return "UnknownType";
    case ErrorCode::kUnknownOpCode: return "UnknownOpCode";
    case ErrorCode::kMalformedPair: return "MalformedPair";
    case ErrorCode::kDuplicateKey: return "DuplicateKey";
    case ErrorCode::kBadBase64: return "BadBase64";
    case ErrorCode::kInvalidFieldSet: return "InvalidFieldSet";
    case ErrorCode::kValueTooLarge: return "ValueTooLarge";
    case ErrorCode::kInvalidPoint: return "InvalidPoint";
    case ErrorCode::kPinInvalid: return "PinInvalid";
    case ErrorCode::kNoCredentials: return "NoCredentials";
    case ErrorCode::kUserPresenceDenied: return "UserPresenceDenied";
    case ErrorCode::kRpMismatch: return "RpMismatch";
    case ErrorCode::kFlagsMissing: return "FlagsMissing";
    case ErrorCode::kBadSignature: return "BadSignature";
    case ErrorCode::kMalformedAuthData: return "MalformedAuthData";
    case ErrorCode::kCounterMismatch: return "CounterMismatch";
    case ErrorCode::kDuplicateUsername: return "DuplicateUsername";
    case ErrorCode::kInvalidUsername: return "InvalidUsername";
    case ErrorCode::kUnknownUser: return "UnknownUser";
    case ErrorCode::kDuplicateCredentialId: return "DuplicateCredentialId";
    case ErrorCode::kNotFound: return "NotFound";
    case ErrorCode::kCounterRegression: return "CounterRegression";
    case ErrorCode::kUnknownCookieId: return "UnknownCookieId";
    case ErrorCode::kExpired: return "Expired";
    case ErrorCode::kUnbound: return "Unbound";
    case ErrorCode::kDuplicateCookieId: return "DuplicateCookieId";
    case ErrorCode::kUnknownUserHandle: return "UnknownUserHandle";
  }
  return "Unknown";
}

Error::Error(ErrorCode code) : std::runtime_error(std::string(to_string(code))), code_(code) {}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

}  // namespace eapfido
