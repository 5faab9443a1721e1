#pragma once

#include <cstdint>
#include <span>

namespace eapfido::testing {

// Reference acceptor for the EAP-FIDO wire grammar, written without the
// production codec. True iff `bytes` is a packet the codec must accept.
bool oracle_accepts(std::span<const std::uint8_t> bytes);

}  // namespace eapfido::testing
