#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cke {

enum class Errc {
    parse_error,
    underflow,
    division_by_zero,
    invalid_input,
    not_invertible,
    unknown_group,
    invalid_group,
    invalid_public_value,
    chain_index_mismatch,
    group_reuse,
    weak_key,
    verification_failed,
    key_too_short,
    stale_state,
    malformed_frame,
    malformed_packet,
    timeout,
    peer_aborted,
    mac_mismatch,
    peer_error,
    no_session_key,
    already_initialized,
    store_auth,
    store_locked,
    unknown_scenario,
    io_error,
};

std::string_view errc_name(Errc c);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& what) {
    throw Error(code, what);
}

inline std::string_view errc_name(Errc c) {
    switch (c) {
    case Errc::parse_error: return "ParseError";
    case Errc::underflow: return "Underflow";
    case Errc::division_by_zero: return "DivisionByZero";
    case Errc::invalid_input: return "InvalidInput";
    case Errc::not_invertible: return "NotInvertible";
    case Errc::unknown_group: return "UnknownGroup";
    case Errc::invalid_group: return "InvalidGroup";
    case Errc::invalid_public_value: return "InvalidPublicValue";
    case Errc::chain_index_mismatch: return "ChainIndexMismatch";
    case Errc::group_reuse: return "GroupReuseViolation";
    case Errc::weak_key: return "WeakKey";
    case Errc::verification_failed: return "VerificationFailed";
    case Errc::key_too_short: return "KeyTooShort";
    case Errc::stale_state: return "StaleState";
    case Errc::malformed_frame: return "MalformedFrame";
    case Errc::malformed_packet: return "MalformedPacket";
    case Errc::timeout: return "Timeout";
    case Errc::peer_aborted: return "PeerAborted";
    case Errc::mac_mismatch: return "MacMismatch";
    case Errc::peer_error: return "PeerError";
    case Errc::no_session_key: return "NoSessionKey";
    case Errc::already_initialized: return "AlreadyInitialized";
    case Errc::store_auth: return "StoreAuthFailure";
    case Errc::store_locked: return "StoreLocked";
    case Errc::unknown_scenario: return "UnknownScenario";
    case Errc::io_error: return "IoError";
    }
    return "Error";
}

} // namespace cke
