#pragma once

#include <chrono>
#include <deque>
#include <string>

#include "cke/transport.hpp"
#include "cke/wire.hpp"

namespace cke {

// Frame-level view of a datagram transport. Malformed datagrams are counted
// and skipped, never surfaced. A pushback queue lets a consumer that reads
// one frame too far (the next link's OFFER arriving while the previous link
// lingers) hand it to the next reader.
class FramedEndpoint {
public:
    explicit FramedEndpoint(Transport& transport) : transport_(transport) {}

    void send_frame(const Frame& frame);
    std::optional<Frame> recv_frame(std::chrono::milliseconds timeout);
    void push_back(Frame frame);

    std::uint64_t frames_sent() const { return sent_; }
    std::uint64_t malformed_seen() const { return malformed_; }

private:
    Transport& transport_;
    std::deque<Frame> pushback_;
    std::uint64_t sent_ = 0;
    std::uint64_t malformed_ = 0;
};

struct LinkConfig {
    // Per-wait receive deadline; also the retransmit pace.
    std::chrono::milliseconds recv_timeout{2000};
    // Digest-mismatch retransmission requests per side; the next mismatch
    // aborts the link.
    int max_retries = 3;
    // Timeout-driven retransmits of our own last frame per wait phase.
    int max_resends = 3;
    // Weak-key (and peer-restart) budget per link.
    int max_weak_restarts = 16;
    // How long the responder lingers after its VERIFY before committing,
    // in case the initiator still reports a mismatch or abort. Must
    // comfortably exceed recv_timeout, or a responder could commit while a
    // timing-out initiator is still about to abort.
    std::chrono::milliseconds quiet_window{5000};
};

enum class LinkError : std::uint8_t {
    None,
    Timeout,
    VerificationFailedFinal,
    PeerAborted,
    TooManyRestarts,
};

enum class LinkPhase : std::uint8_t {
    AwaitOffer,
    AwaitReply,
    AwaitVerify,
    Linger,
    Done,
};

std::string_view link_error_name(LinkError e);
std::string_view link_phase_name(LinkPhase p);

struct LinkOutcome {
    bool committed = false;
    LinkError error = LinkError::None;
    LinkPhase phase = LinkPhase::Done; // where a failure happened
    int retries_sent = 0;
    int weak_restarts = 0;
    std::uint64_t frames_sent = 0; // frames this side sent during this link
    std::string detail;
};

// Drives one link of the chain over an unreliable frame transport:
//
//   initiator                       responder
//   OFFER(A, p, g, nonce)  ---->
//                          <----   REPLY(B)
//   VERIFY(digest_I)       ---->   (checked before any VERIFY goes back)
//                          <----   VERIFY(digest_R)
//
// A digest mismatch on either side requests a retransmission (RETRY) up to
// max_retries times, then aborts. A weak negotiated key restarts the link
// with fresh secrets on both sides without any explicit signal: verdicts
// agree because both sides evaluate the same key. On success `chain` is
// advanced in place; on failure it is untouched and all ephemeral secret
// material has been zeroized.
//
// The initiator uses `params` as the link's group; the responder takes the
// group from the received offer and ignores `params`.
LinkOutcome run_link(FramedEndpoint& ep, Role role, ChainState& chain, Rng& rng,
                     const DomainParams& params, const LinkConfig& cfg = {});

} // namespace cke
