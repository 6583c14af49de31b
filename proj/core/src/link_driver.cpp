#include "cke/link_driver.hpp"

#include "cke/errors.hpp"

namespace cke {

namespace {

using Clock = std::chrono::steady_clock;
using std::chrono::milliseconds;

milliseconds remaining_until(Clock::time_point deadline) {
    auto left = std::chrono::duration_cast<milliseconds>(deadline - Clock::now());
    return left.count() < 0 ? milliseconds(0) : left;
}

} // namespace

void FramedEndpoint::send_frame(const Frame& frame) {
    std::vector<std::uint8_t> bytes = encode_frame(frame);
    transport_.send(bytes);
    ++sent_;
}

std::optional<Frame> FramedEndpoint::recv_frame(milliseconds timeout) {
    if (!pushback_.empty()) {
        Frame f = std::move(pushback_.front());
        pushback_.pop_front();
        return f;
    }

    Clock::time_point deadline = Clock::now() + timeout;
    for (;;) {
        milliseconds left = remaining_until(deadline);
        std::optional<std::vector<std::uint8_t>> datagram = transport_.recv(left);
        if (!datagram) return std::nullopt;
        try {
            return decode_frame(*datagram);
        } catch (const Error&) {
            ++malformed_;
            if (Clock::now() >= deadline) return std::nullopt;
        }
    }
}

void FramedEndpoint::push_back(Frame frame) { pushback_.push_back(std::move(frame)); }

std::string_view link_error_name(LinkError e) {
    switch (e) {
    case LinkError::None: return "None";
    case LinkError::Timeout: return "Timeout";
    case LinkError::VerificationFailedFinal: return "VerificationFailedFinal";
    case LinkError::PeerAborted: return "PeerAborted";
    case LinkError::TooManyRestarts: return "TooManyRestarts";
    }
    return "?";
}

std::string_view link_phase_name(LinkPhase p) {
    switch (p) {
    case LinkPhase::AwaitOffer: return "AwaitOffer";
    case LinkPhase::AwaitReply: return "AwaitReply";
    case LinkPhase::AwaitVerify: return "AwaitVerify";
    case LinkPhase::Linger: return "Linger";
    case LinkPhase::Done: return "Done";
    }
    return "?";
}

namespace {

struct Driver {
    FramedEndpoint& ep;
    ChainState& chain;
    Rng& rng;
    const DomainParams& params;
    const LinkConfig& cfg;

    std::uint64_t frames_at_start = ep.frames_sent();
    int retries_sent = 0;
    int weak_restarts = 0;

    LinkOutcome fail(SessionEphemeral& eph, LinkError error, LinkPhase phase, std::string detail,
                     bool notify_peer) {
        if (notify_peer) {
            AbortReason reason = error == LinkError::VerificationFailedFinal
                                     ? AbortReason::VerifyFailed
                                     : error == LinkError::TooManyRestarts
                                           ? AbortReason::TooManyRestarts
                                           : AbortReason::LocalFailure;
            ep.send_frame(abort_frame(chain.index, reason));
        }
        abort_link(eph);
        return outcome(false, error, phase, std::move(detail));
    }

    LinkOutcome success() { return outcome(true, LinkError::None, LinkPhase::Done, ""); }

    LinkOutcome outcome(bool committed, LinkError error, LinkPhase phase, std::string detail) {
        LinkOutcome o;
        o.committed = committed;
        o.error = error;
        o.phase = phase;
        o.retries_sent = retries_sent;
        o.weak_restarts = weak_restarts;
        o.frames_sent = ep.frames_sent() - frames_at_start;
        o.detail = std::move(detail);
        return o;
    }

    LinkOutcome run_initiator() {
        for (;;) {
            auto [eph, offer] = session_offer(chain, rng, params);
            Frame offer_frame = frame_from_offer(offer);
            ep.send_frame(offer_frame);

            // Wait for the responder's public value.
            std::optional<Reply> reply;
            Frame last_sent = offer_frame;
            int resends = 0;
            while (!reply) {
                std::optional<Frame> f = ep.recv_frame(cfg.recv_timeout);
                if (!f) {
                    if (resends >= cfg.max_resends)
                        return fail(eph, LinkError::Timeout, LinkPhase::AwaitReply,
                                    "no reply from responder", true);
                    ep.send_frame(last_sent);
                    ++resends;
                    continue;
                }
                if (f->chain_index != chain.index) continue; // stale link
                if (f->kind() == MsgKind::Abort)
                    return fail(eph, LinkError::PeerAborted, LinkPhase::AwaitReply,
                                "peer aborted while we awaited its reply", false);
                if (f->kind() != MsgKind::Reply) continue;
                try {
                    Reply candidate = reply_from_frame(*f);
                    session_complete(chain, eph, candidate);
                    reply = candidate;
                } catch (const Error&) {
                    continue; // semantically invalid reply: keep waiting
                }
            }

            Nat key = *eph.pending_key;
            if (!key_strength_ok(key, eph.params.n)) {
                // Both sides compute the same verdict and restart in
                // lockstep; no signal is sent.
                abort_link(eph);
                ++weak_restarts;
                if (weak_restarts > cfg.max_weak_restarts) {
                    SessionEphemeral dead{};
                    return fail(dead, LinkError::TooManyRestarts, LinkPhase::AwaitReply,
                                "weak-key restart budget exhausted", true);
                }
                continue;
            }

            Digest my_digest = make_verify(chain, Role::Initiator, key, eph.nonce);
            Frame my_verify = verify_frame(chain.index, my_digest);
            ep.send_frame(my_verify);
            last_sent = my_verify;

            // Wait for the responder's digest.
            int mismatches = 0;
            int resends2 = 0;
            for (;;) {
                std::optional<Frame> f = ep.recv_frame(cfg.recv_timeout);
                if (!f) {
                    if (resends2 >= cfg.max_resends)
                        return fail(eph, LinkError::Timeout, LinkPhase::AwaitVerify,
                                    "no verification digest from responder", true);
                    ep.send_frame(last_sent);
                    ++resends2;
                    continue;
                }
                if (f->chain_index != chain.index) continue;
                switch (f->kind()) {
                case MsgKind::Abort:
                    return fail(eph, LinkError::PeerAborted, LinkPhase::AwaitVerify,
                                "peer aborted during verification", false);
                case MsgKind::Verify: {
                    const Digest& peer_digest = std::get<VerifyPayload>(f->payload).digest;
                    if (check_verify(chain, Role::Initiator, key, eph.nonce, peer_digest)) {
                        commit(chain, eph, my_digest);
                        return success();
                    }
                    ++mismatches;
                    if (mismatches > cfg.max_retries)
                        return fail(eph, LinkError::VerificationFailedFinal, LinkPhase::AwaitVerify,
                                    "peer digest still wrong after all retries", true);
                    ++retries_sent;
                    Frame retry = retry_frame(chain.index, static_cast<std::uint8_t>(mismatches));
                    ep.send_frame(retry);
                    last_sent = retry;
                    break;
                }
                case MsgKind::Retry:
                    // Responder wants our digest again.
                    ep.send_frame(my_verify);
                    last_sent = my_verify;
                    break;
                case MsgKind::Reply:
                    // Duplicate reply; our digest probably got lost.
                    ep.send_frame(my_verify);
                    last_sent = my_verify;
                    break;
                default:
                    break; // nothing else makes sense here
                }
            }
        }
    }

    LinkOutcome run_responder() {
        std::optional<Frame> carried_offer;
        for (;;) {
            // Obtain an offer: either carried over from a restart or read
            // off the wire.
            Frame offer_frame;
            if (carried_offer) {
                offer_frame = std::move(*carried_offer);
                carried_offer.reset();
            } else {
                int waits = 0;
                std::optional<Frame> got;
                while (!got) {
                    std::optional<Frame> f = ep.recv_frame(cfg.recv_timeout);
                    if (!f) {
                        if (++waits > cfg.max_resends) {
                            SessionEphemeral dead{};
                            return fail(dead, LinkError::Timeout, LinkPhase::AwaitOffer,
                                        "no offer arrived", false);
                        }
                        continue;
                    }
                    if (f->chain_index != chain.index) continue;
                    if (f->kind() == MsgKind::Abort) {
                        SessionEphemeral dead{};
                        return fail(dead, LinkError::PeerAborted, LinkPhase::AwaitOffer,
                                    "peer aborted before offering", false);
                    }
                    if (f->kind() == MsgKind::Offer) got = std::move(f);
                }
                offer_frame = std::move(*got);
            }

            SessionEphemeral eph;
            Reply reply;
            try {
                auto [e, r] = session_respond(chain, offer_from_frame(offer_frame), rng);
                eph = std::move(e);
                reply = std::move(r);
            } catch (const Error&) {
                continue; // bad group or public value: ignore the offer
            }

            // Reply first, then judge key strength: the initiator needs our
            // public value to reach the same verdict we do.
            Frame reply_sent = frame_from_reply(reply);
            ep.send_frame(reply_sent);

            Nat key = *eph.pending_key;
            if (!key_strength_ok(key, eph.params.n)) {
                abort_link(eph);
                ++weak_restarts;
                if (weak_restarts > cfg.max_weak_restarts) {
                    SessionEphemeral dead{};
                    return fail(dead, LinkError::TooManyRestarts, LinkPhase::AwaitOffer,
                                "weak-key restart budget exhausted", true);
                }
                continue; // silently await the initiator's fresh offer
            }

            Digest my_digest = make_verify(chain, Role::Responder, key, eph.nonce);

            // Wait for the initiator's digest; ours is not sent until its
            // digest checks out.
            Frame last_sent = reply_sent;
            int mismatches = 0;
            int resends = 0;
            std::optional<Digest> initiator_digest;
            bool restart = false;
            while (!initiator_digest && !restart) {
                std::optional<Frame> f = ep.recv_frame(cfg.recv_timeout);
                if (!f) {
                    if (resends >= cfg.max_resends)
                        return fail(eph, LinkError::Timeout, LinkPhase::AwaitVerify,
                                    "no verification digest from initiator", true);
                    ep.send_frame(last_sent);
                    ++resends;
                    continue;
                }
                if (f->chain_index != chain.index) continue;
                switch (f->kind()) {
                case MsgKind::Abort:
                    return fail(eph, LinkError::PeerAborted, LinkPhase::AwaitVerify,
                                "peer aborted during verification", false);
                case MsgKind::Offer:
                    if (f->payload == offer_frame.payload) {
                        // Duplicate of the offer we answered: reply again.
                        ep.send_frame(reply_sent);
                        last_sent = reply_sent;
                    } else {
                        // A different offer for the same link: the initiator
                        // restarted (weak key). Drop ours and re-respond.
                        abort_link(eph);
                        ++weak_restarts;
                        if (weak_restarts > cfg.max_weak_restarts) {
                            SessionEphemeral dead{};
                            return fail(dead, LinkError::TooManyRestarts, LinkPhase::AwaitVerify,
                                        "restart budget exhausted", true);
                        }
                        carried_offer = std::move(f);
                        restart = true;
                    }
                    break;
                case MsgKind::Verify: {
                    const Digest& peer_digest = std::get<VerifyPayload>(f->payload).digest;
                    if (check_verify(chain, Role::Responder, key, eph.nonce, peer_digest)) {
                        initiator_digest = peer_digest;
                        break;
                    }
                    ++mismatches;
                    if (mismatches > cfg.max_retries)
                        return fail(eph, LinkError::VerificationFailedFinal, LinkPhase::AwaitVerify,
                                    "initiator digest still wrong after all retries", true);
                    ++retries_sent;
                    Frame retry = retry_frame(chain.index, static_cast<std::uint8_t>(mismatches));
                    ep.send_frame(retry);
                    last_sent = retry;
                    break;
                }
                default:
                    break;
                }
            }
            if (restart) continue;

            Frame my_verify = verify_frame(chain.index, my_digest);
            ep.send_frame(my_verify);

            // Linger before committing: the initiator may still find our
            // digest wrong (RETRY), give up (ABORT), or move on to the next
            // link (its OFFER doubles as the commit signal).
            Clock::time_point quiet_deadline = Clock::now() + cfg.quiet_window;
            for (;;) {
                std::optional<Frame> f = ep.recv_frame(remaining_until(quiet_deadline));
                if (!f) {
                    commit(chain, eph, *initiator_digest);
                    return success();
                }
                if (f->chain_index == chain.index + 1 && f->kind() == MsgKind::Offer) {
                    commit(chain, eph, *initiator_digest);
                    ep.push_back(std::move(*f));
                    return success();
                }
                if (f->chain_index != chain.index) continue;
                switch (f->kind()) {
                case MsgKind::Retry:
                case MsgKind::Verify:
                    // Mismatch report, or a duplicate of the initiator's
                    // digest (ours may have been lost): send ours again.
                    ep.send_frame(my_verify);
                    quiet_deadline = Clock::now() + cfg.quiet_window;
                    break;
                case MsgKind::Abort:
                    return fail(eph, LinkError::PeerAborted, LinkPhase::Linger,
                                "peer aborted after our digest went out", false);
                default:
                    break;
                }
            }
        }
    }
};

} // namespace

LinkOutcome run_link(FramedEndpoint& ep, Role role, ChainState& chain, Rng& rng,
                     const DomainParams& params, const LinkConfig& cfg) {
    Driver driver{ep, chain, rng, params, cfg};
    return role == Role::Initiator ? driver.run_initiator() : driver.run_responder();
}

} // namespace cke
