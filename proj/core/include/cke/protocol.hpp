#pragma once

#include <cstdint>
#include <optional>
#include <utility>

#include "cke/digest.hpp"
#include "cke/groups.hpp"
#include "cke/nat.hpp"
#include "cke/rng.hpp"

namespace cke {

// ---------------------------------------------------------------------------
// Root-of-trust initialization: a plain DH exchange run once over a trusted
// channel. Its key seeds link 0 of the chain.
// ---------------------------------------------------------------------------

struct CrtOffer {
    DomainParams params;
    Nat public_value; // g^a mod p
};

struct CrtReply {
    Nat public_value; // g^b mod p
};

// The offerer's side between sending the offer and receiving the reply.
struct CrtPending {
    DomainParams params;
    Nat secret;
    Nat public_value;
};

struct CrtState {
    DomainParams params;
    Nat secret;
    Nat local_public;
    Nat peer_public;
    Nat key;

    void wipe_secrets();
};

// Generate a fresh safe-prime group of the given size plus a secret, and
// offer the public exponential. Secrets whose public value falls outside
// [2, p-2] are resampled, so the peer's range check always passes.
std::pair<CrtPending, CrtOffer> crt_offer(Rng& rng, unsigned bits);

// Same, in a caller-supplied validated group.
std::pair<CrtPending, CrtOffer> crt_offer(const DomainParams& params, Rng& rng);

// Deterministic variant with an explicit secret, for fixture tests.
std::pair<CrtPending, CrtOffer> crt_offer(const DomainParams& params, const Nat& secret);

std::pair<CrtState, CrtReply> crt_respond(const CrtOffer& offer, Rng& rng);
std::pair<CrtState, CrtReply> crt_respond(const CrtOffer& offer, const Nat& secret);

CrtState crt_complete(const CrtPending& pending, const CrtReply& reply);

// ---------------------------------------------------------------------------
// Chain state and per-link session establishment.
// ---------------------------------------------------------------------------

// What survives from one link to the next: the index, the secret mixed into
// the next key (the root-of-trust key before link 0, a KDF of the last
// session key after), the last verified initiator digest, and the
// root-of-trust group identity used to enforce parameter freshness.
struct ChainState {
    std::uint32_t index = 0;
    Nat chain_secret;
    std::optional<Digest> prev_digest;
    Nat crt_p;
    Nat crt_g;
};

ChainState chain_from_crt(const CrtState& crt);

// Per-link scratch state, destroyed (wiped) on commit or abort.
struct SessionEphemeral {
    DomainParams params;
    Role role = Role::Initiator;
    Nat secret;
    Nonce nonce;
    std::optional<Nat> pending_key;
};

struct Offer {
    std::uint32_t index = 0;
    Nat public_value;
    Nat p;
    Nat g;
    Nonce nonce; // width carries the link's bit count n
};

struct Reply {
    std::uint32_t index = 0;
    Nat public_value;
};

// Initiator opens link `chain.index` in the given group. The group must be
// valid and must differ from the root-of-trust group in both p and g
// (GroupReuseViolation otherwise). The secret is resampled until it differs
// from the chain secret and its public value lies in [2, p-2]. The nonce is
// all zeros at index 0 and fresh random below p afterwards.
std::pair<SessionEphemeral, Offer> session_offer(const ChainState& chain, Rng& rng,
                                                 const DomainParams& params);

// Deterministic variant for fixture tests; raises InvalidInput on a secret
// that sampling would have rejected.
std::pair<SessionEphemeral, Offer> session_offer(const ChainState& chain,
                                                 const DomainParams& params, const Nat& secret,
                                                 const Nonce& nonce);

// Responder answers an offer, deriving the session key right away:
//   key = A^b * g^chain_secret mod p
std::pair<SessionEphemeral, Reply> session_respond(const ChainState& chain, const Offer& offer,
                                                   Rng& rng);
std::pair<SessionEphemeral, Reply> session_respond(const ChainState& chain, const Offer& offer,
                                                   const Nat& secret);

// Initiator absorbs the reply:
//   key = B^a * g^chain_secret mod p
// The key is stored in eph.pending_key and also returned.
Nat session_complete(const ChainState& chain, SessionEphemeral& eph, const Reply& reply);

// A negotiated key must not be much shorter than the modulus: required bit
// length is n - 2. Both peers compute this over identical values, so their
// verdicts always agree. On failure the link restarts with fresh secrets.
bool key_strength_ok(const Nat& key, unsigned n);

// Own-role verification digest for the current link.
Digest make_verify(const ChainState& chain, Role role, const Nat& key_i, const Nonce& nonce);

// Recomputes what the peer's digest must be and compares bytewise.
bool check_verify(const ChainState& chain, Role role, const Nat& key_i, const Nonce& nonce,
                  const Digest& peer_digest);

// Advances the chain after successful verification: the new chain secret is
// kdf(key, "chain", n) for this link's n, prev_digest becomes the
// initiator's digest of this link, and the index increments. The consumed
// key, the old chain secret, and the link secret are zeroized. Raises
// StaleState when the ephemeral holds no pending key (already committed or
// aborted).
void commit(ChainState& chain, SessionEphemeral& eph, const Digest& initiator_digest);

// Drops a link without advancing: zeroizes all ephemeral material, leaves
// the chain untouched so the link can be retried from scratch.
void abort_link(SessionEphemeral& eph);

} // namespace cke
