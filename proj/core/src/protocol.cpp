#include "cke/protocol.hpp"

#include "cke/errors.hpp"

namespace cke {

namespace {

bool public_value_in_range(const Nat& x, const Nat& p) {
    return x >= Nat(2) && x <= p - Nat(2);
}

void require_public_value(const Nat& x, const Nat& p, const char* what) {
    if (!public_value_in_range(x, p))
        raise(Errc::invalid_public_value, std::string(what) + " outside [2, p-2]");
}

// Samples a secret in [1, p-2] whose public exponential is itself a legal
// public value, so the peer's range check cannot reject an honest offer.
// `avoid` (the chain secret, when set) is resampled away per the parameter
// freshness rule.
std::pair<Nat, Nat> sample_keypair(const DomainParams& params, Rng& rng, const Nat* avoid) {
    for (;;) {
        Nat secret = rand_below(rng, params.p - Nat(1)); // [1, p-2]
        if (avoid && secret == *avoid) continue;
        Nat pub = modpow(params.g, secret, params.p);
        if (!public_value_in_range(pub, params.p)) continue;
        return {std::move(secret), std::move(pub)};
    }
}

void require_valid_group(const DomainParams& params) {
    if (GroupCheck check = validate_group(params); check != GroupCheck::Valid)
        raise(Errc::invalid_group,
              std::string("group rejected: ") + std::string(group_check_name(check)));
}

void require_secret_range(const Nat& secret, const Nat& p) {
    if (secret < Nat(1) || secret > p - Nat(2))
        raise(Errc::invalid_input, "secret outside [1, p-2]");
}

} // namespace

void CrtState::wipe_secrets() {
    secret.wipe();
    key.wipe();
}

std::pair<CrtPending, CrtOffer> crt_offer(Rng& rng, unsigned bits) {
    DomainParams params = generate_group(bits, rng);
    return crt_offer(params, rng);
}

std::pair<CrtPending, CrtOffer> crt_offer(const DomainParams& params, Rng& rng) {
    require_valid_group(params);
    auto [secret, pub] = sample_keypair(params, rng, nullptr);
    CrtPending pending{params, std::move(secret), pub};
    CrtOffer offer{params, std::move(pub)};
    return {std::move(pending), std::move(offer)};
}

std::pair<CrtPending, CrtOffer> crt_offer(const DomainParams& params, const Nat& secret) {
    require_valid_group(params);
    require_secret_range(secret, params.p);
    Nat pub = modpow(params.g, secret, params.p);
    require_public_value(pub, params.p, "own public value");
    CrtPending pending{params, secret, pub};
    CrtOffer offer{params, std::move(pub)};
    return {std::move(pending), std::move(offer)};
}

namespace {

std::pair<CrtState, CrtReply> crt_respond_with(const CrtOffer& offer, const Nat& secret,
                                               const Nat& reply_public) {
    Nat key = modpow(offer.public_value, secret, offer.params.p);
    CrtState state{offer.params, secret, reply_public, offer.public_value, std::move(key)};
    CrtReply reply{state.local_public};
    return {std::move(state), std::move(reply)};
}

} // namespace

std::pair<CrtState, CrtReply> crt_respond(const CrtOffer& offer, Rng& rng) {
    require_valid_group(offer.params);
    require_public_value(offer.public_value, offer.params.p, "peer public value");
    auto [secret, pub] = sample_keypair(offer.params, rng, nullptr);
    return crt_respond_with(offer, secret, pub);
}

std::pair<CrtState, CrtReply> crt_respond(const CrtOffer& offer, const Nat& secret) {
    require_valid_group(offer.params);
    require_public_value(offer.public_value, offer.params.p, "peer public value");
    require_secret_range(secret, offer.params.p);
    Nat pub = modpow(offer.params.g, secret, offer.params.p);
    require_public_value(pub, offer.params.p, "own public value");
    return crt_respond_with(offer, secret, pub);
}

CrtState crt_complete(const CrtPending& pending, const CrtReply& reply) {
    require_public_value(reply.public_value, pending.params.p, "peer public value");
    Nat key = modpow(reply.public_value, pending.secret, pending.params.p);
    return CrtState{pending.params, pending.secret, pending.public_value, reply.public_value,
                    std::move(key)};
}

ChainState chain_from_crt(const CrtState& crt) {
    return ChainState{0, crt.key, std::nullopt, crt.params.p, crt.params.g};
}

namespace {

void require_fresh_group(const ChainState& chain, const DomainParams& params) {
    if (params.p == chain.crt_p || params.g == chain.crt_g)
        raise(Errc::group_reuse, "session group repeats the root-of-trust p or g");
}

Nat mix_key(const ChainState& chain, const DomainParams& params, const Nat& peer_public,
            const Nat& own_secret) {
    Nat dh = modpow(peer_public, own_secret, params.p);
    Nat chained = modpow(params.g, chain.chain_secret, params.p);
    return (dh * chained) % params.p;
}

} // namespace

std::pair<SessionEphemeral, Offer> session_offer(const ChainState& chain, Rng& rng,
                                                 const DomainParams& params) {
    require_valid_group(params);
    require_fresh_group(chain, params);

    auto [secret, pub] = sample_keypair(params, rng, &chain.chain_secret);
    Nonce nonce = chain.index == 0 ? Nonce::zero(params.n) : Nonce::random(rng, params.p, params.n);

    SessionEphemeral eph{params, Role::Initiator, std::move(secret), nonce, std::nullopt};
    Offer offer{chain.index, std::move(pub), params.p, params.g, nonce};
    return {std::move(eph), std::move(offer)};
}

std::pair<SessionEphemeral, Offer> session_offer(const ChainState& chain,
                                                 const DomainParams& params, const Nat& secret,
                                                 const Nonce& nonce) {
    require_valid_group(params);
    require_fresh_group(chain, params);
    require_secret_range(secret, params.p);
    if (secret == chain.chain_secret)
        raise(Errc::invalid_input, "link secret must differ from the chain secret");
    if (nonce.width_bits != params.n)
        raise(Errc::invalid_input, "nonce width must equal the group bit count");

    Nat pub = modpow(params.g, secret, params.p);
    require_public_value(pub, params.p, "own public value");

    SessionEphemeral eph{params, Role::Initiator, secret, nonce, std::nullopt};
    Offer offer{chain.index, std::move(pub), params.p, params.g, nonce};
    return {std::move(eph), std::move(offer)};
}

namespace {

DomainParams params_from_offer(const Offer& offer) {
    return DomainParams{offer.p, (offer.p - Nat(1)) >> 1, offer.g, offer.nonce.width_bits};
}

std::pair<SessionEphemeral, Reply> session_respond_checked(const ChainState& chain,
                                                           const Offer& offer, const Nat& secret,
                                                           const Nat& reply_public) {
    DomainParams params = params_from_offer(offer);
    Nat key = mix_key(chain, params, offer.public_value, secret);
    SessionEphemeral eph{std::move(params), Role::Responder, secret, offer.nonce, std::move(key)};
    Reply reply{chain.index, reply_public};
    return {std::move(eph), std::move(reply)};
}

} // namespace

std::pair<SessionEphemeral, Reply> session_respond(const ChainState& chain, const Offer& offer,
                                                   Rng& rng) {
    if (offer.index != chain.index)
        raise(Errc::chain_index_mismatch, "offer is for a different link");
    DomainParams params = params_from_offer(offer);
    require_valid_group(params);
    require_fresh_group(chain, params);
    require_public_value(offer.public_value, params.p, "peer public value");

    auto [secret, pub] = sample_keypair(params, rng, &chain.chain_secret);
    return session_respond_checked(chain, offer, secret, pub);
}

std::pair<SessionEphemeral, Reply> session_respond(const ChainState& chain, const Offer& offer,
                                                   const Nat& secret) {
    if (offer.index != chain.index)
        raise(Errc::chain_index_mismatch, "offer is for a different link");
    DomainParams params = params_from_offer(offer);
    require_valid_group(params);
    require_fresh_group(chain, params);
    require_public_value(offer.public_value, params.p, "peer public value");
    require_secret_range(secret, params.p);
    if (secret == chain.chain_secret)
        raise(Errc::invalid_input, "link secret must differ from the chain secret");

    Nat pub = modpow(params.g, secret, params.p);
    require_public_value(pub, params.p, "own public value");
    return session_respond_checked(chain, offer, secret, pub);
}

Nat session_complete(const ChainState& chain, SessionEphemeral& eph, const Reply& reply) {
    if (reply.index != chain.index)
        raise(Errc::chain_index_mismatch, "reply is for a different link");
    require_public_value(reply.public_value, eph.params.p, "peer public value");

    Nat key = mix_key(chain, eph.params, reply.public_value, eph.secret);
    eph.pending_key = key;
    return key;
}

bool key_strength_ok(const Nat& key, unsigned n) {
    return key.bit_length() + 2 >= n;
}

Digest make_verify(const ChainState& chain, Role role, const Nat& key_i, const Nonce& nonce) {
    return link_digest(role, key_i, chain.chain_secret, chain.prev_digest, nonce);
}

bool check_verify(const ChainState& chain, Role role, const Nat& key_i, const Nonce& nonce,
                  const Digest& peer_digest) {
    Digest expected = link_digest(other_role(role), key_i, chain.chain_secret, chain.prev_digest, nonce);
    return expected == peer_digest;
}

void commit(ChainState& chain, SessionEphemeral& eph, const Digest& initiator_digest) {
    if (!eph.pending_key)
        raise(Errc::stale_state, "link already committed or aborted");

    Nat next_secret = kdf(*eph.pending_key, "chain", eph.params.n);

    chain.chain_secret.wipe();
    chain.chain_secret = std::move(next_secret);
    chain.prev_digest = initiator_digest;
    chain.index += 1;

    eph.pending_key->wipe();
    eph.pending_key.reset();
    eph.secret.wipe();
    eph.nonce.value.wipe();
}

void abort_link(SessionEphemeral& eph) {
    if (eph.pending_key) {
        eph.pending_key->wipe();
        eph.pending_key.reset();
    }
    eph.secret.wipe();
    eph.nonce.value.wipe();
}

} // namespace cke
