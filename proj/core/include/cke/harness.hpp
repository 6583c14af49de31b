#pragma once

// Adversary experiments and timing runs against the chained exchange.
//
// Each attack_* function plays a concrete outsider strategy against the
// real protocol code and counts how often the adversary wins. The matching
// *_sanity variants hand the adversary the missing knowledge on purpose;
// they are expected to succeed, which proves the experiment is capable of
// observing a win at all.

#include <string>
#include <string_view>
#include <vector>

#include "cke/groups.hpp"
#include "cke/rng.hpp"

namespace cke {

struct AttackReport {
    std::string scenario;
    int runs = 0;
    int successes = 0; // times the adversary's guess was accepted
    int expected = 0;  // what the scheme predicts (0 outside sanity runs)
    std::string note;

    bool pass() const { return successes == expected; }
};

// The adversary learns both per-link secrets and every public value, but
// not the chain secret, and bets the session key is plain g^(a*b).
AttackReport attack_state_reveal(const DomainParams& params, int trials, Rng& rng);

// Same bet, checked for every (a, b, chain-secret) triple of a small group.
AttackReport attack_state_reveal_exhaustive(const DomainParams& params);

// Inversion: the chain secret is degenerately forced to zero, so g^(a*b)
// is the key and the adversary must win every time.
AttackReport attack_state_reveal_sanity(const DomainParams& params, int trials, Rng& rng);

// The adversary records one full link (both secrets, the key, and the
// root key), then tries every closed-form power g^(x*y) of its knowledge
// against the following link's key.
AttackReport attack_forward_secrecy(const DomainParams& params, int trials, Rng& rng);

// Inversion: additionally handed the next link's initiator secret, the
// adversary can rebuild the chain secret from the old key and must win.
AttackReport attack_forward_secrecy_sanity(const DomainParams& params, int trials, Rng& rng);

// A machine-in-the-middle without the chain secret runs the full link
// protocol against both honest peers at once; counts honest commits.
AttackReport attack_impersonation(const DomainParams& params, Rng& rng);

// Inversion: the same machine-in-the-middle holding the true chain secret
// must walk both peers through to commitment.
AttackReport attack_impersonation_sanity(const DomainParams& params, Rng& rng);

// Replays recorded link-0 material at a peer that has moved on, and checks
// that no key or chain secret is ever recycled across a 10-link chain.
AttackReport attack_replay_denning_sacco(const DomainParams& params, Rng& rng);

// Inversion: against a peer rolled back to its pre-link state, the same
// replay must be accepted.
AttackReport attack_replay_denning_sacco_sanity(const DomainParams& params, Rng& rng);

// All four scenarios plus their sanity inversions, in a fixed order.
std::vector<AttackReport> run_attack_suite(const DomainParams& params, int trials, Rng& rng);

// Single scenario by table name: "state-reveal", "state-reveal-exhaustive",
// "forward-secrecy", "impersonation", "replay-denning-sacco", or any of
// them with "-sanity" appended. Raises UnknownScenario.
AttackReport run_attack(std::string_view scenario, const DomainParams& params, int trials,
                        Rng& rng);

std::string attack_table(const std::vector<AttackReport>& reports);

// ---------------------------------------------------------------------------
// Chain-cycle timing.
// ---------------------------------------------------------------------------

struct BenchStats {
    std::string setup;
    unsigned n_bits = 0;
    int trials = 0;
    double mean_s = 0.0;
    double min_s = 0.0;
    double max_s = 0.0;
};

// Times one complete link negotiation in process (offer, reply, both key
// derivations, both digests, both cross-checks, both commits) with no
// network in the path. Secrets and nonce are fixed ahead of time, so every
// trial exponentiates identical bit patterns and variance reflects only
// the machine. n_bits selects the pinned 1024- or 2048-bit group;
// trials must be at least 5.
BenchStats bench_chain_cycle(unsigned n_bits, int trials, const std::string& setup = "local");

// Text table shaped like a published-timings comparison: one row per
// setup with its 1024-bit and 2048-bit means and their ratio.
std::string bench_table(const std::vector<BenchStats>& rows);

// One CSV row per BenchStats: setup,n_bits,trials,mean_s,min_s,max_s.
std::string bench_csv(const std::vector<BenchStats>& rows);
std::vector<BenchStats> parse_bench_csv(const std::string& csv);

} // namespace cke
