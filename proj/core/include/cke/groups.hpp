#pragma once

#include <string>
#include <string_view>

#include "cke/nat.hpp"
#include "cke/rng.hpp"

namespace cke {

// A safe-prime Diffie-Hellman group: p = 2q + 1 with p, q prime, and g a
// primitive root mod p (order p - 1, not merely the order-q subgroup).
struct DomainParams {
    Nat p;
    Nat q; // (p - 1) / 2
    Nat g;
    unsigned n = 0; // bit length of p

    bool operator==(const DomainParams&) const = default;
};

enum class GroupCheck {
    Valid,
    CompositeModulus,
    NotSafePrime,
    BadGeneratorRange,
    SmallOrderGenerator,
    BitLengthMismatch,
};

std::string_view group_check_name(GroupCheck c);

// Checks every DomainParams invariant and reports the first violation found
// instead of throwing: callers use this to refuse untrusted parameters.
GroupCheck validate_group(const DomainParams& params);

// Searches random odd candidates until p and (p-1)/2 both pass 40
// Miller-Rabin rounds. The top bit is forced so the result has exactly
// `bits` bits. Intended for small test sizes and offline fixture
// generation; cost grows steeply with size.
Nat generate_safe_prime(unsigned bits, Rng& rng);

// True iff g generates the full group mod safe prime p: g^2 != 1 and
// g^q != 1. For p = 2q + 1 these two checks rule out every proper divisor
// of p - 1 = 2q.
bool is_primitive_root(const Nat& g, const Nat& p, const Nat& q);

// Picks a random primitive root of a validated safe prime. Raises
// InvalidInput if p is not a safe prime.
Nat find_primitive_root(const Nat& p, Rng& rng);

// Convenience: generate_safe_prime + find_primitive_root, assembled and
// revalidated.
DomainParams generate_group(unsigned bits, Rng& rng);

// Pinned groups for tests and benchmarks: "test5" (5-bit), "test6" (6-bit),
// "bench1024", "bench2048". Each is revalidated on first use (40-round
// primality checks, cached per process). Raises UnknownGroup otherwise.
DomainParams builtin_group(std::string_view name);

// Parses groups from a plain text file of key=value records:
//
//   name=test5
//   p=17
//   g=5
//   n=5
//
// (p and g in hex, n decimal; blank line between records). Every record is
// run through validate_group; any failure raises InvalidGroup. A missing
// name raises InvalidInput; the named record absent raises UnknownGroup.
DomainParams load_group_file(const std::string& path, std::string_view name);

} // namespace cke
