#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cke {

class Rng;

/// Arbitrary-precision natural number.
///
/// Canonical form: no leading zero limbs; zero is the empty magnitude.
/// All protocol integers (secrets, public values, moduli, keys) are Nats.
class Nat {
public:
    Nat() = default;
    explicit Nat(std::uint64_t v);

    static Nat from_hex(std::string_view s);
    static Nat from_bytes_be(std::span<const std::uint8_t> bytes);

    std::string to_hex() const;
    std::vector<std::uint8_t> to_bytes_be() const;
    std::vector<std::uint8_t> to_bytes_be_padded(std::size_t width) const;
    std::uint64_t to_u64() const;

    bool is_zero() const noexcept { return limbs_.empty(); }
    bool is_odd() const noexcept { return !limbs_.empty() && (limbs_[0] & 1u); }

    /// 0 for zero, otherwise position of the highest set bit + 1.
    std::size_t bit_length() const noexcept;
    bool bit(std::size_t i) const noexcept;

    std::strong_ordering operator<=>(const Nat& rhs) const noexcept;
    bool operator==(const Nat& rhs) const noexcept { return limbs_ == rhs.limbs_; }

    Nat operator+(const Nat& rhs) const;
    Nat operator-(const Nat& rhs) const; // requires *this >= rhs
    Nat operator*(const Nat& rhs) const;
    Nat operator%(const Nat& m) const;   // requires m > 0
    Nat operator<<(std::size_t bits) const;
    Nat operator>>(std::size_t bits) const;

    Nat& operator+=(const Nat& rhs) { return *this = *this + rhs; }
    Nat& operator-=(const Nat& rhs) { return *this = *this - rhs; }

    /// Overwrite the magnitude with zeros before releasing it.
    void wipe() noexcept;

    std::span<const std::uint32_t> limbs() const noexcept { return limbs_; }

private:
    std::vector<std::uint32_t> limbs_; // least-significant limb first

    void trim() noexcept;
    friend struct NatDiv;
};

struct DivMod {
    Nat quotient;
    Nat remainder;
};

/// Quotient and remainder; requires b > 0.
DivMod divmod(const Nat& a, const Nat& b);

/// base^exp mod m via left-to-right square-and-multiply; requires m >= 2.
Nat modpow(const Nat& base, const Nat& exp, const Nat& m);

/// Magnitude plus sign; only gcdext cofactors carry signs.
struct SignedNat {
    Nat magnitude;
    bool negative = false;
};

struct GcdResult {
    Nat g;
    SignedNat x;
    SignedNat y;
};

/// Extended Euclid: g = gcd(a, b) with a*x + b*y = g. Requires a, b not both zero.
GcdResult gcdext(const Nat& a, const Nat& b);

/// Modular inverse of a mod m; requires m >= 2, throws NotInvertible if gcd(a, m) != 1.
Nat invert(const Nat& a, const Nat& m);

/// Uniform draw from [1, m-1] by rejection sampling; requires m >= 2.
Nat rand_below(Rng& rng, const Nat& m);

/// Miller-Rabin probable-prime test. Deterministic (fixed witness set) for
/// n < 3317044064679887385961981; otherwise `rounds` random bases from rng.
bool miller_rabin(const Nat& n, unsigned rounds, Rng& rng);
bool miller_rabin(const Nat& n, unsigned rounds);

} // namespace cke
