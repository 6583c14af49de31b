#include "cke/nat.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "cke/errors.hpp"
#include "cke/rng.hpp"

namespace cke {

namespace {

constexpr unsigned kLimbBits = 32;

int hex_digit(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

} // namespace

Nat::Nat(std::uint64_t v) {
    if (v != 0) limbs_.push_back(static_cast<std::uint32_t>(v));
    if (v >> 32) limbs_.push_back(static_cast<std::uint32_t>(v >> 32));
}

void Nat::trim() noexcept {
    while (!limbs_.empty() && limbs_.back() == 0) limbs_.pop_back();
}

Nat Nat::from_hex(std::string_view s) {
    if (s.empty()) raise(Errc::parse_error, "empty hex string");
    for (char c : s)
        if (hex_digit(c) < 0) raise(Errc::parse_error, "non-hex character in input");
    Nat out;
    out.limbs_.assign((s.size() + 7) / 8, 0);
    std::size_t nibble = 0;
    for (auto it = s.rbegin(); it != s.rend(); ++it, ++nibble) {
        auto v = static_cast<std::uint32_t>(hex_digit(*it));
        out.limbs_[nibble / 8] |= v << (4 * (nibble % 8));
    }
    out.trim();
    return out;
}

std::string Nat::to_hex() const {
    if (is_zero()) return "0";
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(limbs_.size() * 8);
    for (std::size_t i = limbs_.size(); i-- > 0;) {
        for (int shift = 28; shift >= 0; shift -= 4)
            out.push_back(digits[(limbs_[i] >> shift) & 0xF]);
    }
    out.erase(0, out.find_first_not_of('0'));
    return out;
}

Nat Nat::from_bytes_be(std::span<const std::uint8_t> bytes) {
    Nat out;
    out.limbs_.assign((bytes.size() + 3) / 4, 0);
    std::size_t pos = 0;
    for (auto it = bytes.rbegin(); it != bytes.rend(); ++it, ++pos)
        out.limbs_[pos / 4] |= static_cast<std::uint32_t>(*it) << (8 * (pos % 4));
    out.trim();
    return out;
}

std::vector<std::uint8_t> Nat::to_bytes_be() const {
    std::vector<std::uint8_t> out((bit_length() + 7) / 8);
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::size_t byte = out.size() - 1 - i; // position from LSB
        out[i] = static_cast<std::uint8_t>(limbs_[byte / 4] >> (8 * (byte % 4)));
    }
    return out;
}

std::vector<std::uint8_t> Nat::to_bytes_be_padded(std::size_t width) const {
    auto minimal = to_bytes_be();
    if (minimal.size() > width)
        raise(Errc::invalid_input, "value does not fit in requested width");
    std::vector<std::uint8_t> out(width, 0);
    std::copy(minimal.begin(), minimal.end(), out.begin() + (width - minimal.size()));
    return out;
}

std::uint64_t Nat::to_u64() const {
    if (limbs_.size() > 2) raise(Errc::invalid_input, "value exceeds 64 bits");
    std::uint64_t v = 0;
    if (limbs_.size() > 1) v = static_cast<std::uint64_t>(limbs_[1]) << 32;
    if (!limbs_.empty()) v |= limbs_[0];
    return v;
}

std::size_t Nat::bit_length() const noexcept {
    if (limbs_.empty()) return 0;
    std::uint32_t top = limbs_.back();
    unsigned bits = 0;
    while (top) {
        ++bits;
        top >>= 1;
    }
    return (limbs_.size() - 1) * kLimbBits + bits;
}

bool Nat::bit(std::size_t i) const noexcept {
    std::size_t limb = i / kLimbBits;
    if (limb >= limbs_.size()) return false;
    return (limbs_[limb] >> (i % kLimbBits)) & 1u;
}

std::strong_ordering Nat::operator<=>(const Nat& rhs) const noexcept {
    if (limbs_.size() != rhs.limbs_.size())
        return limbs_.size() <=> rhs.limbs_.size();
    for (std::size_t i = limbs_.size(); i-- > 0;) {
        if (limbs_[i] != rhs.limbs_[i]) return limbs_[i] <=> rhs.limbs_[i];
    }
    return std::strong_ordering::equal;
}

Nat Nat::operator+(const Nat& rhs) const {
    const auto& a = limbs_;
    const auto& b = rhs.limbs_;
    Nat out;
    out.limbs_.resize(std::max(a.size(), b.size()) + 1, 0);
    std::uint64_t carry = 0;
    for (std::size_t i = 0; i < out.limbs_.size(); ++i) {
        std::uint64_t sum = carry;
        if (i < a.size()) sum += a[i];
        if (i < b.size()) sum += b[i];
        out.limbs_[i] = static_cast<std::uint32_t>(sum);
        carry = sum >> 32;
    }
    out.trim();
    return out;
}

Nat Nat::operator-(const Nat& rhs) const {
    if (*this < rhs) raise(Errc::underflow, "subtraction would go negative");
    Nat out;
    out.limbs_.resize(limbs_.size(), 0);
    std::int64_t borrow = 0;
    for (std::size_t i = 0; i < limbs_.size(); ++i) {
        std::int64_t diff = static_cast<std::int64_t>(limbs_[i]) - borrow -
                            (i < rhs.limbs_.size() ? rhs.limbs_[i] : 0);
        borrow = diff < 0;
        if (diff < 0) diff += (1LL << 32);
        out.limbs_[i] = static_cast<std::uint32_t>(diff);
    }
    out.trim();
    return out;
}

Nat Nat::operator*(const Nat& rhs) const {
    if (is_zero() || rhs.is_zero()) return {};
    Nat out;
    out.limbs_.assign(limbs_.size() + rhs.limbs_.size(), 0);
    for (std::size_t i = 0; i < limbs_.size(); ++i) {
        std::uint64_t carry = 0;
        std::uint64_t ai = limbs_[i];
        for (std::size_t j = 0; j < rhs.limbs_.size(); ++j) {
            std::uint64_t cur = out.limbs_[i + j] + ai * rhs.limbs_[j] + carry;
            out.limbs_[i + j] = static_cast<std::uint32_t>(cur);
            carry = cur >> 32;
        }
        std::size_t k = i + rhs.limbs_.size();
        while (carry) {
            std::uint64_t cur = out.limbs_[k] + carry;
            out.limbs_[k] = static_cast<std::uint32_t>(cur);
            carry = cur >> 32;
            ++k;
        }
    }
    out.trim();
    return out;
}

Nat Nat::operator<<(std::size_t bits) const {
    if (is_zero() || bits == 0) return *this;
    std::size_t limb_shift = bits / kLimbBits;
    unsigned bit_shift = bits % kLimbBits;
    Nat out;
    out.limbs_.assign(limbs_.size() + limb_shift + 1, 0);
    for (std::size_t i = 0; i < limbs_.size(); ++i) {
        std::uint64_t v = static_cast<std::uint64_t>(limbs_[i]) << bit_shift;
        out.limbs_[i + limb_shift] |= static_cast<std::uint32_t>(v);
        out.limbs_[i + limb_shift + 1] |= static_cast<std::uint32_t>(v >> 32);
    }
    out.trim();
    return out;
}

Nat Nat::operator>>(std::size_t bits) const {
    std::size_t limb_shift = bits / kLimbBits;
    unsigned bit_shift = bits % kLimbBits;
    if (limb_shift >= limbs_.size()) return {};
    Nat out;
    out.limbs_.assign(limbs_.size() - limb_shift, 0);
    for (std::size_t i = 0; i < out.limbs_.size(); ++i) {
        std::uint64_t v = limbs_[i + limb_shift] >> bit_shift;
        if (bit_shift && i + limb_shift + 1 < limbs_.size())
            v |= static_cast<std::uint64_t>(limbs_[i + limb_shift + 1]) << (32 - bit_shift);
        out.limbs_[i] = static_cast<std::uint32_t>(v);
    }
    out.trim();
    return out;
}

void Nat::wipe() noexcept {
    std::fill(limbs_.begin(), limbs_.end(), 0u);
    // keep the zeroing store from being elided before release
    if (!limbs_.empty()) asm volatile("" : : "r"(limbs_.data()) : "memory");
    limbs_.clear();
    limbs_.shrink_to_fit();
}

struct NatDiv {
    static Nat make(std::vector<std::uint32_t> limbs) {
        Nat out;
        out.limbs_ = std::move(limbs);
        out.trim();
        return out;
    }
};

// Knuth algorithm D, base 2^32.
DivMod divmod(const Nat& a, const Nat& b) {
    if (b.is_zero()) raise(Errc::division_by_zero, "divmod by zero");
    if (a < b) return {Nat{}, a};

    auto bl = b.limbs();
    if (bl.size() == 1) {
        std::uint64_t d = bl[0];
        auto al = a.limbs();
        std::vector<std::uint32_t> q(al.size());
        std::uint64_t rem = 0;
        for (std::size_t i = al.size(); i-- > 0;) {
            std::uint64_t cur = (rem << 32) | al[i];
            q[i] = static_cast<std::uint32_t>(cur / d);
            rem = cur % d;
        }
        return {NatDiv::make(std::move(q)), Nat(rem)};
    }

    unsigned shift = 32 - (b.bit_length() % 32 == 0 ? 32 : b.bit_length() % 32);
    Nat an = a << shift;
    Nat bn = b << shift;
    auto u = std::vector<std::uint32_t>(an.limbs().begin(), an.limbs().end());
    auto v = std::vector<std::uint32_t>(bn.limbs().begin(), bn.limbs().end());
    std::size_t n = v.size();
    std::size_t m = u.size() - n;
    u.push_back(0);

    std::vector<std::uint32_t> q(m + 1, 0);
    const std::uint64_t base = 1ULL << 32;
    for (std::size_t j = m + 1; j-- > 0;) {
        std::uint64_t top = (static_cast<std::uint64_t>(u[j + n]) << 32) | u[j + n - 1];
        std::uint64_t qhat = top / v[n - 1];
        std::uint64_t rhat = top % v[n - 1];
        while (qhat >= base ||
               qhat * v[n - 2] > ((rhat << 32) | u[j + n - 2])) {
            --qhat;
            rhat += v[n - 1];
            if (rhat >= base) break;
        }
        // multiply-subtract
        std::int64_t borrow = 0;
        std::uint64_t carry = 0;
        for (std::size_t i = 0; i < n; ++i) {
            std::uint64_t p = qhat * v[i] + carry;
            carry = p >> 32;
            std::int64_t t = static_cast<std::int64_t>(u[i + j]) -
                             static_cast<std::int64_t>(p & 0xFFFFFFFFULL) - borrow;
            borrow = t < 0;
            if (t < 0) t += static_cast<std::int64_t>(base);
            u[i + j] = static_cast<std::uint32_t>(t);
        }
        std::int64_t t = static_cast<std::int64_t>(u[j + n]) -
                         static_cast<std::int64_t>(carry) - borrow;
        bool negative = t < 0;
        u[j + n] = static_cast<std::uint32_t>(negative ? t + static_cast<std::int64_t>(base) : t);
        q[j] = static_cast<std::uint32_t>(qhat);
        if (negative) {
            // add back
            --q[j];
            std::uint64_t c = 0;
            for (std::size_t i = 0; i < n; ++i) {
                std::uint64_t s = static_cast<std::uint64_t>(u[i + j]) + v[i] + c;
                u[i + j] = static_cast<std::uint32_t>(s);
                c = s >> 32;
            }
            u[j + n] += static_cast<std::uint32_t>(c);
        }
    }

    u.resize(n);
    Nat rem = NatDiv::make(std::move(u)) >> shift;
    return {NatDiv::make(std::move(q)), rem};
}

Nat Nat::operator%(const Nat& m) const {
    if (m.is_zero()) raise(Errc::division_by_zero, "modulus is zero");
    return divmod(*this, m).remainder;
}

Nat modpow(const Nat& base, const Nat& exp, const Nat& m) {
    if (m < Nat(2)) raise(Errc::division_by_zero, "modulus must be >= 2");
    Nat result(1);
    Nat b = base % m;
    std::size_t nbits = exp.bit_length();
    for (std::size_t i = nbits; i-- > 0;) {
        result = (result * result) % m;
        if (exp.bit(i)) result = (result * b) % m;
    }
    return result;
}

namespace {

SignedNat signed_sub(const SignedNat& a, const SignedNat& b) {
    if (a.negative == b.negative) {
        if (a.magnitude >= b.magnitude)
            return {a.magnitude - b.magnitude, a.negative && !(a.magnitude == b.magnitude)};
        return {b.magnitude - a.magnitude, !a.negative};
    }
    return {a.magnitude + b.magnitude, a.negative};
}

SignedNat signed_mul(const SignedNat& a, const Nat& q) {
    Nat mag = a.magnitude * q;
    return {mag, a.negative && !mag.is_zero()};
}

} // namespace

GcdResult gcdext(const Nat& a, const Nat& b) {
    if (a.is_zero() && b.is_zero())
        raise(Errc::invalid_input, "gcd of (0, 0) is undefined");
    Nat old_r = a, r = b;
    SignedNat old_s{Nat(1), false}, s{Nat{}, false};
    SignedNat old_t{Nat{}, false}, t{Nat(1), false};
    while (!r.is_zero()) {
        auto [q, rem] = divmod(old_r, r);
        old_r = r;
        r = rem;
        SignedNat ns = signed_sub(old_s, signed_mul(s, q));
        old_s = s;
        s = ns;
        SignedNat nt = signed_sub(old_t, signed_mul(t, q));
        old_t = t;
        t = nt;
    }
    return {old_r, old_s, old_t};
}

Nat invert(const Nat& a, const Nat& m) {
    if (m < Nat(2)) raise(Errc::division_by_zero, "modulus must be >= 2");
    Nat ar = a % m;
    if (ar.is_zero()) raise(Errc::not_invertible, "gcd(a, m) != 1");
    auto res = gcdext(ar, m);
    if (res.g != Nat(1)) raise(Errc::not_invertible, "gcd(a, m) != 1");
    if (res.x.negative) return m - (res.x.magnitude % m);
    return res.x.magnitude % m;
}

Nat rand_below(Rng& rng, const Nat& m) {
    if (m < Nat(2)) raise(Errc::invalid_input, "upper bound must be >= 2");
    std::size_t bits = m.bit_length();
    std::size_t nbytes = (bits + 7) / 8;
    unsigned top_mask = (bits % 8) ? ((1u << (bits % 8)) - 1) : 0xFFu;
    std::vector<std::uint8_t> buf(nbytes);
    for (;;) {
        rng.fill(buf);
        buf[0] &= static_cast<std::uint8_t>(top_mask);
        Nat candidate = Nat::from_bytes_be(buf);
        if (!candidate.is_zero() && candidate < m) return candidate;
    }
}

namespace {

bool mr_witness_composite(const Nat& n, const Nat& a, const Nat& d, std::size_t s) {
    Nat x = modpow(a, d, n);
    Nat n1 = n - Nat(1);
    if (x == Nat(1) || x == n1) return false;
    for (std::size_t i = 1; i < s; ++i) {
        x = (x * x) % n;
        if (x == n1) return false;
    }
    return true;
}

// 3317044064679887385961981: below this the 12-witness set is exact.
const Nat& deterministic_bound() {
    static const Nat bound = Nat::from_hex("2be6951adc5b22410a5fd");
    return bound;
}

} // namespace

bool miller_rabin(const Nat& n, unsigned rounds, Rng& rng) {
    if (n < Nat(2)) raise(Errc::invalid_input, "primality is defined for n >= 2");
    if (rounds < 1) raise(Errc::invalid_input, "rounds must be >= 1");
    if (n == Nat(2) || n == Nat(3)) return true;
    if (!n.is_odd()) return false;

    Nat n1 = n - Nat(1);
    Nat d = n1;
    std::size_t s = 0;
    while (!d.is_odd()) {
        d = d >> 1;
        ++s;
    }

    if (n < deterministic_bound()) {
        static constexpr std::array<std::uint32_t, 12> witnesses = {2,  3,  5,  7,  11, 13,
                                                                    17, 19, 23, 29, 31, 37};
        for (std::uint32_t w : witnesses) {
            Nat a(w);
            if (a % n == Nat{}) continue;
            if (mr_witness_composite(n, a % n, d, s)) return false;
        }
        return true;
    }
    for (unsigned i = 0; i < rounds; ++i) {
        Nat a = rand_below(rng, n1); // in [1, n-2]
        if (a == Nat(1)) a = Nat(2);
        if (mr_witness_composite(n, a, d, s)) return false;
    }
    return true;
}

bool miller_rabin(const Nat& n, unsigned rounds) {
    static thread_local Rng rng; // OS-entropy seeded
    return miller_rabin(n, rounds, rng);
}

} // namespace cke
