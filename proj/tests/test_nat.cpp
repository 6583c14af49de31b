#include <cstdint>
#include <numeric>
#include <random>

#include "doctest.h"

#include "cke/errors.hpp"
#include "cke/nat.hpp"

using namespace cke;

namespace {

Nat from_u64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%llx", static_cast<unsigned long long>(v));
    return Nat::from_hex(buf);
}

std::uint64_t to_u64(const Nat& v) {
    return std::stoull(v.to_hex(), nullptr, 16);
}

} // namespace

TEST_CASE("hex round trip and canonical form") {
    CHECK(Nat(0).to_hex() == "0");
    CHECK(Nat(1).to_hex() == "1");
    CHECK(Nat::from_hex("0").to_hex() == "0");
    CHECK(Nat::from_hex("00000ff").to_hex() == "ff");
    CHECK(Nat::from_hex("DeadBeef").to_hex() == "deadbeef");
    CHECK(Nat::from_hex("123456789abcdef0123456789abcdef").to_hex() ==
          "123456789abcdef0123456789abcdef");
    CHECK_THROWS_AS(Nat::from_hex(""), Error);
    CHECK_THROWS_AS(Nat::from_hex("12g4"), Error);
}

TEST_CASE("byte import ignores leading zeros") {
    std::uint8_t bytes[] = {0x00, 0x00, 0x01, 0x02};
    CHECK(Nat::from_bytes_be(bytes).to_hex() == "102");
    CHECK(Nat::from_bytes_be(std::span<const std::uint8_t>{}) == Nat(0));
}

TEST_CASE("bit length") {
    CHECK(Nat(0).bit_length() == 0);
    CHECK(Nat(1).bit_length() == 1);
    CHECK(Nat(2).bit_length() == 2);
    CHECK(Nat(255).bit_length() == 8);
    CHECK(Nat(256).bit_length() == 9);
    CHECK((Nat(1) << 1021).bit_length() == 1022);
}

TEST_CASE("native double-width oracle over random small operands") {
    std::mt19937_64 gen(0xace0fba5eull);
    for (int i = 0; i < 100000; ++i) {
        std::uint64_t a = gen() >> (gen() % 40);
        std::uint64_t b = gen() >> (gen() % 40);
        Nat na = from_u64(a), nb = from_u64(b);

        auto wide = [](unsigned __int128 v) {
            return (from_u64(static_cast<std::uint64_t>(v >> 64)) << 64) +
                   from_u64(static_cast<std::uint64_t>(v));
        };
        CHECK(na + nb == wide(static_cast<unsigned __int128>(a) + b));
        CHECK(na * nb == wide(static_cast<unsigned __int128>(a) * b));

        if (a >= b) {
            CHECK(to_u64(na - nb) == a - b);
        } else {
            CHECK_THROWS_AS(na - nb, Error);
        }
        if (b != 0) {
            DivMod dm = divmod(na, nb);
            CHECK(to_u64(dm.quotient) == a / b);
            CHECK(to_u64(dm.remainder) == a % b);
            CHECK(to_u64(na % nb) == a % b);
        }
        CHECK((na < nb) == (a < b));
        CHECK((na == nb) == (a == b));
    }
}

TEST_CASE("addition can overflow a limb boundary") {
    // 2^64 - 1 + 1 carries across two limbs.
    Nat a = Nat::from_hex("ffffffffffffffff");
    CHECK((a + Nat(1)).to_hex() == "10000000000000000");
    Nat b = Nat::from_hex("ffffffffffffffffffffffffffffffff");
    CHECK((b + Nat(1)).to_hex() == "100000000000000000000000000000000");
}

TEST_CASE("division identities at large sizes") {
    std::mt19937_64 gen(77);
    for (int i = 0; i < 200; ++i) {
        // Random operands of a few hundred bits.
        std::string ha, hb;
        int la = 1 + int(gen() % 80), lb = 1 + int(gen() % 40);
        static const char* digits = "0123456789abcdef";
        ha.push_back(digits[1 + gen() % 15]);
        for (int j = 1; j < la; ++j) ha.push_back(digits[gen() % 16]);
        hb.push_back(digits[1 + gen() % 15]);
        for (int j = 1; j < lb; ++j) hb.push_back(digits[gen() % 16]);
        Nat a = Nat::from_hex(ha), b = Nat::from_hex(hb);
        DivMod dm = divmod(a, b);
        CHECK(dm.remainder < b);
        CHECK(dm.quotient * b + dm.remainder == a);
        CHECK(divmod(a * b, b).quotient == a);
        CHECK((a * b) % b == Nat(0));
    }
}

TEST_CASE("division by zero and underflow are structured errors") {
    CHECK_THROWS_AS(divmod(Nat(5), Nat(0)), Error);
    CHECK_THROWS_AS(Nat(5) % Nat(0), Error);
    try {
        Nat r = Nat(3) - Nat(4);
        (void)r;
        FAIL("subtraction underflow not raised");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::underflow);
    }
    try {
        divmod(Nat(1), Nat(0));
        FAIL("division by zero not raised");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::division_by_zero);
    }
}

TEST_CASE("shifts") {
    CHECK((Nat(1) << 0) == Nat(1));
    CHECK((Nat(1) << 100).to_hex() == "10000000000000000000000000");
    CHECK(((Nat(1) << 100) >> 100) == Nat(1));
    CHECK((Nat(0xff) >> 4) == Nat(0xf));
    CHECK((Nat(1) >> 1) == Nat(0));
    std::mt19937_64 gen(5);
    for (int i = 0; i < 1000; ++i) {
        std::uint64_t v = gen();
        unsigned s = gen() % 63;
        CHECK(to_u64(from_u64(v) >> s) == v >> s);
    }
}

TEST_CASE("modpow against a native oracle") {
    auto powmod = [](std::uint64_t b, std::uint64_t e, std::uint64_t m) {
        unsigned __int128 acc = 1, base = b % m;
        while (e) {
            if (e & 1) acc = acc * base % m;
            base = base * base % m;
            e >>= 1;
        }
        return static_cast<std::uint64_t>(acc);
    };
    std::mt19937_64 gen(99);
    for (int i = 0; i < 2000; ++i) {
        std::uint64_t m = (gen() >> 32) | 1; // odd, < 2^32 so products fit
        std::uint64_t b = gen() % m;
        std::uint64_t e = gen() >> (gen() % 50);
        CHECK(to_u64(modpow(from_u64(b), from_u64(e), from_u64(m))) == powmod(b, e, m));
    }
    CHECK(modpow(Nat(0), Nat(0), Nat(7)) == Nat(1)); // 0^0 == 1 by convention
}

TEST_CASE("modular inverse") {
    std::mt19937_64 gen(123);
    for (int i = 0; i < 500; ++i) {
        std::uint64_t m = ((gen() >> 33) | 1);
        if (m < 3) m = 3;
        std::uint64_t a = 1 + gen() % (m - 1);
        std::uint64_t g = std::gcd(a, m);
        if (g == 1) {
            Nat inv = invert(from_u64(a), from_u64(m));
            CHECK((from_u64(a) * inv) % from_u64(m) == Nat(1));
        } else {
            CHECK_THROWS_AS(invert(from_u64(a), from_u64(m)), Error);
        }
    }
    try {
        invert(Nat(6), Nat(9));
        FAIL("non-invertible not raised");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::not_invertible);
    }
}

TEST_CASE("wipe zeroes the value") {
    Nat a = Nat::from_hex("deadbeefcafef00d123456789");
    a.wipe();
    CHECK(a == Nat(0));
}
