#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "doctest.h"

#include "cke/errors.hpp"
#include "cke/groups.hpp"
#include "cke/nat.hpp"
#include "cke/rng.hpp"

using namespace cke;

namespace {

std::vector<bool> sieve_upto(std::uint32_t n) {
    std::vector<bool> prime(n, true);
    prime[0] = prime[1] = false;
    for (std::uint32_t i = 2; i * i < n; ++i)
        if (prime[i])
            for (std::uint32_t j = i * i; j < n; j += i) prime[j] = false;
    return prime;
}

} // namespace

TEST_CASE("miller-rabin agrees with a sieve below ten thousand") {
    auto prime = sieve_upto(10000);
    Rng rng(31337);
    for (std::uint32_t n = 2; n < 10000; ++n)
        CHECK(miller_rabin(Nat(n), 40, rng) == prime[n]);
    CHECK_THROWS_AS(miller_rabin(Nat(1), 40, rng), Error);
    CHECK_THROWS_AS(miller_rabin(Nat(0), 40, rng), Error);
}

TEST_CASE("primitive roots of 23, exhaustively") {
    // Order 22; g is primitive iff g^2 != 1 and g^11 != 1 mod 23.
    std::vector<std::uint32_t> expected = {5, 7, 10, 11, 14, 15, 17, 19, 20, 21};
    std::vector<std::uint32_t> found;
    for (std::uint32_t g = 2; g <= 21; ++g)
        if (is_primitive_root(Nat(g), Nat(23), Nat(11))) found.push_back(g);
    CHECK(found == expected);
}

TEST_CASE("small safe primes by exhaustive scan") {
    // p and (p-1)/2 both prime: 5, 7, 11, 23, 47, 59 below 64.
    Rng rng(2);
    std::vector<std::uint32_t> safe;
    for (std::uint32_t p = 5; p < 64; p += 2)
        if (miller_rabin(Nat(p), 40, rng) && miller_rabin(Nat((p - 1) / 2), 40, rng))
            safe.push_back(p);
    CHECK(safe == std::vector<std::uint32_t>{5, 7, 11, 23, 47, 59});
}

TEST_CASE("builtin groups validate") {
    for (const char* name : {"test5", "test6", "bench1024", "bench2048"}) {
        DomainParams params = builtin_group(name);
        CHECK(validate_group(params) == GroupCheck::Valid);
        CHECK(params.p.bit_length() == params.n);
        CHECK(params.q == (params.p - Nat(1)) >> 1);
    }
    CHECK(builtin_group("test5").p == Nat(23));
    CHECK(builtin_group("test5").g == Nat(5));
    CHECK(builtin_group("test6").p == Nat(47));
    CHECK(builtin_group("test6").g == Nat(5));
}

TEST_CASE("unknown builtin name") {
    try {
        builtin_group("nope");
        FAIL("unknown group accepted");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::unknown_group);
    }
}

TEST_CASE("validate_group rejects each invariant violation") {
    DomainParams good = builtin_group("test6");

    DomainParams composite = good;
    composite.p = Nat(45); // 45 = 9*5
    composite.q = Nat(22);
    CHECK(validate_group(composite) == GroupCheck::CompositeModulus);

    DomainParams notsafe = good;
    notsafe.p = Nat(13); // prime, but (13-1)/2 = 6 composite
    notsafe.q = Nat(6);
    notsafe.n = 4;
    CHECK(validate_group(notsafe) == GroupCheck::NotSafePrime);

    DomainParams badrange = good;
    badrange.g = Nat(1);
    CHECK(validate_group(badrange) == GroupCheck::BadGeneratorRange);
    badrange.g = Nat(46);
    CHECK(validate_group(badrange) != GroupCheck::Valid);

    DomainParams smallorder = good;
    smallorder.g = Nat(2); // 2^23 = 1 mod 47: order 23, not primitive
    CHECK(validate_group(smallorder) == GroupCheck::SmallOrderGenerator);

    DomainParams badbits = good;
    badbits.n = 7;
    CHECK(validate_group(badbits) == GroupCheck::BitLengthMismatch);
}

TEST_CASE("generated groups are safe and primitive") {
    Rng rng(404);
    for (unsigned bits : {16u, 24u, 48u}) {
        DomainParams params = generate_group(bits, rng);
        CHECK(validate_group(params) == GroupCheck::Valid);
        CHECK(params.n == bits);
        CHECK(params.p.bit_length() == bits);
    }
    Nat p = generate_safe_prime(32, rng);
    CHECK(p.bit_length() == 32);
    CHECK(miller_rabin(p, 40, rng));
    CHECK(miller_rabin((p - Nat(1)) >> 1, 40, rng));
}

TEST_CASE("group files round trip and fail closed") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "cke-group-test";
    fs::create_directories(dir);
    fs::path file = dir / "groups.txt";

    DomainParams test6 = builtin_group("test6");
    {
        std::ofstream out(file);
        out << "name=toy\n";
        out << "p=" << test6.p.to_hex() << "\n";
        out << "q=" << test6.q.to_hex() << "\n";
        out << "g=" << test6.g.to_hex() << "\n";
        out << "n=6\n";
    }

    DomainParams loaded = load_group_file(file.string(), "toy");
    CHECK(loaded == test6);

    // Every record is validated at load time, so one bad record poisons the
    // whole file no matter which name is requested.
    fs::path badfile = dir / "broken.txt";
    {
        std::ofstream out(badfile);
        out << "name=toy\n";
        out << "p=" << test6.p.to_hex() << "\n";
        out << "q=" << test6.q.to_hex() << "\n";
        out << "g=" << test6.g.to_hex() << "\n";
        out << "n=6\n";
        out << "\n";
        out << "name=broken\n";
        out << "p=2d\n"; // 45, composite
        out << "q=16\n";
        out << "g=5\n";
        out << "n=6\n";
    }
    try {
        load_group_file(badfile.string(), "toy");
        FAIL("file with an invalid record accepted");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::invalid_group);
    }
    try {
        load_group_file(file.string(), "absent");
        FAIL("absent record loaded");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::unknown_group);
    }
    try {
        load_group_file((dir / "missing.txt").string(), "toy");
        FAIL("missing file loaded");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::io_error);
    }

    {
        std::ofstream out(file);
        out << "name=bad\np=17\nno-equals-sign-here\n";
    }
    CHECK_THROWS_AS(load_group_file(file.string(), "bad"), Error);

    fs::remove_all(dir);
}
