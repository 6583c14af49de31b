#include "cke/groups.hpp"

#include <fstream>
#include <map>
#include <mutex>
#include <optional>

#include "cke/errors.hpp"

namespace cke {

namespace {

constexpr int kPrimalityRounds = 40;

struct PinnedGroup {
    const char* p_hex;
    const char* g_hex;
    unsigned n;
};

// bench1024 / bench2048 were produced offline by generate_group and
// committed, because safe-prime search at those sizes is far too slow for
// test or benchmark startup. They are still fully revalidated on first use.
const std::map<std::string, PinnedGroup, std::less<>>& pinned_groups() {
    static const std::map<std::string, PinnedGroup, std::less<>> groups = {
        {"test5", {"17", "5", 5}},
        {"test6", {"2f", "5", 6}},
        {"bench1024",
         {"8186fb0e069425e82053391b460b5438d0b0c9d81216cfd4981e04de94bdccf5"
          "115830d9cc51ad48351d28628377949469fc29d97487caf0bb7745e7193277a4"
          "66ca73e18d229d46a52ade3822d1abadf7bf685efcf20cee66f1c52da621e9a8"
          "10c271019eed5983dda062939061b607e19abe45129ee8c951b26a059193f593",
          "2", 1024}},
        {"bench2048",
         {"b855c8db0161502c1dae2a8e5c8fd40fc435ea64974872573d8e035b2236732d"
          "e0df22b0561cd457d85ee8462f9d9e718536f8ea13187b13bc3d37a82dc574ed"
          "5fa6b3decfea3ad29f3aa640b0b4e815c05621a6e4483269309aed80d8694bef"
          "dc070a53a009a4cba34875f83f42ae05fb7a18d9cd20751ef00f792f168e9843"
          "ef88800bf7fdcefe88ff18a680fb9dac22efcfb7b910b2531971ece441f1c589"
          "975022dbfd3939312d904cc258113e74fc24f354de174e66dd9f7b5a43272b00"
          "577267c35fbe144e640cc6ef5aa963dc14b778fcfb29f655b4489a96ad7804d3"
          "60fb2aa8886510e5d7d57a4bc523f7cb27983387c88b35320fa3dd97524aaa27",
          "5", 2048}},
    };
    return groups;
}

Nat random_odd_with_top_bit(unsigned bits, Rng& rng) {
    std::size_t byte_len = (bits + 7) / 8;
    std::vector<std::uint8_t> buf(byte_len);
    rng.fill(buf);
    unsigned excess = static_cast<unsigned>(byte_len * 8) - bits;
    buf[0] &= static_cast<std::uint8_t>(0xff >> excess);
    buf[0] |= static_cast<std::uint8_t>(0x80 >> excess);
    buf[byte_len - 1] |= 1;
    return Nat::from_bytes_be(buf);
}

} // namespace

std::string_view group_check_name(GroupCheck c) {
    switch (c) {
    case GroupCheck::Valid: return "Valid";
    case GroupCheck::CompositeModulus: return "CompositeModulus";
    case GroupCheck::NotSafePrime: return "NotSafePrime";
    case GroupCheck::BadGeneratorRange: return "BadGeneratorRange";
    case GroupCheck::SmallOrderGenerator: return "SmallOrderGenerator";
    case GroupCheck::BitLengthMismatch: return "BitLengthMismatch";
    }
    return "?";
}

GroupCheck validate_group(const DomainParams& params) {
    const Nat& p = params.p;
    if (p < Nat(5) || !p.is_odd() || !miller_rabin(p, kPrimalityRounds))
        return GroupCheck::CompositeModulus;

    Nat q = (p - Nat(1)) >> 1;
    if (params.q != q || !miller_rabin(q, kPrimalityRounds))
        return GroupCheck::NotSafePrime;

    if (params.g < Nat(2) || params.g > p - Nat(2))
        return GroupCheck::BadGeneratorRange;

    if (!is_primitive_root(params.g, p, q))
        return GroupCheck::SmallOrderGenerator;

    if (p.bit_length() != params.n)
        return GroupCheck::BitLengthMismatch;

    return GroupCheck::Valid;
}

Nat generate_safe_prime(unsigned bits, Rng& rng) {
    if (bits < 3) raise(Errc::invalid_input, "safe primes need at least 3 bits");
    for (;;) {
        Nat p = random_odd_with_top_bit(bits, rng);
        if (!miller_rabin(p, kPrimalityRounds, rng)) continue;
        Nat q = (p - Nat(1)) >> 1;
        if (!miller_rabin(q, kPrimalityRounds, rng)) continue;
        return p;
    }
}

bool is_primitive_root(const Nat& g, const Nat& p, const Nat& q) {
    if (g < Nat(2) || g > p - Nat(2)) return false;
    if ((g * g) % p == Nat(1)) return false;
    if (modpow(g, q, p) == Nat(1)) return false;
    return true;
}

Nat find_primitive_root(const Nat& p, Rng& rng) {
    if (p < Nat(5) || !p.is_odd() || !miller_rabin(p, kPrimalityRounds))
        raise(Errc::invalid_input, "modulus is not prime");
    Nat q = (p - Nat(1)) >> 1;
    if (!miller_rabin(q, kPrimalityRounds))
        raise(Errc::invalid_input, "modulus is not a safe prime");

    for (;;) {
        Nat g = rand_below(rng, p - Nat(1)); // uniform in [1, p-2]
        if (g < Nat(2)) continue;
        if (is_primitive_root(g, p, q)) return g;
    }
}

DomainParams generate_group(unsigned bits, Rng& rng) {
    Nat p = generate_safe_prime(bits, rng);
    Nat g = find_primitive_root(p, rng);
    DomainParams params{p, (p - Nat(1)) >> 1, g, bits};
    if (GroupCheck check = validate_group(params); check != GroupCheck::Valid)
        raise(Errc::invalid_group, std::string("generated group failed revalidation: ") +
                                       std::string(group_check_name(check)));
    return params;
}

DomainParams builtin_group(std::string_view name) {
    static std::mutex cache_mutex;
    static std::map<std::string, DomainParams, std::less<>> cache;

    {
        std::lock_guard lock(cache_mutex);
        if (auto it = cache.find(name); it != cache.end()) return it->second;
    }

    auto it = pinned_groups().find(name);
    if (it == pinned_groups().end())
        raise(Errc::unknown_group, "no builtin group named '" + std::string(name) + "'");

    Nat p = Nat::from_hex(it->second.p_hex);
    DomainParams params{p, (p - Nat(1)) >> 1, Nat::from_hex(it->second.g_hex), it->second.n};
    if (GroupCheck check = validate_group(params); check != GroupCheck::Valid)
        raise(Errc::invalid_group, "builtin group '" + std::string(name) + "' failed validation: " +
                                       std::string(group_check_name(check)));

    std::lock_guard lock(cache_mutex);
    cache.emplace(std::string(name), params);
    return params;
}

DomainParams load_group_file(const std::string& path, std::string_view name) {
    std::ifstream in(path);
    if (!in) raise(Errc::io_error, "cannot open group file " + path);

    std::map<std::string, std::string> fields;
    std::optional<DomainParams> wanted;

    auto finish_record = [&] {
        if (fields.empty()) return;
        for (const char* key : {"name", "p", "g", "n"})
            if (!fields.contains(key))
                raise(Errc::parse_error, std::string("group record missing field '") + key + "'");
        Nat p = Nat::from_hex(fields["p"]);
        unsigned n = 0;
        try {
            n = static_cast<unsigned>(std::stoul(fields["n"]));
        } catch (const std::exception&) {
            raise(Errc::parse_error, "group record has non-numeric n");
        }
        DomainParams params{p, (p - Nat(1)) >> 1, Nat::from_hex(fields["g"]), n};
        if (GroupCheck check = validate_group(params); check != GroupCheck::Valid)
            raise(Errc::invalid_group, "group '" + fields["name"] + "' failed validation: " +
                                           std::string(group_check_name(check)));
        if (fields["name"] == name) wanted = params;
        fields.clear();
    };

    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t'))
            line.pop_back();
        std::size_t start = line.find_first_not_of(" \t");
        if (start == std::string::npos) {
            finish_record();
            continue;
        }
        line = line.substr(start);
        if (line[0] == '#') continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            raise(Errc::parse_error, "group file line has no '=': " + line);
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        if (key == "name" && fields.contains("name")) finish_record();
        fields[key] = value;
    }
    finish_record();

    if (!wanted)
        raise(Errc::unknown_group, "group file has no record named '" + std::string(name) + "'");
    return *wanted;
}

} // namespace cke
