#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"

#include "cke/errors.hpp"
#include "cke/groups.hpp"
#include "cke/keystore.hpp"
#include "cke/nat.hpp"
#include "cke/protocol.hpp"
#include "cke/rng.hpp"
#include "support.hpp"

using namespace cke;
using testsupport::to_hex;

namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("cke-store-" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

StoreData sample_data() {
    StoreData data;
    data.role = Role::Initiator;
    DomainParams params = builtin_group("test5");
    auto [pending, offer] = crt_offer(params, Nat(6));
    auto [crt, reply] = crt_respond(offer, Nat(15));
    (void)pending;
    (void)reply;
    data.crt = crt;
    ChainState chain = chain_from_crt(crt);
    chain.index = 3;
    chain.chain_secret = Nat::from_hex("1f");
    Digest d;
    d.fill(0x5a);
    chain.prev_digest = d;
    data.chain = chain;
    return data;
}

std::vector<std::uint8_t> read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
}

void write_bytes(const fs::path& p, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

} // namespace

TEST_CASE("store key derivation matches the frozen vector") {
    std::array<std::uint8_t, 16> salt{};
    for (std::size_t i = 0; i < salt.size(); ++i) salt[i] = static_cast<std::uint8_t>(i);
    auto key = derive_store_key("correct horse", salt);
    CHECK(to_hex(key) ==
          "4aedde43fd5b7c252c331439591d600abb54b2110103087da73ec8151a7ade2b"
          "a9e2ef2ffa9d896481b771dae4d022b3ec8a4f5cd488d19105d56f4276943f19");
    // Salt and passphrase both matter.
    salt[0] ^= 1;
    CHECK(derive_store_key("correct horse", salt) != key);
    salt[0] ^= 1;
    CHECK(derive_store_key("correct horsf", salt) != key);
}

TEST_CASE("save and load round trip") {
    TempDir dir;
    fs::path path = dir.path / "peer.store";
    StoreData data = sample_data();
    Rng rng(1);
    save_store(path.string(), data, "open sesame", rng);

    StoreData back = load_store(path.string(), "open sesame");
    CHECK(back.role == Role::Initiator);
    REQUIRE(back.crt.has_value());
    CHECK(back.crt->key == Nat(2));
    CHECK(back.crt->params == builtin_group("test5"));
    CHECK(back.crt->secret == Nat(15));
    CHECK(back.crt->local_public == Nat(19));
    CHECK(back.crt->peer_public == Nat(8));
    REQUIRE(back.chain.has_value());
    CHECK(back.chain->index == 3);
    CHECK(back.chain->chain_secret == Nat::from_hex("1f"));
    REQUIRE(back.chain->prev_digest.has_value());
    CHECK((*back.chain->prev_digest)[0] == 0x5a);
    CHECK(!back.crt_pending.has_value());
}

TEST_CASE("pending-only store round trips") {
    TempDir dir;
    fs::path path = dir.path / "peer.store";
    StoreData data;
    data.role = Role::Responder;
    DomainParams params = builtin_group("test6");
    auto [pending, offer] = crt_offer(params, Nat(11));
    (void)offer;
    data.crt_pending = pending;
    Rng rng(2);
    save_store(path.string(), data, "pw", rng);
    StoreData back = load_store(path.string(), "pw");
    CHECK(back.role == Role::Responder);
    REQUIRE(back.crt_pending.has_value());
    CHECK(back.crt_pending->secret == Nat(11));
    CHECK(back.crt_pending->params == params);
    CHECK(!back.crt.has_value());
    CHECK(!back.chain.has_value());
}

TEST_CASE("wrong passphrase fails authentication, not parsing") {
    TempDir dir;
    fs::path path = dir.path / "peer.store";
    Rng rng(3);
    save_store(path.string(), sample_data(), "right", rng);
    try {
        load_store(path.string(), "wrong");
        FAIL("wrong passphrase accepted");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::store_auth);
    }
}

TEST_CASE("every byte of the file is authenticated") {
    TempDir dir;
    fs::path path = dir.path / "peer.store";
    Rng rng(4);
    save_store(path.string(), sample_data(), "pw", rng);
    auto original = read_bytes(path);
    REQUIRE(original.size() > 37 + 32);

    // Flip a byte in each region: magic, version, salt, nonce, ciphertext
    // start/middle/end, and the trailing MAC.
    std::vector<std::size_t> offsets = {0,
                                        4,
                                        10,
                                        25,
                                        37,
                                        original.size() / 2,
                                        original.size() - 33,
                                        original.size() - 1};
    for (std::size_t off : offsets) {
        auto tampered = original;
        tampered[off] ^= 0x01;
        write_bytes(path, tampered);
        try {
            load_store(path.string(), "pw");
            FAIL_CHECK("tampered store accepted at offset ", off);
        } catch (const Error& e) {
            CHECK(e.code() == Errc::store_auth);
        }
    }
    // Truncation fails closed too.
    auto truncated = original;
    truncated.resize(original.size() / 2);
    write_bytes(path, truncated);
    CHECK_THROWS_AS(load_store(path.string(), "pw"), Error);

    write_bytes(path, original);
    CHECK(load_store(path.string(), "pw").chain->index == 3);
}

TEST_CASE("ciphertext hides the payload") {
    TempDir dir;
    fs::path path = dir.path / "peer.store";
    Rng rng(5);
    save_store(path.string(), sample_data(), "pw", rng);
    auto bytes = read_bytes(path);
    std::string flat(bytes.begin(), bytes.end());
    // The JSON payload's field names must not appear in the clear.
    CHECK(flat.find("chain") == std::string::npos);
    CHECK(flat.find("role") == std::string::npos);
    CHECK(flat.find("secret") == std::string::npos);
}

TEST_CASE("saving over an existing store replaces it atomically") {
    TempDir dir;
    fs::path path = dir.path / "peer.store";
    Rng rng(6);
    StoreData data = sample_data();
    save_store(path.string(), data, "pw", rng);
    data.chain->index = 9;
    save_store(path.string(), data, "pw", rng);
    CHECK(load_store(path.string(), "pw").chain->index == 9);
    CHECK(!fs::exists(path.string() + ".tmp"));
}

TEST_CASE("missing store file") {
    TempDir dir;
    try {
        load_store((dir.path / "absent.store").string(), "pw");
        FAIL("missing store loaded");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::io_error);
    }
}

TEST_CASE("advisory lock excludes a second holder") {
    TempDir dir;
    fs::path path = dir.path / "peer.store";
    {
        StoreLock first(path.string());
        try {
            StoreLock second(path.string());
            FAIL("second lock acquired");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::store_locked);
        }
    }
    // Released with the first holder.
    StoreLock again(path.string());
}
