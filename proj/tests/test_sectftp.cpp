#include <filesystem>
#include <fstream>
#include <random>
#include <thread>

#include "doctest.h"

#include "cke/digest.hpp"
#include "cke/errors.hpp"
#include "cke/nat.hpp"
#include "cke/rng.hpp"
#include "cke/sectftp.hpp"
#include "cke/sim_channel.hpp"
#include "support.hpp"

using namespace cke;
using testsupport::TamperTransport;
using testsupport::to_hex;

namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("cke-tftp-" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

TransferKeys fixture_keys() {
    return derive_transfer_keys((Nat(1) << 600) + Nat::from_hex("1234567890abcdef"));
}

BoundKeys fixture_bound(std::uint32_t index = 1) {
    return BoundKeys{fixture_keys(), index};
}

void write_bytes(const fs::path& p, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(p, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

std::vector<std::uint8_t> read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
}

std::vector<std::uint8_t> random_bytes(std::mt19937_64& gen, std::size_t n) {
    std::vector<std::uint8_t> out(n);
    for (auto& b : out) b = static_cast<std::uint8_t>(gen());
    return out;
}

TftpConfig quick_tftp() {
    TftpConfig cfg;
    cfg.recv_timeout = std::chrono::milliseconds(50);
    return cfg;
}

} // namespace

TEST_CASE("packets round trip") {
    RequestPacket rrq{false, "notes.txt", {1, 2, 3, 4, 5, 6, 7, 8}, 3};
    RequestPacket wrq{true, "upload.bin", {9, 9, 9, 9, 9, 9, 9, 9}, 12};
    DataPacket data{7, std::vector<std::uint8_t>(100, 0xab), {}};
    data.mac.fill(0xcd);
    AckPacket ack{7};
    ErrorPacket err{static_cast<std::uint16_t>(TftpErr::IntegrityFailure), "mac mismatch"};

    CHECK(std::get<RequestPacket>(decode_packet(encode_packet(rrq))) == rrq);
    CHECK(std::get<RequestPacket>(decode_packet(encode_packet(wrq))) == wrq);
    CHECK(std::get<DataPacket>(decode_packet(encode_packet(data))) == data);
    CHECK(std::get<AckPacket>(decode_packet(encode_packet(ack))) == ack);
    CHECK(std::get<ErrorPacket>(decode_packet(encode_packet(err))) == err);
}

TEST_CASE("request packet layout is pinned") {
    RequestPacket rrq{false, "f", {0, 1, 2, 3, 4, 5, 6, 7}, 0x0102};
    auto bytes = encode_packet(rrq);
    // opcode 1 | "f" 0 | "octet" 0 | tid | chain index
    CHECK(to_hex(bytes) == "0001" "6600" "6f6374657400" "0001020304050607" "00000102");
    AckPacket ack{0x1234};
    CHECK(to_hex(encode_packet(ack)) == "00041234");
}

TEST_CASE("packet decode is strict") {
    auto expect_malformed = [](std::vector<std::uint8_t> bytes) {
        try {
            decode_packet(bytes);
            FAIL_CHECK("malformed packet accepted");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::malformed_packet);
        }
    };

    expect_malformed({});
    expect_malformed({0x00});
    expect_malformed({0x00, 0x07}); // unknown opcode
    expect_malformed({0x00, 0x01}); // request with nothing after the opcode

    // Empty filename.
    RequestPacket rrq{false, "x", {}, 0};
    auto good = encode_packet(rrq);
    auto bad = good;
    bad.erase(bad.begin() + 2); // drops the single filename byte
    expect_malformed(bad);

    // Wrong mode string.
    bad = good;
    bad[5] = 'O';
    bad[6] = 'C';
    expect_malformed(bad);

    // Trailing bytes after a fully parsed request.
    bad = good;
    bad.push_back(0);
    expect_malformed(bad);

    // DATA too short to hold a MAC.
    expect_malformed({0x00, 0x03, 0x00, 0x01, 0xaa});

    // DATA ciphertext above a full block: 2 + 2 + 513 + 32.
    std::vector<std::uint8_t> big{0x00, 0x03, 0x00, 0x01};
    big.resize(4 + 513 + 32, 0x55);
    expect_malformed(big);

    // ACK with trailing bytes; ERROR without terminator.
    expect_malformed({0x00, 0x04, 0x00, 0x01, 0xff});
    expect_malformed({0x00, 0x05, 0x00, 0x08, 'h', 'i'});

    // Oversized datagram.
    std::vector<std::uint8_t> huge(2049, 0x00);
    huge[1] = 0x04;
    expect_malformed(huge);
}

TEST_CASE("sealed block matches the frozen vector") {
    TransferKeys keys = fixture_keys();
    TransferId tid{0, 1, 2, 3, 4, 5, 6, 7};
    std::vector<std::uint8_t> pt(512);
    for (std::size_t i = 0; i < pt.size(); ++i) pt[i] = static_cast<std::uint8_t>((i * 7 + 3) % 256);

    SealedBlock sealed = seal_block(keys, tid, 1, pt);
    CHECK(sealed.ciphertext.size() == 512);
    CHECK(to_hex(std::span(sealed.ciphertext).first(16)) == "53d89e9e0fa066ba75cfd09ceb7aabaf");
    CHECK(to_hex(sealed.mac) == "de1104f56bc05ed1dd714b4e62d665b9c34f121838d328209aa9ba4fc64824c3");

    CHECK(open_block(keys, tid, 1, sealed.ciphertext, sealed.mac) == pt);

    // Same plaintext, next block: fresh keystream and MAC.
    SealedBlock second = seal_block(keys, tid, 2, pt);
    CHECK(second.ciphertext != sealed.ciphertext);
    CHECK(second.mac != sealed.mac);
}

TEST_CASE("tampering is caught before decryption") {
    TransferKeys keys = fixture_keys();
    TransferId tid{8, 7, 6, 5, 4, 3, 2, 1};
    std::vector<std::uint8_t> pt(300, 0x11);
    SealedBlock sealed = seal_block(keys, tid, 5, pt);

    auto expect_mac_mismatch = [&](const std::vector<std::uint8_t>& ct,
                                   const std::array<std::uint8_t, 32>& mac, std::uint32_t block,
                                   const TransferId& id) {
        try {
            open_block(keys, id, block, ct, mac);
            FAIL_CHECK("forgery accepted");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::mac_mismatch);
        }
    };

    auto ct = sealed.ciphertext;
    ct[0] ^= 0x01;
    expect_mac_mismatch(ct, sealed.mac, 5, tid);

    auto mac = sealed.mac;
    mac[31] ^= 0x80;
    expect_mac_mismatch(sealed.ciphertext, mac, 5, tid);

    // Replay under a different block number or transfer id fails too.
    expect_mac_mismatch(sealed.ciphertext, sealed.mac, 6, tid);
    TransferId other = tid;
    other[0] ^= 1;
    expect_mac_mismatch(sealed.ciphertext, sealed.mac, 5, other);
}

TEST_CASE("upload and download round trip over a clean channel") {
    TempDir dir;
    std::mt19937_64 gen(515);
    for (std::size_t size : {0u, 1u, 511u, 512u, 513u, 1024u, 5000u}) {
        auto payload = random_bytes(gen, size);
        fs::path local = dir.path / "local.bin";
        write_bytes(local, payload);

        SimChannel chan;
        Rng rng(size + 1);
        fs::path served = dir.path / "served";
        fs::create_directories(served);
        TransferReport client_report, server_report;
        std::thread server([&] {
            server_report = serve_one(chan.end_b(), fixture_bound(), served, quick_tftp());
        });
        client_report =
            put_file(chan.end_a(), fixture_bound(), local.string(), "up.bin", rng, quick_tftp());
        server.join();

        CHECK(read_bytes(served / "up.bin") == payload);
        CHECK(client_report.bytes == size);
        CHECK(client_report.blocks == size / 512 + 1);
        CHECK(server_report.bytes == size);

        // And fetch it back.
        SimChannel chan2;
        fs::path fetched = dir.path / "fetched.bin";
        std::thread server2([&] { serve_one(chan2.end_b(), fixture_bound(), served, quick_tftp()); });
        TransferReport get_report = get_file(chan2.end_a(), fixture_bound(), "up.bin",
                                             fetched.string(), rng, quick_tftp());
        server2.join();
        CHECK(read_bytes(fetched) == payload);
        CHECK(get_report.bytes == size);
        fs::remove_all(served);
        fs::remove(fetched);
    }
}

TEST_CASE("transfers survive a lossy duplicating channel") {
    TempDir dir;
    std::mt19937_64 gen(99);
    auto payload = random_bytes(gen, 20000);
    fs::path local = dir.path / "in.bin";
    write_bytes(local, payload);
    fs::path served = dir.path / "root";
    fs::create_directories(served);

    SimFaults ab;
    ab.drop_rate = 0.05;
    ab.dup_rate = 0.02;
    ab.seed = 4242;
    SimFaults ba = ab;
    ba.seed = 2424;
    SimChannel chan(ab, ba);
    Rng rng(7);
    std::thread server([&] { serve_one(chan.end_b(), fixture_bound(), served, quick_tftp()); });
    TransferReport report =
        put_file(chan.end_a(), fixture_bound(), local.string(), "out.bin", rng, quick_tftp());
    server.join();
    CHECK(read_bytes(served / "out.bin") == payload);
    CHECK(report.bytes == payload.size());
}

TEST_CASE("corrupted data blocks are refused before any plaintext lands") {
    TempDir dir;
    std::mt19937_64 gen(7);
    auto payload = random_bytes(gen, 2000);
    fs::path local = dir.path / "in.bin";
    write_bytes(local, payload);
    fs::path served = dir.path / "root";
    fs::create_directories(served);

    SimChannel chan;
    TamperTransport client_side(chan.end_a());
    client_side.on_send = [](std::vector<std::uint8_t>& b) {
        // Flip a ciphertext byte in every DATA packet.
        if (b.size() > 40 && b[0] == 0x00 && b[1] == 0x03) b[10] ^= 0x40;
    };
    Rng rng(8);
    Error server_error(Errc::invalid_input, "placeholder");
    std::thread server([&] {
        try {
            serve_one(chan.end_b(), fixture_bound(), served, quick_tftp());
            FAIL_CHECK("server accepted corrupted data");
        } catch (const Error& e) {
            server_error = e;
        }
    });
    try {
        put_file(client_side, fixture_bound(), local.string(), "out.bin", rng, quick_tftp());
        FAIL_CHECK("client reported success despite corruption");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::peer_error);
    }
    server.join();
    CHECK(server_error.code() == Errc::mac_mismatch);
    CHECK(!fs::exists(served / "out.bin"));
    CHECK(fs::directory_iterator(served) == fs::directory_iterator{}); // no partial files
}

TEST_CASE("chain index binding is enforced") {
    TempDir dir;
    fs::path local = dir.path / "in.bin";
    write_bytes(local, {1, 2, 3});
    fs::path served = dir.path / "root";
    fs::create_directories(served);

    SimChannel chan;
    Rng rng(9);
    Error server_error(Errc::invalid_input, "placeholder");
    std::thread server([&] {
        try {
            serve_one(chan.end_b(), fixture_bound(4), served, quick_tftp());
        } catch (const Error& e) {
            server_error = e;
        }
    });
    try {
        put_file(chan.end_a(), fixture_bound(3), local.string(), "out.bin", rng, quick_tftp());
        FAIL_CHECK("mismatched chain index accepted");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::peer_error);
        CHECK(std::string(e.what()).find("9") != std::string::npos); // KeyBindingMismatch code
    }
    server.join();
    CHECK(server_error.code() == Errc::chain_index_mismatch);
}

TEST_CASE("server confines filenames to its root") {
    TempDir dir;
    fs::path served = dir.path / "root";
    fs::create_directories(served);
    fs::path outside = dir.path / "secret.txt";
    write_bytes(outside, {42});

    SimChannel chan;
    Rng rng(10);
    Error server_error(Errc::invalid_input, "placeholder");
    std::thread server([&] {
        try {
            serve_one(chan.end_b(), fixture_bound(), served, quick_tftp());
        } catch (const Error& e) {
            server_error = e;
        }
    });
    fs::path fetched = dir.path / "fetched.bin";
    try {
        get_file(chan.end_a(), fixture_bound(), "../secret.txt", fetched.string(), rng,
                 quick_tftp());
        FAIL_CHECK("path traversal accepted");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::peer_error);
    }
    server.join();
    CHECK(server_error.code() == Errc::invalid_input);
    CHECK(!fs::exists(fetched));
}

TEST_CASE("upload into a missing serving root is refused up front") {
    TempDir dir;
    fs::path local = dir.path / "local.bin";
    write_bytes(local, {1, 2, 3});
    SimChannel chan;
    Rng rng(12);
    Error server_error(Errc::invalid_input, "placeholder");
    std::thread server([&] {
        try {
            serve_one(chan.end_b(), fixture_bound(), dir.path / "gone", quick_tftp());
        } catch (const Error& e) {
            server_error = e;
        }
    });
    try {
        put_file(chan.end_a(), fixture_bound(), local.string(), "up.bin", rng, quick_tftp());
        FAIL_CHECK("upload accepted without a serving root");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::peer_error);
    }
    server.join();
    CHECK(server_error.code() == Errc::io_error);
    CHECK(!fs::exists(dir.path / "gone"));
}

TEST_CASE("missing remote file is a clean error") {
    TempDir dir;
    fs::path served = dir.path / "root";
    fs::create_directories(served);
    SimChannel chan;
    Rng rng(11);
    std::thread server([&] {
        try {
            serve_one(chan.end_b(), fixture_bound(), served, quick_tftp());
        } catch (const Error&) {
        }
    });
    fs::path fetched = dir.path / "nope.bin";
    try {
        get_file(chan.end_a(), fixture_bound(), "nope.bin", fetched.string(), rng, quick_tftp());
        FAIL_CHECK("missing file fetched");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::peer_error);
    }
    server.join();
    CHECK(!fs::exists(fetched));
}

TEST_CASE("packet fuzz never crashes") {
    std::mt19937_64 gen(0xfeed);
    auto good_data = encode_packet(DataPacket{1, std::vector<std::uint8_t>(64, 1), {}});
    auto good_req = encode_packet(RequestPacket{true, "abc", {}, 2});
    int total = 0;
    for (int i = 0; i < 10000; ++i) {
        std::vector<std::uint8_t> bytes;
        switch (i % 3) {
        case 0:
            bytes.resize(gen() % 120);
            for (auto& b : bytes) b = static_cast<std::uint8_t>(gen());
            break;
        case 1:
            bytes = (i & 1) ? good_data : good_req;
            for (int j = 0; j < 3; ++j)
                bytes[gen() % bytes.size()] ^= static_cast<std::uint8_t>(1 + gen() % 255);
            break;
        default:
            bytes.assign(good_req.begin(), good_req.begin() + gen() % (good_req.size() + 1));
            break;
        }
        try {
            decode_packet(bytes);
        } catch (const Error&) {
        }
        ++total;
    }
    CHECK(total == 10000);
}
