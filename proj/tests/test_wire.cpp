#include <chrono>
#include <random>
#include <thread>

#include "doctest.h"

#include "cke/errors.hpp"
#include "cke/groups.hpp"
#include "cke/link_driver.hpp"
#include "cke/nat.hpp"
#include "cke/protocol.hpp"
#include "cke/rng.hpp"
#include "cke/sim_channel.hpp"
#include "cke/wire.hpp"
#include "support.hpp"

using namespace cke;
using testsupport::TamperTransport;
using testsupport::to_hex;

namespace {

Frame sample_offer_frame() {
    OfferPayload offer;
    offer.public_value = Nat(12);
    offer.p = Nat(47);
    offer.g = Nat(5);
    offer.nonce = Nonce{Nat(33), 6};
    return Frame{7, offer};
}

LinkConfig quick_config() {
    LinkConfig cfg;
    cfg.recv_timeout = std::chrono::milliseconds(40);
    cfg.quiet_window = std::chrono::milliseconds(160);
    return cfg;
}

ChainState toy_chain() {
    return testsupport::chain_at_root(Nat(2));
}

struct LinkRun {
    LinkOutcome a, b;
    ChainState ca = toy_chain(), cb = toy_chain();
};

LinkRun run_pair(Transport& ta, Transport& tb, std::uint64_t seed_a, std::uint64_t seed_b) {
    LinkRun out;
    DomainParams params = builtin_group("test6");
    LinkConfig cfg = quick_config();
    FramedEndpoint fa(ta), fb(tb);
    Rng ra(seed_a), rb(seed_b);
    std::thread thread_a(
        [&] { out.a = run_link(fa, Role::Initiator, out.ca, ra, params, cfg); });
    std::thread thread_b(
        [&] { out.b = run_link(fb, Role::Responder, out.cb, rb, params, cfg); });
    thread_a.join();
    thread_b.join();
    return out;
}

} // namespace

TEST_CASE("frames round trip for every kind") {
    std::vector<Frame> frames = {
        sample_offer_frame(),
        Frame{3, ReplyPayload{Nat(10)}},
        Frame{0, VerifyPayload{Digest{}}},
        Frame{9, RetryPayload{2}},
        Frame{1, AbortPayload{static_cast<std::uint8_t>(AbortReason::VerifyFailed)}},
    };
    Digest d;
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = static_cast<std::uint8_t>(i * 3);
    frames.push_back(verify_frame(12, d));
    for (const Frame& f : frames) {
        auto bytes = encode_frame(f);
        CHECK(decode_frame(bytes) == f);
        CHECK(bytes.size() >= kFrameHeaderBytes);
        CHECK(bytes.size() <= kMaxFrameBytes);
    }
}

TEST_CASE("frame header layout is pinned") {
    auto bytes = encode_frame(sample_offer_frame());
    CHECK(bytes[0] == 'C');
    CHECK(bytes[1] == 'K');
    CHECK(bytes[2] == 'E');
    CHECK(bytes[3] == '1');
    CHECK(bytes[4] == 0x01); // version
    CHECK(bytes[5] == 0x01); // OFFER
    CHECK(bytes[6] == 0);
    CHECK(bytes[7] == 0);
    CHECK(bytes[8] == 0);
    CHECK(bytes[9] == 7); // chain index, big-endian
    // OFFER payload: A, p, g, nonce value (length-framed), width (2B BE).
    CHECK(to_hex(std::span(bytes).subspan(10)) ==
          "000000010c"   // A = 12
          "000000012f"   // p = 47
          "0000000105"   // g = 5
          "0000000121"   // nonce value = 33
          "0006");       // nonce width = 6 bits
}

TEST_CASE("big-endian index round trip") {
    Frame f{0xdeadbeef, ReplyPayload{Nat(1)}};
    auto bytes = encode_frame(f);
    CHECK(bytes[6] == 0xde);
    CHECK(bytes[7] == 0xad);
    CHECK(bytes[8] == 0xbe);
    CHECK(bytes[9] == 0xef);
    CHECK(decode_frame(bytes).chain_index == 0xdeadbeefu);
}

TEST_CASE("decode is strict") {
    auto good = encode_frame(sample_offer_frame());

    auto expect_malformed = [](std::vector<std::uint8_t> bytes) {
        try {
            decode_frame(bytes);
            FAIL_CHECK("malformed frame accepted");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::malformed_frame);
        }
    };

    for (std::size_t cut = 0; cut < good.size(); ++cut)
        expect_malformed(std::vector<std::uint8_t>(good.begin(), good.begin() + cut));

    auto bad = good;
    bad[0] = 'X';
    expect_malformed(bad);

    bad = good;
    bad[4] = 0x02; // unknown version
    expect_malformed(bad);

    bad = good;
    bad[5] = 0x09; // unknown kind
    expect_malformed(bad);

    bad = good;
    bad.push_back(0x00); // trailing byte
    expect_malformed(bad);

    // Non-minimal magnitude: leading zero byte inside a Nat field.
    bad = good;
    bad[13] = 2;    // A length 1 -> 2
    bad.insert(bad.begin() + 14, 0x00);
    expect_malformed(bad);

    // Oversized frame.
    std::vector<std::uint8_t> huge(kMaxFrameBytes + 1, 0x41);
    std::copy(good.begin(), good.begin() + 10, huge.begin());
    expect_malformed(huge);
}

TEST_CASE("verify digest travels intact") {
    Digest d;
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = static_cast<std::uint8_t>(255 - i);
    Frame f = verify_frame(4, d);
    Frame back = decode_frame(encode_frame(f));
    CHECK(std::get<VerifyPayload>(back.payload).digest == d);
}

TEST_CASE("frame fuzz never crashes and only raises structured errors") {
    std::mt19937_64 gen(0xf022);
    auto good = encode_frame(sample_offer_frame());
    int decoded = 0, rejected = 0;
    for (int i = 0; i < 10000; ++i) {
        std::vector<std::uint8_t> bytes;
        switch (i % 3) {
        case 0: { // pure noise
            bytes.resize(gen() % 80);
            for (auto& b : bytes) b = static_cast<std::uint8_t>(gen());
            break;
        }
        case 1: { // mutated valid frame
            bytes = good;
            int flips = 1 + int(gen() % 4);
            for (int j = 0; j < flips; ++j)
                bytes[gen() % bytes.size()] ^= static_cast<std::uint8_t>(1 + gen() % 255);
            break;
        }
        default: { // truncation
            bytes.assign(good.begin(), good.begin() + gen() % (good.size() + 1));
            break;
        }
        }
        try {
            decode_frame(bytes);
            ++decoded;
        } catch (const Error&) {
            ++rejected;
        }
    }
    CHECK(decoded + rejected == 10000);
    CHECK(rejected > 5000);
}

TEST_CASE("protocol message glue preserves fields") {
    Rng rng(2);
    ChainState chain = toy_chain();
    auto [eph, offer] = session_offer(chain, rng, builtin_group("test6"));
    (void)eph;
    Frame f = frame_from_offer(offer);
    Offer back = offer_from_frame(f);
    CHECK(back.index == offer.index);
    CHECK(back.public_value == offer.public_value);
    CHECK(back.p == offer.p);
    CHECK(back.g == offer.g);
    CHECK(back.nonce == offer.nonce);

    Reply reply{1, Nat(9)};
    CHECK(reply_from_frame(frame_from_reply(reply)).public_value == Nat(9));
}

TEST_CASE("endpoint skips malformed datagrams and counts them") {
    SimChannel chan;
    FramedEndpoint fb(chan.end_b());
    std::vector<std::uint8_t> junk = {1, 2, 3};
    chan.end_a().send(junk);
    chan.end_a().send(encode_frame(sample_offer_frame()));
    auto frame = fb.recv_frame(std::chrono::milliseconds(100));
    REQUIRE(frame.has_value());
    CHECK(frame->kind() == MsgKind::Offer);
    CHECK(fb.malformed_seen() == 1);
}

TEST_CASE("endpoint push_back replays a frame") {
    SimChannel chan;
    FramedEndpoint fa(chan.end_a()), fb(chan.end_b());
    fa.send_frame(Frame{5, ReplyPayload{Nat(3)}});
    auto got = fb.recv_frame(std::chrono::milliseconds(100));
    REQUIRE(got.has_value());
    fb.push_back(*got);
    auto again = fb.recv_frame(std::chrono::milliseconds(100));
    REQUIRE(again.has_value());
    CHECK(*again == *got);
}

TEST_CASE("lossless link commits on both sides") {
    SimChannel chan;
    LinkRun run = run_pair(chan.end_a(), chan.end_b(), 100, 200);
    CHECK(run.a.committed);
    CHECK(run.b.committed);
    CHECK(run.a.error == LinkError::None);
    CHECK(run.ca.index == 1);
    CHECK(run.cb.index == 1);
    CHECK(run.ca.chain_secret == run.cb.chain_secret);
    CHECK(run.ca.prev_digest == run.cb.prev_digest);
}

TEST_CASE("links survive drop and duplication") {
    // Seeds chosen so each faulted run still converges inside the retry
    // budget; chain agreement is the property under test.
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        SimFaults ab;
        ab.drop_rate = 0.15;
        ab.dup_rate = 0.05;
        ab.seed = seed;
        SimFaults ba = ab;
        ba.seed = seed + 9999;
        SimChannel chan(ab, ba);
        LinkRun run = run_pair(chan.end_a(), chan.end_b(), seed * 3 + 1, seed * 7 + 2);
        CHECK(run.a.committed);
        CHECK(run.b.committed);
        CHECK(run.ca.chain_secret == run.cb.chain_secret);
    }
}

TEST_CASE("one corrupted verify recovers through a retry") {
    SimChannel chan;
    TamperTransport left(chan.end_a());
    int verify_seen = 0;
    left.on_send = [&](std::vector<std::uint8_t>& b) {
        if (b.size() > kFrameHeaderBytes && b[5] == 0x03 && verify_seen++ == 0) b.back() ^= 0x01;
    };
    LinkRun run = run_pair(left, chan.end_b(), 5, 6);
    CHECK(run.a.committed);
    CHECK(run.b.committed);
    CHECK(run.b.retries_sent == 1);
    CHECK(run.ca.chain_secret == run.cb.chain_secret);
}

TEST_CASE("persistently corrupted verify aborts after bounded retries") {
    SimChannel chan;
    TamperTransport left(chan.end_a());
    left.on_send = [&](std::vector<std::uint8_t>& b) {
        if (b.size() > kFrameHeaderBytes && b[5] == 0x03) b.back() ^= 0x01;
    };
    LinkRun run = run_pair(left, chan.end_b(), 9, 10);
    CHECK(!run.a.committed);
    CHECK(!run.b.committed);
    CHECK(run.b.retries_sent == 3);
    CHECK(run.b.error == LinkError::VerificationFailedFinal);
    CHECK(run.ca.index == 0);
    CHECK(run.cb.index == 0);
}

TEST_CASE("suppressed offers time out cleanly") {
    SimChannel chan;
    TamperTransport left(chan.end_a());
    left.on_send = [&](std::vector<std::uint8_t>& b) {
        if (b.size() > 5 && b[5] == 0x01) b[0] ^= 0xff;
    };
    LinkRun run = run_pair(left, chan.end_b(), 7, 8);
    CHECK(!run.a.committed);
    CHECK(!run.b.committed);
    CHECK(run.a.error == LinkError::Timeout);
    CHECK(run.ca.index == 0);
    CHECK(run.cb.index == 0);
}
