// Command-line peer for the chained key exchange. One binary covers the
// whole lifecycle: root-of-trust pairing via offer/reply files, chain links
// over UDP, key-bound file transfer, the attack experiments, timing runs,
// and a store inspector that never prints secret material.

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <termios.h>
#include <unistd.h>

#include "CLI11.hpp"

#include "cke/digest.hpp"
#include "cke/errors.hpp"
#include "cke/groups.hpp"
#include "cke/harness.hpp"
#include "cke/keystore.hpp"
#include "cke/link_driver.hpp"
#include "cke/nat.hpp"
#include "cke/protocol.hpp"
#include "cke/rng.hpp"
#include "cke/sectftp.hpp"
#include "cke/sha512.hpp"
#include "cke/udp_transport.hpp"
#include "cke/wire.hpp"

namespace {

using namespace cke;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Small shared helpers.
// ---------------------------------------------------------------------------

constexpr std::uint16_t kLinkPort = 6969;
constexpr std::uint16_t kTransferPort = 6970;

// Short identifier for a value that is safe to print: hash of the canonical
// encoding, truncated to 16 hex characters. Never prints the value itself.
std::string fingerprint(const Nat& value) {
    auto digest = sha512(encode_nat(value));
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (int i = 0; i < 8; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

std::string role_name(Role role) {
    return role == Role::Initiator ? "along" : "busu";
}

Role role_from_name(const std::string& name) {
    if (name == "along") return Role::Initiator;
    if (name == "busu") return Role::Responder;
    raise(Errc::invalid_input, "role must be 'along' or 'busu'");
}

// Passphrase source: CKE_PASSPHRASE, else prompt (echo off on a tty), else
// first line of stdin.
std::string read_passphrase() {
    if (const char* env = std::getenv("CKE_PASSPHRASE")) return env;
    std::string line;
    if (::isatty(STDIN_FILENO)) {
        std::fprintf(stderr, "passphrase: ");
        termios saved{};
        tcgetattr(STDIN_FILENO, &saved);
        termios quiet = saved;
        quiet.c_lflag &= ~static_cast<tcflag_t>(ECHO);
        tcsetattr(STDIN_FILENO, TCSANOW, &quiet);
        std::getline(std::cin, line);
        tcsetattr(STDIN_FILENO, TCSANOW, &saved);
        std::fprintf(stderr, "\n");
    } else {
        std::getline(std::cin, line);
    }
    return line;
}

struct Endpoint {
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;
};

// Accepts HOST:PORT, HOST (default port), :PORT, or a bare PORT number.
Endpoint parse_endpoint(const std::string& spec, std::uint16_t default_port) {
    Endpoint ep;
    ep.port = default_port;
    auto colon = spec.rfind(':');
    std::string host = colon == std::string::npos ? spec : spec.substr(0, colon);
    std::string port = colon == std::string::npos ? "" : spec.substr(colon + 1);
    if (colon == std::string::npos && !spec.empty() &&
        std::all_of(spec.begin(), spec.end(), [](unsigned char c) { return std::isdigit(c); })) {
        host.clear();
        port = spec;
    }
    if (!host.empty()) ep.host = host;
    if (!port.empty()) {
        unsigned long value = 0;
        try {
            value = std::stoul(port);
        } catch (const std::exception&) {
            raise(Errc::invalid_input, "bad port in endpoint '" + spec + "'");
        }
        if (value == 0 || value > 65535)
            raise(Errc::invalid_input, "port out of range in endpoint '" + spec + "'");
        ep.port = static_cast<std::uint16_t>(value);
    }
    return ep;
}

// --group accepts a builtin name or FILE:NAME for a group file on disk.
DomainParams resolve_group(const std::string& spec) {
    try {
        return builtin_group(spec);
    } catch (const Error& e) {
        if (e.code() != Errc::unknown_group) throw;
    }
    auto colon = spec.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == spec.size())
        raise(Errc::unknown_group,
              "no builtin group named '" + spec + "' (file groups are FILE:NAME)");
    return load_group_file(spec.substr(0, colon), spec.substr(colon + 1));
}

// Default group for the attack experiments: 256-bit safe prime, large enough
// that the statistical false positives of the toy groups cannot occur, small
// enough that the full suite runs in seconds.
DomainParams attack_default_group() {
    DomainParams params;
    params.p = Nat::from_hex("f28d217aa5357664557977fd6844ee2e1dfe8a04f072670499e7d3eff65c3c43");
    params.q = (params.p - Nat(1)) >> 1;
    params.g = Nat(2);
    params.n = 256;
    return params;
}

// ---------------------------------------------------------------------------
// Pairing offer/reply files. Self-describing binary with a trailing SHA-512
// over everything before it, so a truncated or corrupted file fails closed.
// ---------------------------------------------------------------------------

void put_nat(std::vector<std::uint8_t>& out, const Nat& value) {
    auto enc = encode_nat(value);
    out.insert(out.end(), enc.begin(), enc.end());
}

Nat take_nat(const std::vector<std::uint8_t>& buf, std::size_t& pos) {
    if (buf.size() - pos < 4) raise(Errc::parse_error, "pairing file truncated");
    std::uint32_t len = (std::uint32_t(buf[pos]) << 24) | (std::uint32_t(buf[pos + 1]) << 16) |
                        (std::uint32_t(buf[pos + 2]) << 8) | std::uint32_t(buf[pos + 3]);
    pos += 4;
    if (buf.size() - pos < len) raise(Errc::parse_error, "pairing file truncated");
    Nat value = Nat::from_bytes_be(std::span(buf.data() + pos, len));
    pos += len;
    return value;
}

void write_file(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) raise(Errc::io_error, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) raise(Errc::io_error, "short write to " + path.string());
}

std::vector<std::uint8_t> read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(Errc::io_error, "cannot read " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return bytes;
}

// Checked prefix: magic + version, checksum over everything before the tag.
std::vector<std::uint8_t> open_pairing_file(const fs::path& path, const char* magic) {
    auto bytes = read_file(path);
    if (bytes.size() < 5 + 64) raise(Errc::parse_error, "pairing file too short");
    std::vector<std::uint8_t> body(bytes.begin(), bytes.end() - 64);
    auto digest = sha512(body);
    if (!std::equal(digest.begin(), digest.end(), bytes.end() - 64))
        raise(Errc::parse_error, "pairing file checksum mismatch");
    if (!std::equal(magic, magic + 4, body.begin()) || body[4] != 0x01)
        raise(Errc::parse_error, "not a pairing file of the expected kind");
    return std::vector<std::uint8_t>(body.begin() + 5, body.end());
}

void write_pairing_file(const fs::path& path, const char* magic,
                        const std::vector<std::uint8_t>& payload) {
    std::vector<std::uint8_t> bytes(magic, magic + 4);
    bytes.push_back(0x01);
    bytes.insert(bytes.end(), payload.begin(), payload.end());
    auto digest = sha512(bytes);
    bytes.insert(bytes.end(), digest.begin(), digest.end());
    write_file(path, bytes);
}

void write_offer_file(const fs::path& path, const CrtOffer& offer) {
    std::vector<std::uint8_t> payload;
    put_nat(payload, offer.params.p);
    put_nat(payload, offer.params.q);
    put_nat(payload, offer.params.g);
    payload.push_back(static_cast<std::uint8_t>(offer.params.n >> 8));
    payload.push_back(static_cast<std::uint8_t>(offer.params.n));
    put_nat(payload, offer.public_value);
    write_pairing_file(path, "CKEO", payload);
}

CrtOffer read_offer_file(const fs::path& path) {
    auto payload = open_pairing_file(path, "CKEO");
    std::size_t pos = 0;
    CrtOffer offer;
    offer.params.p = take_nat(payload, pos);
    offer.params.q = take_nat(payload, pos);
    offer.params.g = take_nat(payload, pos);
    if (payload.size() - pos < 2) raise(Errc::parse_error, "pairing file truncated");
    offer.params.n = static_cast<unsigned>((payload[pos] << 8) | payload[pos + 1]);
    pos += 2;
    offer.public_value = take_nat(payload, pos);
    if (pos != payload.size()) raise(Errc::parse_error, "trailing bytes in pairing file");
    return offer;
}

void write_reply_file(const fs::path& path, const CrtReply& reply) {
    std::vector<std::uint8_t> payload;
    put_nat(payload, reply.public_value);
    write_pairing_file(path, "CKER", payload);
}

CrtReply read_reply_file(const fs::path& path) {
    auto payload = open_pairing_file(path, "CKER");
    std::size_t pos = 0;
    CrtReply reply;
    reply.public_value = take_nat(payload, pos);
    if (pos != payload.size()) raise(Errc::parse_error, "trailing bytes in pairing file");
    return reply;
}

// ---------------------------------------------------------------------------
// Store plumbing shared by the commands.
// ---------------------------------------------------------------------------

struct Options {
    std::string store_path;
    std::string role;
    std::string listen;
    std::string connect;
    std::string group;
    unsigned gen_bits = 0;
    unsigned timeout_ms = 0; // 0 = command default
    int retries = -1;        // -1 = command default
};

// Command-line contradiction rather than a protocol failure; mapped to the
// usage exit code.
struct UsageError {
    std::string message;
};

StoreData load_existing_store(const Options& opt, const std::string& passphrase) {
    if (!fs::exists(opt.store_path))
        raise(Errc::io_error, "store not found: " + opt.store_path);
    StoreData data = load_store(opt.store_path, passphrase);
    if (!opt.role.empty() && role_from_name(opt.role) != data.role)
        throw UsageError{"store was created with role '" + role_name(data.role) + "'"};
    return data;
}

LinkConfig link_config(const Options& opt) {
    LinkConfig cfg;
    if (opt.timeout_ms > 0) {
        cfg.recv_timeout = std::chrono::milliseconds(opt.timeout_ms);
        // Responder linger after the last send; must comfortably exceed the
        // peer's retry timeout or its final retries go unanswered.
        cfg.quiet_window = std::chrono::milliseconds(opt.timeout_ms * 5 / 2);
    }
    if (opt.retries >= 0) cfg.max_retries = opt.retries;
    return cfg;
}

TftpConfig tftp_config(const Options& opt) {
    TftpConfig cfg;
    if (opt.timeout_ms > 0) cfg.recv_timeout = std::chrono::milliseconds(opt.timeout_ms);
    if (opt.retries >= 0) cfg.max_retransmits = opt.retries;
    return cfg;
}

// ---------------------------------------------------------------------------
// init-crt: three file-based steps establishing the root-of-trust key.
// ---------------------------------------------------------------------------

int cmd_init_crt(const Options& opt, const std::string& offer_out, const std::string& offer_in,
                 const std::string& reply_out, const std::string& reply_in) {
    bool step1 = !offer_out.empty() && offer_in.empty() && reply_in.empty();
    bool step2 = !offer_in.empty() && !reply_out.empty() && offer_out.empty() && reply_in.empty();
    bool step3 = !reply_in.empty() && offer_out.empty() && offer_in.empty() && reply_out.empty();
    if (int(step1) + int(step2) + int(step3) != 1) {
        std::fprintf(stderr,
                     "init-crt needs exactly one of: --offer-out FILE "
                     "| --offer-in FILE --reply-out FILE | --reply-in FILE\n");
        return 4;
    }

    std::string passphrase = read_passphrase();
    StoreLock lock(opt.store_path);

    if (step3) {
        StoreData data = load_existing_store(opt, passphrase);
        if (data.crt) raise(Errc::already_initialized, "root-of-trust key already present");
        if (!data.crt_pending)
            raise(Errc::stale_state, "no pending offer in this store; run --offer-out first");
        CrtReply reply = read_reply_file(reply_in);
        CrtState crt = crt_complete(*data.crt_pending, reply);
        data.chain = chain_from_crt(crt);
        data.crt = std::move(crt);
        data.crt_pending.reset();
        Rng rng;
        save_store(opt.store_path, data, passphrase, rng);
        std::printf("paired: root key fingerprint %s, chain ready at index 0\n",
                    fingerprint(data.crt->key).c_str());
        return 0;
    }

    // Steps 1 and 2 create the store (or extend an empty one).
    StoreData data;
    if (fs::exists(opt.store_path)) {
        data = load_existing_store(opt, passphrase);
        if (data.crt || data.crt_pending)
            raise(Errc::already_initialized, "store already holds pairing state");
    } else {
        if (opt.role.empty()) {
            std::fprintf(stderr, "creating a new store requires --role along|busu\n");
            return 4;
        }
        data.role = role_from_name(opt.role);
    }

    Rng rng;
    if (step1) {
        if (opt.group.empty() == (opt.gen_bits == 0)) {
            std::fprintf(stderr, "init-crt --offer-out needs exactly one of --group or --gen-bits\n");
            return 4;
        }
        DomainParams params =
            opt.gen_bits ? generate_group(opt.gen_bits, rng) : resolve_group(opt.group);
        auto [pending, offer] = crt_offer(params, rng);
        write_offer_file(offer_out, offer);
        data.crt_pending = std::move(pending);
        save_store(opt.store_path, data, passphrase, rng);
        std::printf("offer written to %s (%u-bit group); send it to the peer and finish with "
                    "--reply-in\n",
                    offer_out.c_str(), params.n);
        return 0;
    }

    // Step 2: respond to a received offer.
    CrtOffer offer = read_offer_file(offer_in);
    auto [crt, reply] = crt_respond(offer, rng);
    write_reply_file(reply_out, reply);
    data.chain = chain_from_crt(crt);
    data.crt = std::move(crt);
    save_store(opt.store_path, data, passphrase, rng);
    std::printf("reply written to %s; paired: root key fingerprint %s, chain ready at index 0\n",
                reply_out.c_str(), fingerprint(data.crt->key).c_str());
    return 0;
}

// ---------------------------------------------------------------------------
// link: one chain link over UDP. Initiator connects, responder listens.
// ---------------------------------------------------------------------------

int cmd_link(const Options& opt) {
    std::string passphrase = read_passphrase();
    StoreLock lock(opt.store_path);
    StoreData data = load_existing_store(opt, passphrase);
    if (!data.chain)
        raise(Errc::no_session_key, "store is not paired yet; run init-crt first");

    Rng rng;
    DomainParams params;
    std::optional<UdpTransport> transport;
    if (data.role == Role::Initiator) {
        if (opt.connect.empty()) {
            std::fprintf(stderr, "role 'along' initiates: use --connect HOST:PORT\n");
            return 4;
        }
        if (opt.group.empty() == (opt.gen_bits == 0)) {
            std::fprintf(stderr, "link as initiator needs exactly one of --group or --gen-bits\n");
            return 4;
        }
        params = opt.gen_bits ? generate_group(opt.gen_bits, rng) : resolve_group(opt.group);
        Endpoint ep = parse_endpoint(opt.connect, kLinkPort);
        transport.emplace(UdpTransport::connect(ep.host, ep.port));
    } else {
        if (opt.listen.empty()) {
            std::fprintf(stderr, "role 'busu' responds: use --listen [HOST]:PORT\n");
            return 4;
        }
        Endpoint ep = parse_endpoint(opt.listen, kLinkPort);
        transport.emplace(UdpTransport::bind(ep.port));
        std::fprintf(stderr, "listening on udp port %u\n", transport->local_port());
    }

    FramedEndpoint endpoint(*transport);
    std::uint32_t index_before = data.chain->index;
    LinkOutcome outcome = run_link(endpoint, data.role, *data.chain, rng, params, link_config(opt));

    if (!outcome.committed) {
        std::fprintf(stderr, "link %u failed: %s\n", index_before, outcome.detail.c_str());
        return 2;
    }
    save_store(opt.store_path, data, passphrase, rng);
    std::printf("link %u committed: chain index now %u, secret fingerprint %s\n", index_before,
                data.chain->index, fingerprint(data.chain->chain_secret).c_str());
    if (outcome.weak_restarts > 0)
        std::printf("(%d weak key restart%s)\n", outcome.weak_restarts,
                    outcome.weak_restarts == 1 ? "" : "s");
    return 0;
}

// ---------------------------------------------------------------------------
// put/get: file transfer keyed from the current chain link.
// ---------------------------------------------------------------------------

BoundKeys bound_keys_from(const StoreData& data) {
    if (!data.chain || data.chain->index == 0)
        raise(Errc::no_session_key, "no completed link; run 'link' before transfers");
    return BoundKeys{derive_transfer_keys(data.chain->chain_secret), data.chain->index};
}

int cmd_transfer(const Options& opt, bool is_put, const std::vector<std::string>& paths) {
    std::string passphrase = read_passphrase();
    StoreData data;
    {
        StoreLock lock(opt.store_path);
        data = load_existing_store(opt, passphrase);
    }
    BoundKeys bound = bound_keys_from(data);
    Rng rng;
    TftpConfig cfg = tftp_config(opt);

    if (!opt.listen.empty()) {
        // Passive side: serve exactly one request rooted at PATH (default ".").
        if (paths.size() > 1) {
            std::fprintf(stderr, "passive %s takes at most one path (the serving root)\n",
                         is_put ? "put" : "get");
            return 4;
        }
        fs::path root = paths.empty() ? fs::path(".") : fs::path(paths[0]);
        Endpoint ep = parse_endpoint(opt.listen, kTransferPort);
        UdpTransport transport = UdpTransport::bind(ep.port);
        std::fprintf(stderr, "serving one transfer on udp port %u (root %s)\n",
                     transport.local_port(), root.string().c_str());
        TransferReport report = serve_one(transport, bound, root, cfg);
        std::printf("served %llu bytes in %u blocks (%u retransmits), link %u\n",
                    static_cast<unsigned long long>(report.bytes), report.blocks,
                    report.retransmits, bound.chain_index);
        return 0;
    }

    if (opt.connect.empty()) {
        std::fprintf(stderr, "%s needs --connect HOST:PORT (or --listen to serve)\n",
                     is_put ? "put" : "get");
        return 4;
    }
    if (paths.empty() || paths.size() > 2) {
        std::fprintf(stderr, "%s takes %s\n", is_put ? "put" : "get",
                     is_put ? "LOCAL [REMOTE-NAME]" : "REMOTE-NAME [LOCAL]");
        return 4;
    }
    Endpoint ep = parse_endpoint(opt.connect, kTransferPort);
    UdpTransport transport = UdpTransport::connect(ep.host, ep.port);

    TransferReport report;
    if (is_put) {
        std::string local = paths[0];
        std::string remote = paths.size() > 1 ? paths[1] : fs::path(local).filename().string();
        report = put_file(transport, bound, local, remote, rng, cfg);
        std::printf("sent %s as %s: %llu bytes in %u blocks (%u retransmits), link %u\n",
                    local.c_str(), remote.c_str(), static_cast<unsigned long long>(report.bytes),
                    report.blocks, report.retransmits, bound.chain_index);
    } else {
        std::string remote = paths[0];
        std::string local = paths.size() > 1 ? paths[1] : fs::path(remote).filename().string();
        report = get_file(transport, bound, remote, local, rng, cfg);
        std::printf("received %s as %s: %llu bytes in %u blocks (%u retransmits), link %u\n",
                    remote.c_str(), local.c_str(), static_cast<unsigned long long>(report.bytes),
                    report.blocks, report.retransmits, bound.chain_index);
    }
    return 0;
}

// ---------------------------------------------------------------------------
// bench / attack / inspect.
// ---------------------------------------------------------------------------

int cmd_bench(const std::vector<unsigned>& sizes, unsigned trials) {
    std::vector<BenchStats> rows;
    for (unsigned bits : sizes) {
        std::fprintf(stderr, "timing %u-bit chain cycles (%u trials)...\n", bits, trials);
        rows.push_back(bench_chain_cycle(bits, trials));
    }
    std::fputs(bench_table(rows).c_str(), stdout);
    std::fputs("\n", stdout);
    std::fputs(bench_csv(rows).c_str(), stdout);
    std::fputs("\nnote: OS-hosted timings; figures measured on bare-metal boot environments\n"
               "are not comparable and are not reproduced by this harness.\n",
               stdout);
    return 0;
}

int cmd_attack(const std::string& scenario, unsigned trials, const std::string& group_spec,
               std::uint64_t seed, bool seed_given) {
    DomainParams params =
        group_spec.empty() ? attack_default_group() : resolve_group(group_spec);
    std::uint64_t effective = seed;
    if (!seed_given) {
        std::random_device rd;
        effective = (std::uint64_t(rd()) << 32) | rd();
    }
    Rng rng(effective);
    std::vector<AttackReport> reports;
    if (scenario.empty()) {
        reports = run_attack_suite(params, trials, rng);
    } else {
        reports.push_back(run_attack(scenario, params, trials, rng));
    }
    std::fputs(attack_table(reports).c_str(), stdout);
    bool all_pass = std::all_of(reports.begin(), reports.end(),
                                [](const AttackReport& r) { return r.pass(); });
    if (!all_pass) {
        std::fprintf(stderr, "attack expectation violated (seed %llu)\n",
                     static_cast<unsigned long long>(effective));
        return 2;
    }
    return 0;
}

int cmd_inspect(const Options& opt) {
    std::string passphrase = read_passphrase();
    StoreData data = load_existing_store(opt, passphrase);
    std::printf("store: %s\n", opt.store_path.c_str());
    std::printf("role: %s (%s)\n", role_name(data.role).c_str(),
                data.role == Role::Initiator ? "initiator" : "responder");
    if (data.crt) {
        std::printf("root of trust: paired, %u-bit group, key fingerprint %s\n",
                    data.crt->params.n, fingerprint(data.crt->key).c_str());
    } else if (data.crt_pending) {
        std::printf("root of trust: offer pending (%u-bit group), awaiting reply\n",
                    data.crt_pending->params.n);
    } else {
        std::printf("root of trust: absent\n");
    }
    if (data.chain) {
        std::printf("chain: index %u, secret fingerprint %s\n", data.chain->index,
                    fingerprint(data.chain->chain_secret).c_str());
        std::printf("root group fingerprint: %s/%s\n", fingerprint(data.chain->crt_p).c_str(),
                    fingerprint(data.chain->crt_g).c_str());
    } else {
        std::printf("chain: absent\n");
    }
    return 0;
}

int exit_code_for(const Error& e) {
    switch (e.code()) {
    case Errc::store_auth:
    case Errc::store_locked:
        return 3;
    case Errc::unknown_scenario:
    case Errc::unknown_group:
        return 4;
    default:
        return 2;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"chained key exchange peer"};
    app.require_subcommand(1);

    Options opt;
    app.add_option("--store", opt.store_path, "encrypted key store path");
    app.add_option("--role", opt.role, "peer role: along (initiator) or busu (responder)")
        ->check(CLI::IsMember({"along", "busu"}));
    auto* opt_listen = app.add_option("--listen", opt.listen, "listen endpoint ([HOST]:PORT)");
    auto* opt_connect = app.add_option("--connect", opt.connect, "peer endpoint (HOST[:PORT])");
    opt_listen->excludes(opt_connect);
    opt_connect->excludes(opt_listen);
    auto* opt_group =
        app.add_option("--group", opt.group, "builtin group name, or FILE:NAME for a group file");
    auto* opt_bits =
        app.add_option("--gen-bits", opt.gen_bits, "generate a fresh safe-prime group of N bits")
            ->check(CLI::Range(16u, 4096u));
    opt_group->excludes(opt_bits);
    opt_bits->excludes(opt_group);
    app.add_option("--timeout", opt.timeout_ms, "receive timeout in milliseconds")
        ->check(CLI::Range(1u, 600000u));
    app.add_option("--retries", opt.retries, "max retries / retransmits")
        ->check(CLI::Range(0, 64));

    auto* sc_init = app.add_subcommand("init-crt", "establish the root-of-trust key via files");
    std::string offer_out, offer_in, reply_out, reply_in;
    sc_init->add_option("--offer-out", offer_out, "write a pairing offer file (step 1)");
    sc_init->add_option("--offer-in", offer_in, "read the peer's offer file (step 2)");
    sc_init->add_option("--reply-out", reply_out, "write the pairing reply file (step 2)");
    sc_init->add_option("--reply-in", reply_in, "read the peer's reply file (step 3)");

    auto* sc_link = app.add_subcommand("link", "run one chain link against the peer");

    auto* sc_put = app.add_subcommand("put", "send a file under the current link key");
    std::vector<std::string> put_paths;
    sc_put->add_option("paths", put_paths, "LOCAL [REMOTE-NAME] (active) or [ROOT] (--listen)");

    auto* sc_get = app.add_subcommand("get", "fetch a file under the current link key");
    std::vector<std::string> get_paths;
    sc_get->add_option("paths", get_paths, "REMOTE-NAME [LOCAL] (active) or [ROOT] (--listen)");

    auto* sc_bench = app.add_subcommand("bench", "time full chain cycles");
    std::vector<unsigned> bench_sizes{1024, 2048};
    unsigned bench_trials = 5;
    sc_bench->add_option("sizes", bench_sizes, "group sizes in bits (1024 and/or 2048)")
        ->check(CLI::IsMember({1024, 2048}));
    sc_bench->add_option("--trials", bench_trials, "measured trials per size (>= 5)")
        ->check(CLI::Range(5u, 1000u));

    auto* sc_attack = app.add_subcommand("attack", "run the adversary experiments");
    std::string attack_scenario;
    unsigned attack_trials = 20;
    std::uint64_t attack_seed = 0;
    sc_attack->add_option("scenario", attack_scenario,
                          "one scenario name (default: the whole suite)");
    sc_attack->add_option("--trials", attack_trials, "trials per sampled scenario")
        ->check(CLI::Range(1u, 100000u));
    auto* opt_seed = sc_attack->add_option("--seed", attack_seed, "deterministic adversary seed");

    auto* sc_inspect = app.add_subcommand("inspect", "print non-secret store contents");

    // Global options may appear after the subcommand name.
    for (CLI::App* sub : {sc_init, sc_link, sc_put, sc_get, sc_bench, sc_attack, sc_inspect})
        sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 4;
    }

    bool needs_store = sc_init->parsed() || sc_link->parsed() || sc_put->parsed() ||
                       sc_get->parsed() || sc_inspect->parsed();
    if (needs_store && opt.store_path.empty()) {
        std::fprintf(stderr, "this command needs --store PATH\n");
        return 4;
    }

    try {
        if (sc_init->parsed())
            return cmd_init_crt(opt, offer_out, offer_in, reply_out, reply_in);
        if (sc_link->parsed()) return cmd_link(opt);
        if (sc_put->parsed()) return cmd_transfer(opt, true, put_paths);
        if (sc_get->parsed()) return cmd_transfer(opt, false, get_paths);
        if (sc_bench->parsed()) return cmd_bench(bench_sizes, bench_trials);
        if (sc_attack->parsed())
            return cmd_attack(attack_scenario, attack_trials, opt.group, attack_seed,
                              opt_seed->count() > 0);
        if (sc_inspect->parsed()) return cmd_inspect(opt);
    } catch (const UsageError& e) {
        std::fprintf(stderr, "%s\n", e.message.c_str());
        return 4;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 4;
}
