#include "cke/sectftp.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include "byteio.hpp"
#include "cke/aes.hpp"
#include "cke/errors.hpp"

namespace cke {

namespace {

constexpr std::size_t kBlockSize = 512;
constexpr std::size_t kMaxPacketBytes = 2048;
constexpr std::size_t kMaxNameBytes = 512;
constexpr std::uint32_t kMaxBlocks = 65535; // block numbers are 16-bit on the wire

using Clock = std::chrono::steady_clock;
using std::chrono::milliseconds;

milliseconds remaining_until(Clock::time_point deadline) {
    auto left = std::chrono::duration_cast<milliseconds>(deadline - Clock::now());
    return left.count() < 0 ? milliseconds(0) : left;
}

std::string read_zstring(detail::ByteReader& in, const char* what) {
    std::string out;
    for (;;) {
        std::uint8_t c = in.u8();
        if (c == 0) return out;
        out.push_back(static_cast<char>(c));
        if (out.size() > kMaxNameBytes)
            raise(Errc::malformed_packet, std::string(what) + " too long");
    }
}

} // namespace

std::vector<std::uint8_t> encode_packet(const TftpPacket& packet) {
    std::vector<std::uint8_t> out;
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, RequestPacket>) {
                if (p.filename.empty() || p.filename.size() > kMaxNameBytes ||
                    p.filename.find('\0') != std::string::npos)
                    raise(Errc::invalid_input, "bad transfer filename");
                detail::put_u16be(out, static_cast<std::uint16_t>(p.write ? TftpOp::Wrq : TftpOp::Rrq));
                out.insert(out.end(), p.filename.begin(), p.filename.end());
                out.push_back(0);
                const char mode[] = "octet";
                out.insert(out.end(), mode, mode + sizeof(mode)); // includes the NUL
                out.insert(out.end(), p.transfer_id.begin(), p.transfer_id.end());
                detail::put_u32be(out, p.chain_index);
            } else if constexpr (std::is_same_v<T, DataPacket>) {
                if (p.ciphertext.size() > kBlockSize)
                    raise(Errc::invalid_input, "data block over 512 bytes");
                detail::put_u16be(out, static_cast<std::uint16_t>(TftpOp::Data));
                detail::put_u16be(out, p.block);
                out.insert(out.end(), p.ciphertext.begin(), p.ciphertext.end());
                out.insert(out.end(), p.mac.begin(), p.mac.end());
            } else if constexpr (std::is_same_v<T, AckPacket>) {
                detail::put_u16be(out, static_cast<std::uint16_t>(TftpOp::Ack));
                detail::put_u16be(out, p.block);
            } else {
                static_assert(std::is_same_v<T, ErrorPacket>);
                if (p.message.size() > kMaxNameBytes || p.message.find('\0') != std::string::npos)
                    raise(Errc::invalid_input, "bad error message");
                detail::put_u16be(out, static_cast<std::uint16_t>(TftpOp::Error));
                detail::put_u16be(out, p.code);
                out.insert(out.end(), p.message.begin(), p.message.end());
                out.push_back(0);
            }
        },
        packet);
    return out;
}

TftpPacket decode_packet(std::span<const std::uint8_t> bytes) {
    if (bytes.size() > kMaxPacketBytes) raise(Errc::malformed_packet, "packet too large");
    detail::ByteReader in(bytes, Errc::malformed_packet);

    std::uint16_t op = in.u16be();
    switch (static_cast<TftpOp>(op)) {
    case TftpOp::Rrq:
    case TftpOp::Wrq: {
        RequestPacket p;
        p.write = static_cast<TftpOp>(op) == TftpOp::Wrq;
        p.filename = read_zstring(in, "filename");
        if (p.filename.empty()) raise(Errc::malformed_packet, "empty filename");
        if (read_zstring(in, "mode") != "octet")
            raise(Errc::malformed_packet, "mode must be octet");
        std::span<const std::uint8_t> tid = in.bytes(8);
        std::copy(tid.begin(), tid.end(), p.transfer_id.begin());
        p.chain_index = in.u32be();
        if (!in.done()) raise(Errc::malformed_packet, "trailing bytes");
        return p;
    }
    case TftpOp::Data: {
        DataPacket p;
        p.block = in.u16be();
        if (in.remaining() < 32) raise(Errc::malformed_packet, "data packet shorter than its mac");
        std::size_t ct_len = in.remaining() - 32;
        if (ct_len > kBlockSize) raise(Errc::malformed_packet, "data block over 512 bytes");
        std::span<const std::uint8_t> ct = in.bytes(ct_len);
        p.ciphertext.assign(ct.begin(), ct.end());
        std::span<const std::uint8_t> mac = in.bytes(32);
        std::copy(mac.begin(), mac.end(), p.mac.begin());
        return p;
    }
    case TftpOp::Ack: {
        AckPacket p;
        p.block = in.u16be();
        if (!in.done()) raise(Errc::malformed_packet, "trailing bytes");
        return p;
    }
    case TftpOp::Error: {
        ErrorPacket p;
        p.code = in.u16be();
        p.message = read_zstring(in, "error message");
        if (!in.done()) raise(Errc::malformed_packet, "trailing bytes");
        return p;
    }
    default:
        raise(Errc::malformed_packet, "unknown opcode");
    }
}

namespace {

std::array<std::uint8_t, 16> ctr_iv(const TransferId& tid, std::uint32_t block) {
    std::array<std::uint8_t, 16> iv{};
    std::copy(tid.begin(), tid.end(), iv.begin());
    iv[8] = static_cast<std::uint8_t>(block >> 24);
    iv[9] = static_cast<std::uint8_t>(block >> 16);
    iv[10] = static_cast<std::uint8_t>(block >> 8);
    iv[11] = static_cast<std::uint8_t>(block);
    return iv;
}

std::array<std::uint8_t, 32> block_mac(const TransferKeys& keys, const TransferId& tid,
                                       std::uint32_t block, std::span<const std::uint8_t> ct) {
    Sha512 h;
    h.update(keys.mac_key);
    std::uint8_t hdr[2 + 8 + 4];
    hdr[0] = 0;
    hdr[1] = static_cast<std::uint8_t>(TftpOp::Data);
    std::memcpy(hdr + 2, tid.data(), 8);
    hdr[10] = static_cast<std::uint8_t>(block >> 24);
    hdr[11] = static_cast<std::uint8_t>(block >> 16);
    hdr[12] = static_cast<std::uint8_t>(block >> 8);
    hdr[13] = static_cast<std::uint8_t>(block);
    h.update(std::span<const std::uint8_t>(hdr, sizeof(hdr)));
    h.update(ct);
    Digest full = h.finish();

    std::array<std::uint8_t, 32> mac;
    std::copy_n(full.begin(), 32, mac.begin());
    return mac;
}

} // namespace

SealedBlock seal_block(const TransferKeys& keys, const TransferId& tid, std::uint32_t block,
                       std::span<const std::uint8_t> plaintext) {
    if (block < 1) raise(Errc::invalid_input, "block numbers start at 1");
    if (plaintext.size() > kBlockSize) raise(Errc::invalid_input, "block over 512 bytes");

    SealedBlock sealed;
    sealed.ciphertext.assign(plaintext.begin(), plaintext.end());
    aes256_ctr_xor(keys.enc_key, ctr_iv(tid, block), 0, sealed.ciphertext);
    sealed.mac = block_mac(keys, tid, block, sealed.ciphertext);
    return sealed;
}

std::vector<std::uint8_t> open_block(const TransferKeys& keys, const TransferId& tid,
                                     std::uint32_t block, std::span<const std::uint8_t> ciphertext,
                                     const std::array<std::uint8_t, 32>& mac) {
    std::array<std::uint8_t, 32> expected = block_mac(keys, tid, block, ciphertext);
    // Bytewise compare without early exit, so mismatch position leaks
    // nothing through timing.
    std::uint8_t diff = 0;
    for (std::size_t i = 0; i < 32; ++i) diff |= static_cast<std::uint8_t>(expected[i] ^ mac[i]);
    if (diff != 0) raise(Errc::mac_mismatch, "data block failed authentication");

    std::vector<std::uint8_t> plaintext(ciphertext.begin(), ciphertext.end());
    aes256_ctr_xor(keys.enc_key, ctr_iv(tid, block), 0, plaintext);
    return plaintext;
}

namespace {

// Receive the next well-formed packet before the deadline; malformed
// datagrams are skipped.
std::optional<TftpPacket> recv_packet(Transport& transport, Clock::time_point deadline) {
    for (;;) {
        milliseconds left = remaining_until(deadline);
        std::optional<std::vector<std::uint8_t>> datagram = transport.recv(left);
        if (!datagram) return std::nullopt;
        try {
            return decode_packet(*datagram);
        } catch (const Error&) {
            if (Clock::now() >= deadline) return std::nullopt;
        }
    }
}

[[noreturn]] void raise_peer_error(const ErrorPacket& err) {
    raise(Errc::peer_error,
          "peer error " + std::to_string(err.code) + ": " + err.message);
}

void send_error(Transport& transport, TftpErr code, const std::string& message) {
    transport.send(encode_packet(ErrorPacket{static_cast<std::uint16_t>(code), message}));
}

// Sends the file content as sealed lock-step DATA blocks. `data` is the
// whole plaintext; the final short (possibly empty) block marks the end.
void send_blocks(Transport& transport, const BoundKeys& bound, const TransferId& tid,
                 std::span<const std::uint8_t> data, const TftpConfig& cfg,
                 TransferReport& report) {
    std::uint32_t nblocks = static_cast<std::uint32_t>(data.size() / kBlockSize) + 1;
    for (std::uint32_t block = 1; block <= nblocks; ++block) {
        std::size_t off = static_cast<std::size_t>(block - 1) * kBlockSize;
        std::span<const std::uint8_t> chunk = data.subspan(off, std::min(kBlockSize, data.size() - off));
        SealedBlock sealed = seal_block(bound.keys, tid, block, chunk);
        std::vector<std::uint8_t> wire =
            encode_packet(DataPacket{static_cast<std::uint16_t>(block), sealed.ciphertext, sealed.mac});

        transport.send(wire);
        int attempts = 0;
        for (;;) {
            std::optional<TftpPacket> p = recv_packet(transport, Clock::now() + cfg.recv_timeout);
            if (!p) {
                if (attempts >= cfg.max_retransmits)
                    raise(Errc::timeout, "no ack for block " + std::to_string(block));
                transport.send(wire);
                ++attempts;
                ++report.retransmits;
                continue;
            }
            if (const auto* err = std::get_if<ErrorPacket>(&*p)) raise_peer_error(*err);
            if (const auto* ack = std::get_if<AckPacket>(&*p)) {
                if (ack->block == block) break;
                // Older acks are duplicates; never resend on them (the
                // classic duplicate-ack retransmission storm).
            }
        }
        ++report.blocks;
        report.bytes += chunk.size();
    }
}

// Receives sealed lock-step DATA blocks into `out`. `resend` is what a
// timeout retransmits: the original request (client read) or ACK 0 (server
// write side) until the first block arrives, then the latest ack.
// `original_request` (when set) lets a duplicated request elicit the
// current ack again. Every block's MAC is verified before its plaintext
// is appended.
void recv_blocks(Transport& transport, const BoundKeys& bound, const TransferId& tid,
                 std::vector<std::uint8_t>& out, std::vector<std::uint8_t> resend,
                 const RequestPacket* original_request, const TftpConfig& cfg,
                 TransferReport& report) {
    std::uint32_t expected = 1;
    int attempts = 0;
    for (;;) {
        std::optional<TftpPacket> p = recv_packet(transport, Clock::now() + cfg.recv_timeout);
        if (!p) {
            if (attempts >= cfg.max_retransmits)
                raise(Errc::timeout, "no data for block " + std::to_string(expected));
            transport.send(resend);
            ++attempts;
            ++report.retransmits;
            continue;
        }
        if (const auto* err = std::get_if<ErrorPacket>(&*p)) raise_peer_error(*err);
        if (const auto* req = std::get_if<RequestPacket>(&*p)) {
            if (original_request && *req == *original_request) transport.send(resend);
            continue;
        }
        const auto* data = std::get_if<DataPacket>(&*p);
        if (!data) continue;

        if (data->block < expected) {
            // Duplicate of an already-consumed block: quench the sender.
            transport.send(encode_packet(AckPacket{data->block}));
            continue;
        }
        if (data->block != expected) continue; // future block: impossible in lock-step, ignore

        std::vector<std::uint8_t> plaintext;
        try {
            plaintext = open_block(bound.keys, tid, expected, data->ciphertext, data->mac);
        } catch (const Error&) {
            send_error(transport, TftpErr::IntegrityFailure,
                       "block " + std::to_string(expected) + " failed authentication");
            throw;
        }

        out.insert(out.end(), plaintext.begin(), plaintext.end());
        resend = encode_packet(AckPacket{static_cast<std::uint16_t>(expected)});
        transport.send(resend);
        ++report.blocks;
        report.bytes += plaintext.size();
        bool final_block = plaintext.size() < kBlockSize;
        ++expected;
        attempts = 0;

        if (final_block) {
            // Dally: if our final ack dies in transit the sender will
            // retransmit the last block, so keep re-acking for a while.
            Clock::time_point quiet = Clock::now() + 2 * cfg.recv_timeout;
            while (auto extra = recv_packet(transport, quiet)) {
                if (const auto* dup = std::get_if<DataPacket>(&*extra);
                    dup && dup->block == expected - 1) {
                    transport.send(resend);
                    quiet = Clock::now() + 2 * cfg.recv_timeout;
                }
            }
            return;
        }
    }
}

std::vector<std::uint8_t> read_whole_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(Errc::io_error, "cannot open " + path);
    std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
    if (!in.good() && !in.eof()) raise(Errc::io_error, "read failed on " + path);
    if (data.size() / kBlockSize + 1 > kMaxBlocks)
        raise(Errc::invalid_input, path + " exceeds the 16-bit block space");
    return data;
}

void write_file_atomically(const std::filesystem::path& final_path,
                           std::span<const std::uint8_t> data) {
    std::filesystem::path temp = final_path;
    temp += ".part";
    {
        std::ofstream out(temp, std::ios::binary | std::ios::trunc);
        if (!out) raise(Errc::io_error, "cannot create " + temp.string());
        out.write(reinterpret_cast<const char*>(data.data()),
                  static_cast<std::streamsize>(data.size()));
        if (!out.good()) {
            std::error_code ec;
            std::filesystem::remove(temp, ec);
            raise(Errc::io_error, "write failed on " + temp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(temp, final_path, ec);
    if (ec) {
        std::filesystem::remove(temp, ec);
        raise(Errc::io_error, "cannot move " + temp.string() + " into place");
    }
}

TransferId random_tid(Rng& rng) {
    TransferId tid;
    rng.fill(tid);
    return tid;
}

} // namespace

TransferReport put_file(Transport& transport, const BoundKeys& bound, const std::string& local_path,
                        const std::string& remote_name, Rng& rng, const TftpConfig& cfg) {
    std::vector<std::uint8_t> data = read_whole_file(local_path);
    TransferId tid = random_tid(rng);

    RequestPacket request{true, remote_name, tid, bound.chain_index};
    std::vector<std::uint8_t> request_wire = encode_packet(request);

    TransferReport report;
    transport.send(request_wire);
    int attempts = 0;
    for (;;) {
        std::optional<TftpPacket> p = recv_packet(transport, Clock::now() + cfg.recv_timeout);
        if (!p) {
            if (attempts >= cfg.max_retransmits)
                raise(Errc::timeout, "write request not acknowledged");
            transport.send(request_wire);
            ++attempts;
            ++report.retransmits;
            continue;
        }
        if (const auto* err = std::get_if<ErrorPacket>(&*p)) raise_peer_error(*err);
        if (const auto* ack = std::get_if<AckPacket>(&*p); ack && ack->block == 0) break;
    }

    send_blocks(transport, bound, tid, data, cfg, report);
    return report;
}

TransferReport get_file(Transport& transport, const BoundKeys& bound, const std::string& remote_name,
                        const std::string& local_path, Rng& rng, const TftpConfig& cfg) {
    TransferId tid = random_tid(rng);
    RequestPacket request{false, remote_name, tid, bound.chain_index};

    TransferReport report;
    std::vector<std::uint8_t> content;
    transport.send(encode_packet(request));
    recv_blocks(transport, bound, tid, content, encode_packet(request), nullptr, cfg, report);

    write_file_atomically(local_path, content);
    return report;
}

TransferReport serve_one(Transport& transport, const BoundKeys& bound,
                         const std::filesystem::path& root, const TftpConfig& cfg) {
    // Wait for a request, ignoring anything else.
    Clock::time_point deadline =
        Clock::now() + cfg.recv_timeout * (cfg.max_retransmits + 1);
    RequestPacket request;
    for (;;) {
        std::optional<TftpPacket> p = recv_packet(transport, deadline);
        if (!p) raise(Errc::timeout, "no transfer request arrived");
        if (const auto* req = std::get_if<RequestPacket>(&*p)) {
            request = *req;
            break;
        }
    }

    if (request.chain_index != bound.chain_index) {
        send_error(transport, TftpErr::KeyBindingMismatch,
                   "request bound to chain index " + std::to_string(request.chain_index));
        raise(Errc::chain_index_mismatch, "transfer request for a different link");
    }
    if (request.filename.find('/') != std::string::npos ||
        request.filename.find("..") != std::string::npos) {
        send_error(transport, TftpErr::AccessViolation, "filename not allowed");
        raise(Errc::invalid_input, "transfer filename not allowed: " + request.filename);
    }

    std::filesystem::path target = root / request.filename;
    TransferReport report;

    if (request.write) {
        // Refuse now if the final write cannot land: the sender treats the
        // last ack as success, so failing only at write time would let it
        // report a transfer the server never stored.
        std::error_code dir_ec;
        if (!std::filesystem::is_directory(root, dir_ec)) {
            send_error(transport, TftpErr::AccessViolation, "serving root unavailable");
            raise(Errc::io_error, "serving root " + root.string() + " is not a directory");
        }
        std::vector<std::uint8_t> content;
        std::vector<std::uint8_t> ack0 = encode_packet(AckPacket{0});
        transport.send(ack0);
        recv_blocks(transport, bound, request.transfer_id, content, ack0, &request, cfg, report);
        write_file_atomically(target, content);
    } else {
        if (!std::filesystem::exists(target)) {
            send_error(transport, TftpErr::FileNotFound, request.filename + " not found");
            raise(Errc::io_error, target.string() + " not found");
        }
        std::vector<std::uint8_t> data = read_whole_file(target.string());
        send_blocks(transport, bound, request.transfer_id, data, cfg, report);
    }
    return report;
}

} // namespace cke
