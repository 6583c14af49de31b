#include "cke/wire.hpp"

#include "byteio.hpp"

namespace cke {

namespace {

constexpr std::uint8_t kMagic[4] = {'C', 'K', 'E', '1'};

void put_nat(std::vector<std::uint8_t>& out, const Nat& x) {
    std::vector<std::uint8_t> enc = encode_nat(x);
    out.insert(out.end(), enc.begin(), enc.end());
}

Nat read_nat(detail::ByteReader& in) {
    std::uint32_t len = in.u32be();
    if (len > kMaxFrameBytes)
        raise(Errc::malformed_frame, "integer field longer than any legal frame");
    std::span<const std::uint8_t> mag = in.bytes(len);
    if (len > 0 && mag[0] == 0)
        raise(Errc::malformed_frame, "integer magnitude has a leading zero byte");
    return Nat::from_bytes_be(mag);
}

} // namespace

std::vector<std::uint8_t> encode_frame(const Frame& frame) {
    std::vector<std::uint8_t> out;
    out.insert(out.end(), kMagic, kMagic + 4);
    detail::put_u8(out, kFrameVersion);
    detail::put_u8(out, static_cast<std::uint8_t>(frame.kind()));
    detail::put_u32be(out, frame.chain_index);

    std::visit(
        [&](const auto& pay) {
            using T = std::decay_t<decltype(pay)>;
            if constexpr (std::is_same_v<T, OfferPayload>) {
                put_nat(out, pay.public_value);
                put_nat(out, pay.p);
                put_nat(out, pay.g);
                put_nat(out, pay.nonce.value);
                detail::put_u16be(out, static_cast<std::uint16_t>(pay.nonce.width_bits));
            } else if constexpr (std::is_same_v<T, ReplyPayload>) {
                put_nat(out, pay.public_value);
            } else if constexpr (std::is_same_v<T, VerifyPayload>) {
                out.insert(out.end(), pay.digest.begin(), pay.digest.end());
            } else if constexpr (std::is_same_v<T, RetryPayload>) {
                detail::put_u8(out, pay.attempt);
            } else {
                static_assert(std::is_same_v<T, AbortPayload>);
                detail::put_u8(out, pay.reason);
            }
        },
        frame.payload);

    if (out.size() > kMaxFrameBytes) raise(Errc::malformed_frame, "frame exceeds 64 KiB");
    return out;
}

Frame decode_frame(std::span<const std::uint8_t> bytes) {
    if (bytes.size() > kMaxFrameBytes) raise(Errc::malformed_frame, "frame exceeds 64 KiB");
    detail::ByteReader in(bytes, Errc::malformed_frame);

    std::span<const std::uint8_t> magic = in.bytes(4);
    if (!std::equal(magic.begin(), magic.end(), kMagic))
        raise(Errc::malformed_frame, "bad magic");
    if (in.u8() != kFrameVersion) raise(Errc::malformed_frame, "unsupported version");
    std::uint8_t kind = in.u8();
    std::uint32_t index = in.u32be();

    Frame frame;
    frame.chain_index = index;

    switch (static_cast<MsgKind>(kind)) {
    case MsgKind::Offer: {
        OfferPayload pay;
        pay.public_value = read_nat(in);
        pay.p = read_nat(in);
        pay.g = read_nat(in);
        pay.nonce.value = read_nat(in);
        pay.nonce.width_bits = in.u16be();
        if (pay.nonce.value.bit_length() > pay.nonce.width_bits)
            raise(Errc::malformed_frame, "nonce wider than its declared width");
        frame.payload = std::move(pay);
        break;
    }
    case MsgKind::Reply:
        frame.payload = ReplyPayload{read_nat(in)};
        break;
    case MsgKind::Verify: {
        VerifyPayload pay;
        std::span<const std::uint8_t> d = in.bytes(64);
        std::copy(d.begin(), d.end(), pay.digest.begin());
        frame.payload = std::move(pay);
        break;
    }
    case MsgKind::Retry:
        frame.payload = RetryPayload{in.u8()};
        break;
    case MsgKind::Abort:
        frame.payload = AbortPayload{in.u8()};
        break;
    default:
        raise(Errc::malformed_frame, "unknown frame kind");
    }

    if (!in.done()) raise(Errc::malformed_frame, "trailing bytes after payload");
    return frame;
}

Frame frame_from_offer(const Offer& offer) {
    return Frame{offer.index, OfferPayload{offer.public_value, offer.p, offer.g, offer.nonce}};
}

Offer offer_from_frame(const Frame& frame) {
    const auto& pay = std::get<OfferPayload>(frame.payload);
    return Offer{frame.chain_index, pay.public_value, pay.p, pay.g, pay.nonce};
}

Frame frame_from_reply(const Reply& reply) {
    return Frame{reply.index, ReplyPayload{reply.public_value}};
}

Reply reply_from_frame(const Frame& frame) {
    return Reply{frame.chain_index, std::get<ReplyPayload>(frame.payload).public_value};
}

Frame verify_frame(std::uint32_t index, const Digest& digest) {
    return Frame{index, VerifyPayload{digest}};
}

Frame retry_frame(std::uint32_t index, std::uint8_t attempt) {
    return Frame{index, RetryPayload{attempt}};
}

Frame abort_frame(std::uint32_t index, AbortReason reason) {
    return Frame{index, AbortPayload{static_cast<std::uint8_t>(reason)}};
}

} // namespace cke
