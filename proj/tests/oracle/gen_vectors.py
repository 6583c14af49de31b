#!/usr/bin/env python3
"""Independent reference for the constants frozen in the C++ tests.

Recomputes every pinned derivation-chain value (encoding, KDF, link digests,
transfer keys, store key, sealed block) from scratch with nothing but the
standard library, so a test constant can always be audited against a second
implementation. The AES core checks itself against the FIPS-197 C.3 vector
before it is trusted for the sealed-block vector.

Run: python3 gen_vectors.py
"""

import hashlib

# --- minimal AES-256, encryption only ---------------------------------------


def _gmul(a, b):
    r = 0
    while b:
        if b & 1:
            r ^= a
        a <<= 1
        if a & 0x100:
            a ^= 0x11B
        b >>= 1
    return r


def _build_sbox():
    sbox = []
    for x in range(256):
        inv = 0
        if x:
            inv = 1
            e = 254
            base = x
            while e:
                if e & 1:
                    inv = _gmul(inv, base)
                base = _gmul(base, base)
                e >>= 1
        y = inv
        for shift in (1, 2, 3, 4):
            y ^= ((inv << shift) | (inv >> (8 - shift))) & 0xFF
        sbox.append((y ^ 0x63) & 0xFF)
    return sbox


_SBOX = _build_sbox()
_RCON = [0x01, 0x02, 0x04, 0x08, 0x10, 0x20, 0x40]


def _expand_key(key):
    words = [list(key[4 * i : 4 * i + 4]) for i in range(8)]
    for i in range(8, 60):
        t = list(words[i - 1])
        if i % 8 == 0:
            t = t[1:] + t[:1]
            t = [_SBOX[b] for b in t]
            t[0] ^= _RCON[i // 8 - 1]
        elif i % 8 == 4:
            t = [_SBOX[b] for b in t]
        words.append([a ^ b for a, b in zip(words[i - 8], t)])
    return words


def aes256_encrypt_block(key, block):
    w = _expand_key(key)
    s = [[block[4 * c + r] for c in range(4)] for r in range(4)]

    def add_round_key(rnd):
        for c in range(4):
            for r in range(4):
                s[r][c] ^= w[4 * rnd + c][r]

    def round_core(last):
        for r in range(4):
            for c in range(4):
                s[r][c] = _SBOX[s[r][c]]
        for r in range(1, 4):
            s[r] = s[r][r:] + s[r][:r]
        if last:
            return
        for c in range(4):
            a = [s[r][c] for r in range(4)]
            s[0][c] = _gmul(a[0], 2) ^ _gmul(a[1], 3) ^ a[2] ^ a[3]
            s[1][c] = a[0] ^ _gmul(a[1], 2) ^ _gmul(a[2], 3) ^ a[3]
            s[2][c] = a[0] ^ a[1] ^ _gmul(a[2], 2) ^ _gmul(a[3], 3)
            s[3][c] = _gmul(a[0], 3) ^ a[1] ^ a[2] ^ _gmul(a[3], 2)

    add_round_key(0)
    for rnd in range(1, 14):
        round_core(last=False)
        add_round_key(rnd)
    round_core(last=True)
    add_round_key(14)
    return bytes(s[i % 4][i // 4] for i in range(16))


def _aes_self_check():
    key = bytes(range(32))
    plain = bytes.fromhex("00112233445566778899aabbccddeeff")
    want = "8ea2b7ca516745bfeafc49904b496089"
    got = aes256_encrypt_block(key, plain).hex()
    assert got == want, f"AES self-check failed: {got}"


# --- the derivation chain ----------------------------------------------------


def encode_nat(x):
    mag = x.to_bytes((x.bit_length() + 7) // 8, "big") if x else b""
    return len(mag).to_bytes(4, "big") + mag


def kdf(key, context, out_bits):
    encoded = encode_nat(key)
    out_bytes = (out_bits + 7) // 8
    stream = b""
    counter = 1
    while len(stream) < out_bytes:
        h = hashlib.sha512()
        h.update(counter.to_bytes(4, "big"))
        h.update(context.encode())
        h.update(encoded)
        stream += h.digest()
        counter += 1
    value = int.from_bytes(stream[:out_bytes], "big")
    return value >> (out_bytes * 8 - out_bits)


def link_digest(initiator, key, prev_chain, prev_digest, nonce_value, nonce_width_bits):
    first, second = (key, prev_chain) if initiator else (prev_chain, key)
    h = hashlib.sha512()
    h.update(encode_nat(first))
    h.update(encode_nat(second))
    if prev_digest is not None:
        h.update(prev_digest)
    h.update(nonce_value.to_bytes((nonce_width_bits + 7) // 8, "big"))
    return h.digest()


def derive_transfer_keys(key):
    enc = kdf(key, "CKE-ENC", 256).to_bytes(32, "big")
    mac = kdf(key, "CKE-MAC", 512).to_bytes(64, "big")
    return enc, mac


def derive_store_key(passphrase, salt):
    k = int.from_bytes(passphrase.encode() + salt, "big")
    for _ in range(1 << 16):
        k = kdf(k, "CKE-STORE", 512)
    return k.to_bytes(64, "big")


def seal_block(enc_key, mac_key, transfer_id, block, plaintext):
    ciphertext = bytearray(plaintext)
    for chunk in range((len(plaintext) + 15) // 16):
        counter_block = transfer_id + block.to_bytes(4, "big") + chunk.to_bytes(4, "big")
        stream = aes256_encrypt_block(enc_key, counter_block)
        for i in range(chunk * 16, min((chunk + 1) * 16, len(plaintext))):
            ciphertext[i] ^= stream[i % 16]
    h = hashlib.sha512()
    h.update(mac_key)
    h.update((3).to_bytes(2, "big"))
    h.update(transfer_id)
    h.update(block.to_bytes(4, "big"))
    h.update(bytes(ciphertext))
    return bytes(ciphertext), h.digest()[:32]


def main():
    _aes_self_check()

    print("# nat encoding")
    print("encode_nat(0)      =", encode_nat(0).hex())
    print("encode_nat(1)      =", encode_nat(1).hex())
    print("encode_nat(0x1234) =", encode_nat(0x1234).hex())
    print("encode_nat(0xff)   =", encode_nat(0xFF).hex())
    enc512 = encode_nat(1 << 512)
    print("encode_nat(1<<512) = len", len(enc512), "first byte", f"{enc512[4]:02x}")

    print()
    print("# kdf")
    print("kdf(8, 'chain', 6)    =", hex(kdf(8, "chain", 6)))
    print("kdf(8, 'chain', 48)   =", hex(kdf(8, "chain", 48)))
    print("kdf(8, 'enc', 48)     =", hex(kdf(8, "enc", 48)))
    print("kdf(2, 'chain', 5)    =", hex(kdf(2, "chain", 5)))
    print("kdf(8, 'chain', 1024).bit_length() =", kdf(8, "chain", 1024).bit_length())

    print()
    print("# link digests: key 8, chain secret 2, no previous digest, zero 6-bit nonce")
    print("initiator =", link_digest(True, 8, 2, None, 0, 6).hex())
    print("responder =", link_digest(False, 8, 2, None, 0, 6).hex())

    print()
    print("# transfer keys from (1<<600) + 0x1234567890abcdef")
    enc_key, mac_key = derive_transfer_keys((1 << 600) + 0x1234567890ABCDEF)
    print("enc_key =", enc_key.hex())
    print("mac_key =", mac_key.hex())

    print()
    print("# sealed block: tid 0001020304050607, block 1, pt[i] = (7i + 3) mod 256, 512 bytes")
    tid = bytes(range(8))
    plaintext = bytes((i * 7 + 3) % 256 for i in range(512))
    ciphertext, mac = seal_block(enc_key, mac_key, tid, 1, plaintext)
    print("ciphertext[:16] =", ciphertext[:16].hex())
    print("mac             =", mac.hex())

    print()
    print("# store key: passphrase 'correct horse', salt 00..0f, 2^16 kdf folds")
    print("store_key =", derive_store_key("correct horse", bytes(range(16))).hex())


if __name__ == "__main__":
    main()
