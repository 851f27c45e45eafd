#include "qsdn/codec.hpp"

#include <sodium.h>
#include <zlib.h>

#include <cstring>

namespace qsdn {

std::uint32_t crc32_of(std::span<const std::uint8_t> data) {
    return static_cast<std::uint32_t>(
        ::crc32(0L, data.data(), static_cast<uInt>(data.size())));
}

namespace {

void put_u16(Bytes& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void put_u32(Bytes& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

std::uint16_t get_u16(std::span<const std::uint8_t> b, std::size_t off) {
    return static_cast<std::uint16_t>(b[off] << 8 | b[off + 1]);
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t off) {
    return static_cast<std::uint32_t>(b[off]) << 24 | static_cast<std::uint32_t>(b[off + 1]) << 16 |
           static_cast<std::uint32_t>(b[off + 2]) << 8 | static_cast<std::uint32_t>(b[off + 3]);
}

Bytes xor_with(std::span<const std::uint8_t> data, std::span<const std::uint8_t> key) {
    Bytes out(data.size());
    for (std::size_t i = 0; i < data.size(); ++i)
        out[i] = data[i] ^ key[i];
    return out;
}

std::array<std::uint8_t, kSessionKeyBytes>
derive_bootstrap_key(std::span<const std::uint8_t> secret) {
    // Fold the pre-shared secret into a fixed-size keystream key.
    std::array<std::uint8_t, kSessionKeyBytes> key{};
    if (secret.empty())
        throw ConfigError("empty bootstrap secret");
    for (std::size_t i = 0; i < secret.size(); ++i)
        key[i % kSessionKeyBytes] ^= secret[i];
    key[0] ^= static_cast<std::uint8_t>(secret.size());
    return key;
}

} // namespace

Bytes frame(const DataFrame& f) {
    Bytes out;
    out.reserve(kFrameHeaderSize + f.payload.size());
    out.push_back(kFrameMagic0);
    out.push_back(kFrameMagic1);
    out.push_back(kFrameVersion);
    out.push_back(static_cast<std::uint8_t>(f.kind));
    put_u16(out, f.channel);
    put_u32(out, f.seq);
    put_u32(out, static_cast<std::uint32_t>(f.payload.size()));
    out.insert(out.end(), f.payload.begin(), f.payload.end());
    return out;
}

DeframeResult deframe(std::span<const std::uint8_t> buffer) {
    DeframeResult res;
    if (buffer.size() < kFrameHeaderSize) {
        res.error = FrameError::Truncated;
        return res;
    }
    if (buffer[0] != kFrameMagic0 || buffer[1] != kFrameMagic1) {
        res.error = FrameError::BadMagic;
        return res;
    }
    if (buffer[2] != kFrameVersion) {
        res.error = FrameError::BadVersion;
        return res;
    }
    if (buffer[3] > 2) {
        res.error = FrameError::BadKind;
        return res;
    }
    const std::uint32_t length = get_u32(buffer, 10);
    if (buffer.size() < kFrameHeaderSize + length) {
        res.error = FrameError::Truncated;
        return res;
    }
    if (buffer.size() > kFrameHeaderSize + length) {
        res.error = FrameError::LengthMismatch;
        return res;
    }
    res.frame.kind = static_cast<CodecKind>(buffer[3]);
    res.frame.channel = get_u16(buffer, 4);
    res.frame.seq = get_u32(buffer, 6);
    res.frame.payload.assign(buffer.begin() + kFrameHeaderSize, buffer.end());
    return res;
}

Bytes otp_encode(std::span<const std::uint8_t> plain, KeyPool& pool, SimTime now) {
    if (plain.empty())
        return {};
    const Bytes key = pool.take_material(plain.size(), KeyPurpose::OtpData, now);
    return xor_with(plain, key);
}

Bytes otp_decode(std::span<const std::uint8_t> cipher, KeyPool& pool, SimTime now) {
    return otp_encode(cipher, pool, now); // XOR is its own inverse
}

Bytes otp_seal(std::span<const std::uint8_t> plain, KeyPool& pool, SimTime now) {
    Bytes body(plain.begin(), plain.end());
    put_u32(body, crc32_of(plain));
    return otp_encode(body, pool, now);
}

OpenResult otp_open(std::span<const std::uint8_t> cipher, KeyPool& pool, SimTime now) {
    OpenResult res;
    if (cipher.size() < 4)
        return res;
    Bytes body = otp_decode(cipher, pool, now);
    const std::uint32_t stored = get_u32(body, body.size() - 4);
    body.resize(body.size() - 4);
    res.ok = stored == crc32_of(body);
    res.plain = std::move(body);
    return res;
}

Bytes keystream(const std::array<std::uint8_t, kSessionKeyBytes>& key, std::uint64_t nonce,
                std::size_t n) {
    Bytes out(n, 0);
    if (n == 0)
        return out;
    std::array<std::uint8_t, crypto_stream_chacha20_NONCEBYTES> nonce_bytes{};
    for (std::size_t i = 0; i < 8; ++i)
        nonce_bytes[i] = static_cast<std::uint8_t>(nonce >> (8 * i));
    crypto_stream_chacha20(out.data(), n, nonce_bytes.data(), key.data());
    return out;
}

SessionHandshake establish_classical_session(ChannelId channel, KeyPool& pool,
                                             std::mt19937_64& rng,
                                             std::span<const std::uint8_t> bootstrap_secret,
                                             std::uint64_t rekey_after_bytes, SimTime now) {
    SessionHandshake hs;
    hs.session.channel = channel;
    hs.session.rekey_after_bytes = rekey_after_bytes;
    hs.session.established_at = now;

    std::uniform_int_distribution<int> byte_dist(0, 255);
    for (auto& b : hs.session.session_key)
        b = static_cast<std::uint8_t>(byte_dist(rng));

    Bytes salt(kHandshakeSaltBytes);
    for (auto& b : salt)
        b = static_cast<std::uint8_t>(byte_dist(rng));

    Bytes wrap;
    if (pool.available_bits() >= kSessionKeyBytes * 8) {
        wrap = pool.take_material(kSessionKeyBytes, KeyPurpose::SessionKeyWrap, now);
        hs.quantum_wrapped = true;
    } else {
        std::uint64_t salt_nonce = 0;
        std::memcpy(&salt_nonce, salt.data(), kHandshakeSaltBytes);
        wrap = keystream(derive_bootstrap_key(bootstrap_secret), salt_nonce, kSessionKeyBytes);
        hs.quantum_wrapped = false;
    }
    hs.session.quantum_wrapped = hs.quantum_wrapped;
    hs.transport = salt;
    const Bytes wrapped = xor_with(hs.session.session_key, wrap);
    hs.transport.insert(hs.transport.end(), wrapped.begin(), wrapped.end());
    return hs;
}

ClassicalSession accept_classical_session(ChannelId channel,
                                          std::span<const std::uint8_t> transport,
                                          bool quantum_wrapped, KeyPool& pool,
                                          std::span<const std::uint8_t> bootstrap_secret,
                                          std::uint64_t rekey_after_bytes, SimTime now) {
    if (transport.size() != kHandshakeSaltBytes + kSessionKeyBytes)
        throw ConfigError("malformed session transport blob");
    ClassicalSession session;
    session.channel = channel;
    session.rekey_after_bytes = rekey_after_bytes;
    session.established_at = now;
    session.quantum_wrapped = quantum_wrapped;

    Bytes wrap;
    if (quantum_wrapped) {
        wrap = pool.take_material(kSessionKeyBytes, KeyPurpose::SessionKeyWrap, now);
    } else {
        std::uint64_t salt_nonce = 0;
        std::memcpy(&salt_nonce, transport.data(), kHandshakeSaltBytes);
        wrap = keystream(derive_bootstrap_key(bootstrap_secret), salt_nonce, kSessionKeyBytes);
    }
    const auto wrapped = transport.subspan(kHandshakeSaltBytes);
    for (std::size_t i = 0; i < kSessionKeyBytes; ++i)
        session.session_key[i] = wrapped[i] ^ wrap[i];
    return session;
}

Bytes classical_encode(std::span<const std::uint8_t> plain, ClassicalSession& session) {
    if (session.bytes_encoded + plain.size() > session.rekey_after_bytes)
        throw RekeyRequired();
    const Bytes ks = keystream(session.session_key, session.nonce_counter, plain.size());
    ++session.nonce_counter;
    session.bytes_encoded += plain.size();
    return xor_with(plain, ks);
}

Bytes classical_decode(std::span<const std::uint8_t> cipher, ClassicalSession& session) {
    return classical_encode(cipher, session);
}

Bytes classical_seal(std::span<const std::uint8_t> plain, ClassicalSession& session) {
    Bytes body(plain.begin(), plain.end());
    put_u32(body, crc32_of(plain));
    return classical_encode(body, session);
}

OpenResult classical_open(std::span<const std::uint8_t> cipher, ClassicalSession& session) {
    OpenResult res;
    if (cipher.size() < 4)
        return res;
    Bytes body = classical_decode(cipher, session);
    const std::uint32_t stored = get_u32(body, body.size() - 4);
    body.resize(body.size() - 4);
    res.ok = stored == crc32_of(body);
    res.plain = std::move(body);
    return res;
}

Bytes transparent_pass(std::span<const std::uint8_t> payload) {
    return Bytes(payload.begin(), payload.end());
}

} // namespace qsdn
