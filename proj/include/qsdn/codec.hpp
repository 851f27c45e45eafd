#pragma once

#include "qsdn/keystore.hpp"
#include "qsdn/types.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <string>

namespace qsdn {

// Wire values are fixed: 0/1/2 in the DataFrame kind byte.
enum class CodecKind : std::uint8_t { Transparent = 0, Quantum = 1, Classical = 2 };

enum class CodecDirection { Encoder, Decoder };

// TCP service where a codec accepts traffic; listed in the controller config.
struct EntrancePoint {
    std::string address;
    std::uint16_t port = 0;
    CodecKind kind = CodecKind::Transparent;
    CodecDirection direction = CodecDirection::Encoder;
};

std::uint32_t crc32_of(std::span<const std::uint8_t> data);

// --- data-plane framing ------------------------------------------------
//
// magic 0x51 0x44 | version 0x01 | kind | channel u16 BE | seq u32 BE |
// length u32 BE | payload[length]

struct DataFrame {
    CodecKind kind = CodecKind::Transparent;
    ChannelId channel = 0;
    std::uint32_t seq = 0;
    Bytes payload;
};

inline constexpr std::size_t kFrameHeaderSize = 14;
inline constexpr std::uint8_t kFrameMagic0 = 0x51;
inline constexpr std::uint8_t kFrameMagic1 = 0x44;
inline constexpr std::uint8_t kFrameVersion = 0x01;

Bytes frame(const DataFrame& f);

enum class FrameError { Ok, BadMagic, BadVersion, BadKind, Truncated, LengthMismatch };

struct DeframeResult {
    FrameError error = FrameError::Ok;
    DataFrame frame;
    bool ok() const { return error == FrameError::Ok; }
};

DeframeResult deframe(std::span<const std::uint8_t> buffer);

// --- quantum (one-time pad) codec ---------------------------------------

// Raw XOR with pool material; throws InsufficientKey with the pool untouched.
Bytes otp_encode(std::span<const std::uint8_t> plain, KeyPool& pool, SimTime now = 0.0);
Bytes otp_decode(std::span<const std::uint8_t> cipher, KeyPool& pool, SimTime now = 0.0);

// Sealed variants carry a CRC32 of the plaintext inside the pad so pool
// desynchronization shows up as an integrity failure instead of silent
// garbage.
Bytes otp_seal(std::span<const std::uint8_t> plain, KeyPool& pool, SimTime now = 0.0);

struct OpenResult {
    bool ok = false;
    Bytes plain;
};

OpenResult otp_open(std::span<const std::uint8_t> cipher, KeyPool& pool, SimTime now = 0.0);

// --- classical stream-cipher codec ---------------------------------------

inline constexpr std::size_t kSessionKeyBytes = 32;
inline constexpr std::uint64_t kDefaultRekeyAfterBytes = 1 << 20;

struct RekeyRequired : std::runtime_error {
    RekeyRequired() : std::runtime_error("session passed rekey threshold") {}
};

struct ClassicalSession {
    ChannelId channel = 0;
    std::array<std::uint8_t, kSessionKeyBytes> session_key{};
    std::uint64_t nonce_counter = 0;
    std::uint64_t bytes_encoded = 0;
    std::uint64_t rekey_after_bytes = kDefaultRekeyAfterBytes;
    bool quantum_wrapped = false;
    SimTime established_at = 0.0;
};

// Key-transport blob sent to the peer: 8-byte salt followed by the session
// key XORed with either pool material (quantum-wrapped) or a keystream
// derived from the pre-shared bootstrap secret (pure-classical fallback).
struct SessionHandshake {
    ClassicalSession session;
    Bytes transport; // salt || wrapped key
    bool quantum_wrapped = false;
};

inline constexpr std::size_t kHandshakeSaltBytes = 8;

SessionHandshake establish_classical_session(ChannelId channel, KeyPool& pool,
                                             std::mt19937_64& rng,
                                             std::span<const std::uint8_t> bootstrap_secret,
                                             std::uint64_t rekey_after_bytes = kDefaultRekeyAfterBytes,
                                             SimTime now = 0.0);

ClassicalSession accept_classical_session(ChannelId channel,
                                          std::span<const std::uint8_t> transport,
                                          bool quantum_wrapped, KeyPool& pool,
                                          std::span<const std::uint8_t> bootstrap_secret,
                                          std::uint64_t rekey_after_bytes = kDefaultRekeyAfterBytes,
                                          SimTime now = 0.0);

// Deterministic pseudorandom bytes for (key, nonce); ChaCha20 under the hood.
Bytes keystream(const std::array<std::uint8_t, kSessionKeyBytes>& key, std::uint64_t nonce,
                std::size_t n);

// XOR with keystream(session_key, nonce_counter); one nonce per frame.
// Throws RekeyRequired once rekey_after_bytes is exceeded.
Bytes classical_encode(std::span<const std::uint8_t> plain, ClassicalSession& session);
Bytes classical_decode(std::span<const std::uint8_t> cipher, ClassicalSession& session);

// CRC-protected variants, mirroring otp_seal/otp_open.
Bytes classical_seal(std::span<const std::uint8_t> plain, ClassicalSession& session);
OpenResult classical_open(std::span<const std::uint8_t> cipher, ClassicalSession& session);

// --- transparent codec ----------------------------------------------------

Bytes transparent_pass(std::span<const std::uint8_t> payload);

} // namespace qsdn
