#pragma once

#include "qsdn/types.hpp"

#include <cstddef>
#include <deque>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

namespace qsdn {

enum class KeyPurpose { OtpData, SessionKeyWrap };

struct ConsumptionRecord {
    SimTime time = 0.0;
    ChannelId channel{};
    std::size_t bytes = 0;
    KeyPurpose purpose = KeyPurpose::OtpData;
};

struct InsufficientKey : std::runtime_error {
    explicit InsufficientKey(std::uint64_t available)
        : std::runtime_error("insufficient key material, " + std::to_string(available) +
                             " bits available"),
          available_bits(available) {}
    std::uint64_t available_bits;
};

struct InvalidHex : std::runtime_error {
    using std::runtime_error::runtime_error;
};

Bytes decode_hex(std::string_view hex); // throws InvalidHex; empty input rejected

// Per-channel quantum key pool. FIFO across blocks, all-or-nothing takes,
// append-only consumption ledger. Thread safe per pool.
class KeyPool {
public:
    explicit KeyPool(ChannelId channel) : channel_(channel) {}
    KeyPool(const KeyPool&) = delete;
    KeyPool& operator=(const KeyPool&) = delete;

    std::size_t push_block(Bytes block);                 // returns bits added
    std::size_t push_key_hex(std::string_view hex);      // throws InvalidHex

    // Returns exactly n_bytes in FIFO order or throws InsufficientKey with the
    // pool left bit-identical.
    Bytes take_material(std::size_t n_bytes, KeyPurpose purpose, SimTime now = 0.0);

    std::uint64_t available_bits() const;
    std::uint64_t consumed_bits_total() const;
    std::uint64_t pushed_bits_total() const;

    ChannelId channel() const { return channel_; }
    std::vector<ConsumptionRecord> ledger() const;
    std::string export_ledger() const; // one record per line

private:
    ChannelId channel_;
    std::deque<Bytes> blocks_;
    std::size_t front_offset_ = 0; // consumed bytes of blocks_.front()
    std::uint64_t available_bits_ = 0;
    std::uint64_t consumed_bits_total_ = 0;
    std::uint64_t pushed_bits_total_ = 0;
    std::vector<ConsumptionRecord> ledger_;
    mutable std::mutex mutex_;
};

} // namespace qsdn
