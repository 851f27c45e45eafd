#include "qsdn/keystore.hpp"

#include <sstream>

namespace qsdn {

namespace {

int hex_digit(char c) {
    if (c >= '0' && c <= '9')
        return c - '0';
    if (c >= 'a' && c <= 'f')
        return c - 'a' + 10;
    if (c >= 'A' && c <= 'F')
        return c - 'A' + 10;
    return -1;
}

const char* purpose_name(KeyPurpose p) {
    return p == KeyPurpose::OtpData ? "otp_data" : "session_key_wrap";
}

} // namespace

Bytes decode_hex(std::string_view hex) {
    if (hex.empty())
        throw InvalidHex("empty hex key rejected");
    if (hex.size() % 2 != 0)
        throw InvalidHex("odd-length hex string");
    Bytes out;
    out.reserve(hex.size() / 2);
    for (std::size_t i = 0; i < hex.size(); i += 2) {
        int hi = hex_digit(hex[i]);
        int lo = hex_digit(hex[i + 1]);
        if (hi < 0 || lo < 0)
            throw InvalidHex("invalid hex digit");
        out.push_back(static_cast<std::uint8_t>(hi << 4 | lo));
    }
    return out;
}

std::size_t KeyPool::push_block(Bytes block) {
    if (block.empty())
        throw InvalidHex("empty key block rejected");
    std::lock_guard lock(mutex_);
    const std::size_t bits = block.size() * 8;
    blocks_.push_back(std::move(block));
    available_bits_ += bits;
    pushed_bits_total_ += bits;
    return bits;
}

std::size_t KeyPool::push_key_hex(std::string_view hex) {
    return push_block(decode_hex(hex));
}

Bytes KeyPool::take_material(std::size_t n_bytes, KeyPurpose purpose, SimTime now) {
    if (n_bytes < 1)
        throw InvalidHex("take_material requires n_bytes >= 1");
    std::lock_guard lock(mutex_);
    if (available_bits_ < static_cast<std::uint64_t>(n_bytes) * 8)
        throw InsufficientKey(available_bits_);
    Bytes out;
    out.reserve(n_bytes);
    while (out.size() < n_bytes) {
        Bytes& front = blocks_.front();
        const std::size_t want = n_bytes - out.size();
        const std::size_t have = front.size() - front_offset_;
        const std::size_t n = std::min(want, have);
        out.insert(out.end(), front.begin() + static_cast<std::ptrdiff_t>(front_offset_),
                   front.begin() + static_cast<std::ptrdiff_t>(front_offset_ + n));
        front_offset_ += n;
        if (front_offset_ == front.size()) {
            blocks_.pop_front();
            front_offset_ = 0;
        }
    }
    available_bits_ -= n_bytes * 8;
    consumed_bits_total_ += n_bytes * 8;
    ledger_.push_back({now, channel_, n_bytes, purpose});
    return out;
}

std::uint64_t KeyPool::available_bits() const {
    std::lock_guard lock(mutex_);
    return available_bits_;
}

std::uint64_t KeyPool::consumed_bits_total() const {
    std::lock_guard lock(mutex_);
    return consumed_bits_total_;
}

std::uint64_t KeyPool::pushed_bits_total() const {
    std::lock_guard lock(mutex_);
    return pushed_bits_total_;
}

std::vector<ConsumptionRecord> KeyPool::ledger() const {
    std::lock_guard lock(mutex_);
    return ledger_;
}

std::string KeyPool::export_ledger() const {
    std::lock_guard lock(mutex_);
    std::ostringstream out;
    for (const auto& rec : ledger_)
        out << rec.time << ' ' << rec.channel << ' ' << rec.bytes << ' '
            << purpose_name(rec.purpose) << '\n';
    return out.str();
}

} // namespace qsdn
