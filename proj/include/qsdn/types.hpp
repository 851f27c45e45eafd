#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace qsdn {

// Identifiers are small integers, unique within one fabric instance.
using NodeId = std::uint16_t;
using LinkId = std::uint16_t;
using ChannelId = std::uint16_t;

using Bytes = std::vector<std::uint8_t>;

// Seconds on the simulated clock.
using SimTime = double;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace qsdn
