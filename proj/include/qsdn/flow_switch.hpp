#pragma once

#include "qsdn/types.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace qsdn {

// --- flow table -----------------------------------------------------------

// dotted-quad to host-order u32; throws ConfigError on malformed input
std::uint32_t parse_ipv4(const std::string& address);

inline constexpr std::uint16_t kAnyChannel = 0xFFFF;

struct FlowMatch {
    std::uint32_t dst_addr = 0;
    std::uint16_t dst_port = 0;
    std::uint16_t channel = kAnyChannel; // kAnyChannel matches every channel

    bool operator==(const FlowMatch&) const = default;
};

struct ForwardTarget {
    std::uint32_t addr = 0;
    std::uint16_t port = 0;

    bool operator==(const ForwardTarget&) const = default;
};

struct FlowAction {
    enum class Type : std::uint8_t { Drop = 0, Forward = 1 };
    Type type = Type::Drop;
    ForwardTarget target{};

    bool operator==(const FlowAction&) const = default;
};

struct FlowRule {
    std::uint64_t cookie = 0;
    std::uint16_t priority = 0;
    FlowMatch match{};
    FlowAction action{};
    std::uint64_t installed_seq = 0; // assigned by the table, tie-breaker
    std::uint64_t packets = 0;       // saturating counters
    std::uint64_t bytes = 0;
};

struct PacketMeta {
    std::uint32_t dst_addr = 0;
    std::uint16_t dst_port = 0;
    std::uint16_t channel = 0;
};

struct DuplicateCookie : std::runtime_error {
    DuplicateCookie() : std::runtime_error("duplicate flow cookie") {}
};

struct UnknownCookie : std::runtime_error {
    UnknownCookie() : std::runtime_error("unknown flow cookie") {}
};

// Highest priority wins; equal priorities break ties by installation order.
// No match means Drop.
class FlowTable {
public:
    void install(FlowRule rule);          // throws DuplicateCookie
    void remove(std::uint64_t cookie);    // throws UnknownCookie
    bool has_cookie(std::uint64_t cookie) const;

    const FlowRule* match(const PacketMeta& meta) const;
    FlowAction match_action(const PacketMeta& meta) const;

    // match + counter update for one forwarded packet
    FlowAction account(const PacketMeta& meta, std::size_t frame_bytes);

    const std::vector<FlowRule>& rules() const { return rules_; }
    std::size_t size() const { return rules_.size(); }

private:
    FlowRule* match_mutable(const PacketMeta& meta);

    std::vector<FlowRule> rules_;
    std::uint64_t next_seq_ = 0;
};

// --- control protocol -------------------------------------------------------
//
// Compact framed protocol with OpenFlow 1.3 flavored semantics (version byte
// 0x04), not wire-compatible OpenFlow.
//
// header: magic 0x4F 0x46 | version 0x04 | type | xid u32 BE | length u16 BE
// length covers header + body.

inline constexpr std::uint8_t kControlMagic0 = 0x4F;
inline constexpr std::uint8_t kControlMagic1 = 0x46;
inline constexpr std::uint8_t kControlVersion = 0x04;
inline constexpr std::size_t kControlHeaderSize = 10;

enum class MsgType : std::uint8_t {
    Hello = 0,
    Echo = 1,
    FlowMod = 2,
    PortStatus = 3,
    FlowStatsRequest = 4,
    FlowStatsReply = 5,
    Error = 6,
};

struct EchoBody {
    Bytes data;
    bool operator==(const EchoBody&) const = default;
};

struct FlowModBody {
    enum class Cmd : std::uint8_t { Add = 0, Delete = 1 };
    Cmd cmd = Cmd::Add;
    FlowRule rule{}; // for Delete only the cookie is meaningful

    bool operator==(const FlowModBody& o) const {
        return cmd == o.cmd && rule.cookie == o.rule.cookie && rule.priority == o.rule.priority &&
               rule.match == o.rule.match && rule.action == o.rule.action;
    }
};

struct PortStatusBody {
    std::uint16_t port = 0;
    std::uint8_t status = 0; // 0 down, 1 up
    bool operator==(const PortStatusBody&) const = default;
};

struct StatsEntry {
    std::uint64_t cookie = 0;
    std::uint64_t packets = 0;
    std::uint64_t bytes = 0;
    bool operator==(const StatsEntry&) const = default;
};

struct FlowStatsReplyBody {
    std::vector<StatsEntry> entries;
    bool operator==(const FlowStatsReplyBody&) const = default;
};

enum class ControlErrorCode : std::uint16_t {
    UnknownType = 1,
    BadRequest = 2,
    DuplicateCookie = 3,
    UnknownCookie = 4,
};

struct ErrorBody {
    std::uint16_t code = 0;
    bool operator==(const ErrorBody&) const = default;
};

using ControlBody =
    std::variant<std::monostate, EchoBody, FlowModBody, PortStatusBody, FlowStatsReplyBody,
                 ErrorBody>;

struct ControlMessage {
    MsgType type = MsgType::Hello;
    std::uint32_t xid = 0;
    ControlBody body;
};

Bytes encode_control(const ControlMessage& msg);

enum class ControlDecodeError {
    Ok,
    BadMagic,
    BadVersion,
    Truncated,
    LengthMismatch,
    UnknownType,
    BadBody,
};

struct ControlDecodeResult {
    ControlDecodeError error = ControlDecodeError::Ok;
    ControlMessage msg; // xid populated for UnknownType/BadBody when parseable
    bool ok() const { return error == ControlDecodeError::Ok; }
};

// Total on arbitrary bytes: never throws, never reads out of bounds.
ControlDecodeResult decode_control(std::span<const std::uint8_t> buffer);

// --- software switch ---------------------------------------------------------

// In-process switch: flow table plus control-message dispatch. Fail-static:
// losing the controller leaves the table untouched.
class SoftSwitch {
public:
    explicit SoftSwitch(NodeId node) : node_(node) {}

    NodeId node() const { return node_; }

    std::vector<ControlMessage> on_control(const ControlMessage& msg);
    std::vector<Bytes> on_control_bytes(std::span<const std::uint8_t> buffer);

    FlowAction forward(const PacketMeta& meta, std::size_t frame_bytes);

    const FlowTable& table() const { return table_; }

    void set_connected(bool connected) { connected_ = connected; }
    bool connected() const { return connected_; }

private:
    NodeId node_;
    FlowTable table_;
    bool connected_ = false;
};

} // namespace qsdn
