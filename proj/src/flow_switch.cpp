#include "qsdn/flow_switch.hpp"

#include <algorithm>
#include <cctype>
#include <limits>

namespace qsdn {

std::uint32_t parse_ipv4(const std::string& address) {
    std::uint32_t out = 0;
    std::size_t pos = 0;
    for (int octet = 0; octet < 4; ++octet) {
        if (pos >= address.size() || !isdigit(static_cast<unsigned char>(address[pos])))
            throw ConfigError("malformed IPv4 address '" + address + "'");
        unsigned value = 0;
        while (pos < address.size() && isdigit(static_cast<unsigned char>(address[pos]))) {
            value = value * 10 + static_cast<unsigned>(address[pos] - '0');
            if (value > 255)
                throw ConfigError("malformed IPv4 address '" + address + "'");
            ++pos;
        }
        out = out << 8 | value;
        if (octet < 3) {
            if (pos >= address.size() || address[pos] != '.')
                throw ConfigError("malformed IPv4 address '" + address + "'");
            ++pos;
        }
    }
    if (pos != address.size())
        throw ConfigError("malformed IPv4 address '" + address + "'");
    return out;
}

namespace {

bool rule_matches(const FlowRule& rule, const PacketMeta& meta) {
    return rule.match.dst_addr == meta.dst_addr && rule.match.dst_port == meta.dst_port &&
           (rule.match.channel == kAnyChannel || rule.match.channel == meta.channel);
}

bool rule_wins(const FlowRule& candidate, const FlowRule& incumbent) {
    if (candidate.priority != incumbent.priority)
        return candidate.priority > incumbent.priority;
    return candidate.installed_seq < incumbent.installed_seq;
}

std::uint64_t saturating_add(std::uint64_t a, std::uint64_t b) {
    const auto max = std::numeric_limits<std::uint64_t>::max();
    return a > max - b ? max : a + b;
}

} // namespace

void FlowTable::install(FlowRule rule) {
    if (has_cookie(rule.cookie))
        throw DuplicateCookie();
    rule.installed_seq = next_seq_++;
    rule.packets = 0;
    rule.bytes = 0;
    rules_.push_back(std::move(rule));
}

void FlowTable::remove(std::uint64_t cookie) {
    auto it = std::find_if(rules_.begin(), rules_.end(),
                           [&](const FlowRule& r) { return r.cookie == cookie; });
    if (it == rules_.end())
        throw UnknownCookie();
    rules_.erase(it);
}

bool FlowTable::has_cookie(std::uint64_t cookie) const {
    return std::any_of(rules_.begin(), rules_.end(),
                       [&](const FlowRule& r) { return r.cookie == cookie; });
}

FlowRule* FlowTable::match_mutable(const PacketMeta& meta) {
    FlowRule* best = nullptr;
    for (auto& rule : rules_) {
        if (!rule_matches(rule, meta))
            continue;
        if (best == nullptr || rule_wins(rule, *best))
            best = &rule;
    }
    return best;
}

const FlowRule* FlowTable::match(const PacketMeta& meta) const {
    return const_cast<FlowTable*>(this)->match_mutable(meta);
}

FlowAction FlowTable::match_action(const PacketMeta& meta) const {
    const FlowRule* rule = match(meta);
    return rule ? rule->action : FlowAction{}; // default-deny
}

FlowAction FlowTable::account(const PacketMeta& meta, std::size_t frame_bytes) {
    FlowRule* rule = match_mutable(meta);
    if (rule == nullptr)
        return FlowAction{};
    rule->packets = saturating_add(rule->packets, 1);
    rule->bytes = saturating_add(rule->bytes, frame_bytes);
    return rule->action;
}

// --- control wire format ----------------------------------------------------

namespace {

void put_u16(Bytes& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void put_u32(Bytes& out, std::uint32_t v) {
    put_u16(out, static_cast<std::uint16_t>(v >> 16));
    put_u16(out, static_cast<std::uint16_t>(v));
}

void put_u64(Bytes& out, std::uint64_t v) {
    put_u32(out, static_cast<std::uint32_t>(v >> 32));
    put_u32(out, static_cast<std::uint32_t>(v));
}

struct Reader {
    std::span<const std::uint8_t> data;
    std::size_t pos = 0;

    bool left(std::size_t n) const { return data.size() - pos >= n; }
    std::uint8_t u8() { return data[pos++]; }
    std::uint16_t u16() {
        std::uint16_t v = static_cast<std::uint16_t>(data[pos] << 8 | data[pos + 1]);
        pos += 2;
        return v;
    }
    std::uint32_t u32() {
        std::uint32_t v = static_cast<std::uint32_t>(u16()) << 16;
        return v | u16();
    }
    std::uint64_t u64() {
        std::uint64_t v = static_cast<std::uint64_t>(u32()) << 32;
        return v | u32();
    }
};

// cmd(1) cookie(8) priority(2) match: addr(4) port(2) channel(2)
// action: type(1) fwd_addr(4) fwd_port(2)
constexpr std::size_t kFlowModBodySize = 26;

void encode_flow_mod(Bytes& out, const FlowModBody& body) {
    out.push_back(static_cast<std::uint8_t>(body.cmd));
    put_u64(out, body.rule.cookie);
    put_u16(out, body.rule.priority);
    put_u32(out, body.rule.match.dst_addr);
    put_u16(out, body.rule.match.dst_port);
    put_u16(out, body.rule.match.channel);
    out.push_back(static_cast<std::uint8_t>(body.rule.action.type));
    put_u32(out, body.rule.action.target.addr);
    put_u16(out, body.rule.action.target.port);
}

bool decode_flow_mod(Reader& r, FlowModBody& body) {
    if (!r.left(kFlowModBodySize))
        return false;
    const std::uint8_t cmd = r.u8();
    if (cmd > 1)
        return false;
    body.cmd = static_cast<FlowModBody::Cmd>(cmd);
    body.rule.cookie = r.u64();
    body.rule.priority = r.u16();
    body.rule.match.dst_addr = r.u32();
    body.rule.match.dst_port = r.u16();
    body.rule.match.channel = r.u16();
    const std::uint8_t action = r.u8();
    if (action > 1)
        return false;
    body.rule.action.type = static_cast<FlowAction::Type>(action);
    body.rule.action.target.addr = r.u32();
    body.rule.action.target.port = r.u16();
    return true;
}

} // namespace

Bytes encode_control(const ControlMessage& msg) {
    Bytes out;
    out.push_back(kControlMagic0);
    out.push_back(kControlMagic1);
    out.push_back(kControlVersion);
    out.push_back(static_cast<std::uint8_t>(msg.type));
    put_u32(out, msg.xid);
    put_u16(out, 0); // length patched below

    switch (msg.type) {
    case MsgType::Hello:
    case MsgType::FlowStatsRequest:
        break;
    case MsgType::Echo: {
        const auto& body = std::get<EchoBody>(msg.body);
        out.insert(out.end(), body.data.begin(), body.data.end());
        break;
    }
    case MsgType::FlowMod:
        encode_flow_mod(out, std::get<FlowModBody>(msg.body));
        break;
    case MsgType::PortStatus: {
        const auto& body = std::get<PortStatusBody>(msg.body);
        put_u16(out, body.port);
        out.push_back(body.status);
        break;
    }
    case MsgType::FlowStatsReply: {
        const auto& body = std::get<FlowStatsReplyBody>(msg.body);
        put_u16(out, static_cast<std::uint16_t>(body.entries.size()));
        for (const auto& e : body.entries) {
            put_u64(out, e.cookie);
            put_u64(out, e.packets);
            put_u64(out, e.bytes);
        }
        break;
    }
    case MsgType::Error:
        put_u16(out, std::get<ErrorBody>(msg.body).code);
        break;
    }

    if (out.size() > 0xFFFF)
        throw ConfigError("control message too large");
    out[8] = static_cast<std::uint8_t>(out.size() >> 8);
    out[9] = static_cast<std::uint8_t>(out.size());
    return out;
}

ControlDecodeResult decode_control(std::span<const std::uint8_t> buffer) {
    ControlDecodeResult res;
    if (buffer.size() < kControlHeaderSize) {
        res.error = ControlDecodeError::Truncated;
        return res;
    }
    if (buffer[0] != kControlMagic0 || buffer[1] != kControlMagic1) {
        res.error = ControlDecodeError::BadMagic;
        return res;
    }
    if (buffer[2] != kControlVersion) {
        res.error = ControlDecodeError::BadVersion;
        return res;
    }
    Reader r{buffer, 3};
    const std::uint8_t type = r.u8();
    res.msg.xid = r.u32();
    const std::uint16_t length = r.u16();
    if (length < kControlHeaderSize || buffer.size() < length) {
        res.error = ControlDecodeError::Truncated;
        return res;
    }
    if (buffer.size() > length) {
        res.error = ControlDecodeError::LengthMismatch;
        return res;
    }
    if (type > static_cast<std::uint8_t>(MsgType::Error)) {
        res.error = ControlDecodeError::UnknownType;
        return res;
    }
    res.msg.type = static_cast<MsgType>(type);
    const std::size_t body_size = length - kControlHeaderSize;

    switch (res.msg.type) {
    case MsgType::Hello:
    case MsgType::FlowStatsRequest:
        if (body_size != 0)
            res.error = ControlDecodeError::BadBody;
        break;
    case MsgType::Echo: {
        EchoBody body;
        body.data.assign(buffer.begin() + kControlHeaderSize, buffer.end());
        res.msg.body = std::move(body);
        break;
    }
    case MsgType::FlowMod: {
        FlowModBody body;
        if (body_size != kFlowModBodySize || !decode_flow_mod(r, body)) {
            res.error = ControlDecodeError::BadBody;
            break;
        }
        res.msg.body = body;
        break;
    }
    case MsgType::PortStatus: {
        if (body_size != 3) {
            res.error = ControlDecodeError::BadBody;
            break;
        }
        PortStatusBody body;
        body.port = r.u16();
        body.status = r.u8();
        res.msg.body = body;
        break;
    }
    case MsgType::FlowStatsReply: {
        if (body_size < 2) {
            res.error = ControlDecodeError::BadBody;
            break;
        }
        const std::uint16_t count = r.u16();
        if (body_size != 2 + static_cast<std::size_t>(count) * 24) {
            res.error = ControlDecodeError::BadBody;
            break;
        }
        FlowStatsReplyBody body;
        body.entries.reserve(count);
        for (std::uint16_t i = 0; i < count; ++i) {
            StatsEntry e;
            e.cookie = r.u64();
            e.packets = r.u64();
            e.bytes = r.u64();
            body.entries.push_back(e);
        }
        res.msg.body = std::move(body);
        break;
    }
    case MsgType::Error: {
        if (body_size != 2) {
            res.error = ControlDecodeError::BadBody;
            break;
        }
        res.msg.body = ErrorBody{r.u16()};
        break;
    }
    }
    return res;
}

// --- SoftSwitch ---------------------------------------------------------------

std::vector<ControlMessage> SoftSwitch::on_control(const ControlMessage& msg) {
    std::vector<ControlMessage> replies;
    auto error_reply = [&](ControlErrorCode code) {
        ControlMessage err;
        err.type = MsgType::Error;
        err.xid = msg.xid;
        err.body = ErrorBody{static_cast<std::uint16_t>(code)};
        replies.push_back(std::move(err));
    };

    switch (msg.type) {
    case MsgType::Hello: {
        ControlMessage hello;
        hello.type = MsgType::Hello;
        hello.xid = msg.xid;
        replies.push_back(std::move(hello));
        break;
    }
    case MsgType::Echo: {
        ControlMessage echo;
        echo.type = MsgType::Echo;
        echo.xid = msg.xid;
        echo.body = msg.body;
        replies.push_back(std::move(echo));
        break;
    }
    case MsgType::FlowMod: {
        const auto& body = std::get<FlowModBody>(msg.body);
        try {
            if (body.cmd == FlowModBody::Cmd::Add)
                table_.install(body.rule);
            else
                table_.remove(body.rule.cookie);
        } catch (const DuplicateCookie&) {
            error_reply(ControlErrorCode::DuplicateCookie);
        } catch (const UnknownCookie&) {
            error_reply(ControlErrorCode::UnknownCookie);
        }
        break;
    }
    case MsgType::FlowStatsRequest: {
        ControlMessage reply;
        reply.type = MsgType::FlowStatsReply;
        reply.xid = msg.xid;
        FlowStatsReplyBody body;
        for (const auto& rule : table_.rules())
            body.entries.push_back({rule.cookie, rule.packets, rule.bytes});
        reply.body = std::move(body);
        replies.push_back(std::move(reply));
        break;
    }
    case MsgType::PortStatus:
    case MsgType::FlowStatsReply:
    case MsgType::Error:
        // switch-to-controller messages; receiving one here is a peer bug
        error_reply(ControlErrorCode::BadRequest);
        break;
    }
    return replies;
}

std::vector<Bytes> SoftSwitch::on_control_bytes(std::span<const std::uint8_t> buffer) {
    std::vector<Bytes> replies;
    const ControlDecodeResult decoded = decode_control(buffer);
    if (!decoded.ok()) {
        // unknown type or malformed body: ERROR reply, connection preserved
        ControlMessage err;
        err.type = MsgType::Error;
        err.xid = decoded.msg.xid;
        err.body = ErrorBody{static_cast<std::uint16_t>(ControlErrorCode::UnknownType)};
        replies.push_back(encode_control(err));
        return replies;
    }
    for (const auto& reply : on_control(decoded.msg))
        replies.push_back(encode_control(reply));
    return replies;
}

FlowAction SoftSwitch::forward(const PacketMeta& meta, std::size_t frame_bytes) {
    return table_.account(meta, frame_bytes);
}

} // namespace qsdn
