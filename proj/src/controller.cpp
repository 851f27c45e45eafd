#include "qsdn/controller.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>

namespace qsdn {

const char* mode_name(EncryptionMode m) {
    switch (m) {
    case EncryptionMode::Transparent: return "Transparent";
    case EncryptionMode::ClassicalOnly: return "ClassicalOnly";
    case EncryptionMode::QuantumWrappedClassical: return "QuantumWrappedClassical";
    case EncryptionMode::DirectOtp: return "DirectOtp";
    }
    return "?";
}

const char* reason_name(RouteReason r) {
    switch (r) {
    case RouteReason::Direct: return "Direct";
    case RouteReason::LossOptimal: return "LossOptimal";
    case RouteReason::FailoverReserve: return "FailoverReserve";
    case RouteReason::NoQuantumPath: return "NoQuantumPath";
    }
    return "?";
}

EncryptionMode select_mode(const ChannelPolicy& policy, std::uint64_t pool_bits,
                           std::uint64_t traffic_bps, bool quantum_path_alive) {
    if (policy.explicit_codec) {
        switch (*policy.explicit_codec) {
        case CodecKind::Transparent: return EncryptionMode::Transparent;
        case CodecKind::Classical: return EncryptionMode::ClassicalOnly;
        case CodecKind::Quantum: return EncryptionMode::DirectOtp;
        }
    }
    EncryptionMode mode;
    if (pool_bits == 0)
        mode = EncryptionMode::ClassicalOnly;
    else if (!quantum_path_alive)
        // stored pool material can still wrap session keys while the quantum
        // path itself is unusable
        mode = policy.critical ? EncryptionMode::QuantumWrappedClassical
                               : EncryptionMode::ClassicalOnly;
    else if (traffic_bps <= policy.traffic_threshold_bps)
        mode = EncryptionMode::DirectOtp;
    else if (policy.qos == QosPreference::BandwidthFirst && !policy.critical)
        mode = EncryptionMode::ClassicalOnly;
    else
        mode = EncryptionMode::QuantumWrappedClassical;

    if (policy.critical && pool_bits > 0 && mode < EncryptionMode::QuantumWrappedClassical)
        mode = EncryptionMode::QuantumWrappedClassical;
    return mode;
}

namespace {

constexpr double kInfLoss = std::numeric_limits<double>::infinity();

struct PathResult {
    double loss = kInfLoss;
    std::vector<LinkId> path;
    bool found() const { return loss < kInfLoss; }
};

// Min-loss path from src to dst over Up links. Intermediate hops are allowed
// only through TrustedRelay nodes. Optionally ignores single-hop src-dst
// links, yielding the best alternative route.
PathResult min_loss_path(const Topology& topo, NodeId src, NodeId dst, bool exclude_direct) {
    std::map<NodeId, std::vector<const LinkState*>> adjacency;
    for (const auto& [id, link] : topo.links) {
        if (link.status != LinkStatus::Up)
            continue;
        if (exclude_direct && link.connects(src) && link.connects(dst))
            continue;
        adjacency[link.a].push_back(&link);
        adjacency[link.b].push_back(&link);
    }

    std::map<NodeId, double> dist;
    std::map<NodeId, std::pair<NodeId, LinkId>> prev;
    using Entry = std::pair<double, NodeId>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
    dist[src] = 0.0;
    queue.push({0.0, src});

    while (!queue.empty()) {
        auto [d, u] = queue.top();
        queue.pop();
        if (d > dist[u])
            continue;
        if (u == dst)
            break;
        // only the source and trusted relays may transit traffic
        if (u != src && topo.nodes.at(u) != NodeRole::TrustedRelay)
            continue;
        for (const LinkState* link : adjacency[u]) {
            const NodeId v = link->other(u);
            const double nd = d + link->total_loss_db();
            auto it = dist.find(v);
            if (it == dist.end() || nd < it->second) {
                dist[v] = nd;
                prev[v] = {u, link->id};
                queue.push({nd, v});
            }
        }
    }

    PathResult res;
    auto it = dist.find(dst);
    if (it == dist.end())
        return res;
    res.loss = it->second;
    NodeId at = dst;
    while (at != src) {
        auto [from, link] = prev.at(at);
        res.path.push_back(link);
        at = from;
    }
    std::reverse(res.path.begin(), res.path.end());
    return res;
}

CodecKind codec_for(EncryptionMode mode) {
    switch (mode) {
    case EncryptionMode::DirectOtp: return CodecKind::Quantum;
    case EncryptionMode::QuantumWrappedClassical:
    case EncryptionMode::ClassicalOnly: return CodecKind::Classical;
    case EncryptionMode::Transparent: return CodecKind::Transparent;
    }
    return CodecKind::Transparent;
}

} // namespace

RouteDecision compute_route(const Topology& topo, NodeId src, NodeId dst,
                            const ChannelPolicy& policy) {
    if (src == dst)
        throw ConfigError("route endpoints must differ");
    if (!topo.has_node(src) || !topo.has_node(dst))
        throw ConfigError("route endpoint is not a known node");

    RouteDecision decision;
    decision.channel = policy.channel;

    const LinkState* best_direct = nullptr;
    bool any_direct_unavailable = false;
    for (const auto& [id, link] : topo.links) {
        if (!(link.connects(src) && link.connects(dst)))
            continue;
        if (link.status != LinkStatus::Up) {
            any_direct_unavailable = true;
            continue;
        }
        if (best_direct == nullptr || link.total_loss_db() < best_direct->total_loss_db())
            best_direct = &link;
    }

    const PathResult alt = min_loss_path(topo, src, dst, /*exclude_direct=*/true);

    const bool prefer_alt =
        best_direct != nullptr && alt.found() &&
        best_direct->total_loss_db() - alt.loss > policy.direct_preference_margin_db;

    if (best_direct != nullptr && !prefer_alt) {
        decision.path = {best_direct->id};
        decision.loss_db = best_direct->total_loss_db();
        decision.reason =
            any_direct_unavailable ? RouteReason::FailoverReserve : RouteReason::Direct;
        return decision;
    }
    if (alt.found()) {
        decision.path = alt.path;
        decision.loss_db = alt.loss;
        decision.reason = RouteReason::LossOptimal;
        NodeId at = src;
        for (LinkId id : alt.path) {
            at = topo.link(id).other(at);
            if (at != dst)
                decision.via_trusted.push_back(at);
        }
        return decision;
    }
    decision.reason = RouteReason::NoQuantumPath;
    return decision;
}

// --- Controller ------------------------------------------------------------

Controller::Controller(Topology* topo, ControllerConfig cfg) : topo_(topo), cfg_(std::move(cfg)) {
    for (const auto& [id, link] : topo_->links)
        last_reroute_loss_[id] = link.total_loss_db();
}

void Controller::register_entrance(NodeId node, EntrancePoint point) {
    entrances_[{node, point.kind, point.direction}] = std::move(point);
}

const EntrancePoint* Controller::entrance(NodeId node, CodecKind kind, CodecDirection dir) const {
    auto it = entrances_.find({node, kind, dir});
    return it == entrances_.end() ? nullptr : &it->second;
}

void Controller::add_channel(ChannelSetup setup) {
    if (channels_.count(setup.id))
        throw ConfigError("duplicate channel id " + std::to_string(setup.id));
    if (setup.segments.empty())
        throw ConfigError("channel needs at least one segment");
    ChannelRuntime rt;
    rt.setup = std::move(setup);
    channels_.emplace(rt.setup.id, std::move(rt));
}

bool Controller::has_channel(ChannelId id) const { return channels_.count(id) != 0; }
bool Controller::has_pair(ChannelId pair_id) const { return pairs_.count(pair_id) != 0; }

void Controller::register_pair(QcPair* pair, MuPolicy policy) {
    pairs_[pair->id] = PairRuntime{pair, std::move(policy)};
}

Controller::ChannelRuntime& Controller::channel(ChannelId id) {
    auto it = channels_.find(id);
    if (it == channels_.end())
        throw ConfigError("unknown channel " + std::to_string(id));
    return it->second;
}

const Controller::ChannelRuntime& Controller::channel(ChannelId id) const {
    auto it = channels_.find(id);
    if (it == channels_.end())
        throw ConfigError("unknown channel " + std::to_string(id));
    return it->second;
}

bool Controller::quantum_path_alive(const ChannelRuntime& ch) const {
    if (!ch.quantum_eligible)
        return false;
    const RouteDecision route =
        compute_route(*topo_, ch.setup.src, ch.setup.dst, ch.setup.policy);
    return route.reason != RouteReason::NoQuantumPath;
}

std::uint64_t Controller::channel_pool_bits(const ChannelRuntime& ch) const {
    std::uint64_t bits = std::numeric_limits<std::uint64_t>::max();
    for (const auto& seg : ch.setup.segments) {
        if (seg.tx_pool)
            bits = std::min(bits, seg.tx_pool->available_bits());
        if (seg.rx_pool)
            bits = std::min(bits, seg.rx_pool->available_bits());
    }
    return bits == std::numeric_limits<std::uint64_t>::max() ? 0 : bits;
}

std::uint64_t Controller::cookie_for(ChannelId channel, NodeId node) const {
    return static_cast<std::uint64_t>(channel) << 16 | node;
}

void Controller::emit_flow_mods(ChannelRuntime& ch, CommandBatch& batch) {
    const CodecKind kind = codec_for(ch.mode);
    // simultaneous redirection at both sides, one batch
    for (const NodeId node : {ch.setup.src, ch.setup.dst}) {
        const CodecDirection dir =
            node == ch.setup.src ? CodecDirection::Encoder : CodecDirection::Decoder;
        const EntrancePoint* ep = entrance(node, kind, dir);
        if (ep == nullptr)
            throw ConfigError("no entrance point for codec at node " + std::to_string(node));
        const std::uint64_t cookie = cookie_for(ch.setup.id, node);
        if (ch.rules_installed) {
            FlowModCommand del;
            del.target_switch = node;
            del.cmd = FlowModBody::Cmd::Delete;
            del.rule.cookie = cookie;
            batch.commands.push_back(del);
        }
        FlowModCommand add;
        add.target_switch = node;
        add.cmd = FlowModBody::Cmd::Add;
        add.rule.cookie = cookie;
        add.rule.priority = 100;
        add.rule.match = {ch.setup.app_dst_addr, ch.setup.app_dst_port, ch.setup.id};
        add.rule.action.type = FlowAction::Type::Forward;
        add.rule.action.target = {parse_ipv4(ep->address), ep->port};
        batch.commands.push_back(add);
    }
    ch.rules_installed = true;
}

void Controller::log_decision(SimTime now, const std::string& text) {
    std::ostringstream line;
    line << "t=" << now << " v=" << map_version_ << ' ' << text;
    decision_log_.push_back(line.str());
}

void Controller::evaluate_into(ChannelRuntime& ch, SimTime now, const char* trigger,
                               CommandBatch& batch) {
    RouteDecision route = compute_route(*topo_, ch.setup.src, ch.setup.dst, ch.setup.policy);
    route.channel = ch.setup.id;
    const bool alive = ch.quantum_eligible && route.reason != RouteReason::NoQuantumPath;
    const std::uint64_t pool = channel_pool_bits(ch);
    EncryptionMode proposed = select_mode(ch.setup.policy, pool, ch.traffic_bps, alive);

    // hysteresis: after a starvation downgrade the pool must refill past the
    // watermark before a quantum mode is re-entered
    if (proposed > ch.mode && proposed >= EncryptionMode::QuantumWrappedClassical &&
        ch.starvation_downgrade && pool < cfg_.reentry_watermark_bits)
        proposed = ch.mode;

    const bool route_changed =
        route.path != ch.route.path || route.reason != ch.route.reason;
    const bool mode_changed = proposed != ch.mode;
    if (!route_changed && !mode_changed && ch.rules_installed)
        return; // quiescent, no commands

    if (mode_changed) {
        mode_changes_.push_back({now, ch.setup.id, ch.mode, proposed, trigger});
        if (proposed > ch.mode)
            ch.starvation_downgrade = false;
        std::ostringstream text;
        text << "channel " << ch.setup.id << " mode " << mode_name(ch.mode) << " -> "
             << mode_name(proposed) << " (" << trigger << ")";
        log_decision(now, text.str());
    }
    ch.mode = proposed;

    if (route_changed) {
        std::ostringstream text;
        text << "channel " << ch.setup.id << " route " << reason_name(route.reason)
             << " loss=" << route.loss_db << " dB via";
        for (LinkId id : route.path)
            text << ' ' << id;
        log_decision(now, text.str());
        // single-hop reroute moves the quantum signal to the new fiber
        if (route.path.size() == 1 && ch.setup.segments.size() == 1) {
            QcPair* pair = ch.setup.segments.front().pair;
            if (pair != nullptr && pair->link != route.path.front())
                batch.commands.push_back(
                    SetPairLinkCommand{pair->id, route.path.front()});
        }
    }
    ch.route = std::move(route);
    emit_flow_mods(ch, batch);
}

CommandBatch Controller::on_qchannel_status(ChannelId channel_id, int status, SimTime now) {
    if (status != 0 && status != 1)
        throw ConfigError("qchannel status must be 0 or 1");
    CommandBatch batch{++map_version_, {}};
    if (!has_channel(channel_id)) {
        log_decision(now, "qchannel status for unknown channel " + std::to_string(channel_id));
        return batch;
    }
    ChannelRuntime& ch = channel(channel_id);
    const bool eligible = status == 1;
    if (ch.quantum_eligible == eligible) {
        log_decision(now, "qchannel status repeat ignored, channel " + std::to_string(channel_id));
        return batch;
    }
    ch.quantum_eligible = eligible;
    evaluate_into(ch, now, eligible ? "qchannel-status-1" : "qchannel-status-0", batch);
    return batch;
}

CommandBatch Controller::on_qkey(ChannelId channel_id, std::string_view hex, SimTime now) {
    CommandBatch batch{++map_version_, {}};
    ChannelRuntime& ch = channel(channel_id); // throws on unknown channel
    const Bytes key = decode_hex(hex);        // throws InvalidHex, no state change
    ChannelSegment& seg = ch.setup.segments.front();
    if (seg.tx_pool == nullptr || seg.rx_pool == nullptr)
        throw ConfigError("channel has no key pools");
    seg.tx_pool->push_block(key);
    seg.rx_pool->push_block(key);
    log_decision(now, "qkey push channel " + std::to_string(channel_id) + " +" +
                          std::to_string(key.size() * 8) + " bits");
    evaluate_into(ch, now, "qkey", batch);
    return batch;
}

CommandBatch Controller::on_loss_report(const LossReport& report, SimTime now) {
    CommandBatch batch{++map_version_, {}};
    if (!topo_->has_link(report.link)) {
        log_decision(now, "loss report for unknown link " + std::to_string(report.link));
        return batch;
    }
    if (!report.unreachable) {
        for (auto& [pair_id, rt] : pairs_) {
            if (rt.pair->link != report.link)
                continue;
            const double old_mu = rt.pair->mu;
            const double new_mu = adjust_mean_photon(*rt.pair, report, rt.mu_policy, cfg_.qkd);
            if (new_mu != old_mu)
                batch.commands.push_back(SetMuCommand{pair_id, new_mu});
        }
    }
    auto [it, inserted] = last_reroute_loss_.try_emplace(
        report.link, topo_->link(report.link).base_loss_db);
    const bool jump = report.unreachable ||
                      std::fabs(report.measured_loss_db - it->second) >= cfg_.reroute_threshold_db;
    if (jump) {
        if (!report.unreachable)
            it->second = report.measured_loss_db;
        for (auto& [id, ch] : channels_)
            evaluate_into(ch, now, "loss-report", batch);
    }
    return batch;
}

CommandBatch Controller::on_channel_dead(ChannelId channel_id, SimTime now) {
    CommandBatch batch{++map_version_, {}};
    if (!has_channel(channel_id)) {
        log_decision(now, "channel-dead for unknown channel " + std::to_string(channel_id));
        return batch;
    }
    ChannelRuntime& ch = channel(channel_id);
    for (const auto& seg : ch.setup.segments) {
        if (seg.pair == nullptr)
            continue;
        LinkState& link = topo_->link(seg.pair->link);
        if (link.status == LinkStatus::Up)
            link.status = LinkStatus::Degraded;
    }
    ch.quantum_eligible = false;
    log_decision(now, "channel " + std::to_string(channel_id) + " reported dead");
    evaluate_into(ch, now, "channel-dead", batch);
    return batch;
}

CommandBatch Controller::on_traffic_sample(ChannelId channel_id, std::uint64_t bytes,
                                           SimTime now) {
    CommandBatch batch{++map_version_, {}};
    if (!has_channel(channel_id))
        return batch;
    ChannelRuntime& ch = channel(channel_id);
    ch.traffic_samples.emplace_back(now, bytes);
    while (!ch.traffic_samples.empty() &&
           ch.traffic_samples.front().first < now - cfg_.traffic_window_s)
        ch.traffic_samples.pop_front();
    std::uint64_t total = 0;
    for (const auto& [t, b] : ch.traffic_samples)
        total += b;
    const double window =
        std::min(cfg_.traffic_window_s, std::max(now - ch.traffic_samples.front().first, 1e-9));
    ch.traffic_bps = ch.traffic_samples.size() < 2
                         ? 0
                         : static_cast<std::uint64_t>(total * 8.0 / window);
    evaluate_into(ch, now, "traffic-sample", batch);
    return batch;
}

CommandBatch Controller::on_key_starvation(ChannelId channel_id, SimTime now) {
    CommandBatch batch{++map_version_, {}};
    if (!has_channel(channel_id))
        return batch;
    ChannelRuntime& ch = channel(channel_id);
    if (!ch.starvation_downgrade) {
        ch.starvation_downgrade = true;
        log_decision(now, "channel " + std::to_string(channel_id) + " key starvation");
    }
    evaluate_into(ch, now, "key-starvation", batch);
    return batch;
}

CommandBatch Controller::evaluate_channel(ChannelId channel_id, SimTime now) {
    CommandBatch batch{++map_version_, {}};
    evaluate_into(channel(channel_id), now, "evaluate", batch);
    return batch;
}

CommandBatch Controller::evaluate_all(SimTime now) {
    CommandBatch batch{++map_version_, {}};
    for (auto& [id, ch] : channels_)
        evaluate_into(ch, now, "evaluate", batch);
    return batch;
}

EncryptionMode Controller::mode(ChannelId id) const { return channel(id).mode; }
const RouteDecision& Controller::route(ChannelId id) const { return channel(id).route; }
std::uint64_t Controller::pool_bits(ChannelId id) const {
    return channel_pool_bits(channel(id));
}
std::uint64_t Controller::traffic_bps(ChannelId id) const { return channel(id).traffic_bps; }
bool Controller::quantum_eligible(ChannelId id) const { return channel(id).quantum_eligible; }

std::vector<ChannelId> Controller::channel_ids() const {
    std::vector<ChannelId> ids;
    ids.reserve(channels_.size());
    for (const auto& [id, ch] : channels_)
        ids.push_back(id);
    return ids;
}

RelayPlan Controller::plan_trusted_relay(ChannelId channel_id) const {
    const ChannelRuntime& ch = channel(channel_id);
    if (!ch.setup.relay)
        throw ConfigError("channel has no relay node configured");
    const NodeId relay = *ch.setup.relay;
    auto role = topo_->nodes.find(relay);
    if (role == topo_->nodes.end() || role->second != NodeRole::TrustedRelay)
        throw ConfigError("relay node is not a trusted relay");
    if (ch.setup.segments.size() != 2)
        throw ConfigError("trusted relay needs exactly two segments");

    const ChannelSegment& seg1 = ch.setup.segments[0];
    const ChannelSegment& seg2 = ch.setup.segments[1];
    // the relay holds seg1's receiver pool and seg2's transmitter pool
    if (seg1.rx_pool == nullptr || seg1.rx_pool->available_bits() == 0)
        throw ConfigError("relay lacks key material on segment 1");
    if (seg2.tx_pool == nullptr || seg2.tx_pool->available_bits() == 0)
        throw ConfigError("relay lacks key material on segment 2");

    RelayPlan plan;
    plan.channel = channel_id;
    plan.relay = relay;
    plan.mode =
        ch.setup.policy.key_relay_only ? RelayMode::KeyRelayOnly : RelayMode::DataRelay;
    plan.segment1_pair = seg1.pair_id;
    plan.segment2_pair = seg2.pair_id;
    return plan;
}

std::string Controller::render_map() const {
    std::ostringstream out;
    out << "map_version " << map_version_ << '\n';
    for (const auto& [id, role] : topo_->nodes)
        out << "node " << id << ' '
            << (role == NodeRole::TrustedRelay ? "trusted_relay" : "endpoint") << '\n';
    for (const auto& [id, link] : topo_->links) {
        out << "link " << id << ' ' << link.a << ' ' << link.b << " loss_db="
            << link.total_loss_db() << " status=";
        switch (link.status) {
        case LinkStatus::Up: out << "up"; break;
        case LinkStatus::Degraded: out << "degraded"; break;
        case LinkStatus::Down: out << "down"; break;
        }
        out << '\n';
    }
    for (const auto& [id, ch] : channels_) {
        out << "channel " << id << " src=" << ch.setup.src << " dst=" << ch.setup.dst
            << " mode=" << mode_name(ch.mode) << " route=" << reason_name(ch.route.reason)
            << " pool_bits=" << channel_pool_bits(ch) << " traffic_bps=" << ch.traffic_bps
            << '\n';
    }
    return out.str();
}

} // namespace qsdn
