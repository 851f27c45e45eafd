#include "qsdn/control_api.hpp"
#include "qsdn/scenario.hpp"

#include <httplib.h>

#include <algorithm>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

namespace qsdn {

namespace {

std::string node_addr(NodeId node) { return "10.0.1." + std::to_string(node); }
std::string app_addr(NodeId node) { return "10.0.2." + std::to_string(node); }

std::uint16_t entrance_port(CodecKind kind, CodecDirection dir) {
    return static_cast<std::uint16_t>(7000 + static_cast<int>(kind) * 2 +
                                      (dir == CodecDirection::Decoder ? 1 : 0));
}

std::string to_hex(std::span<const std::uint8_t> data) {
    static const char digits[] = "0123456789ABCDEF";
    std::string out;
    out.reserve(data.size() * 2);
    for (std::uint8_t b : data) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xF]);
    }
    return out;
}

struct PoolMirror {
    std::unique_ptr<KeyPool> tx;
    std::unique_ptr<KeyPool> rx;
};

struct PairSim {
    QcPair pair;
    bool dead_notified = false;
    std::vector<ChannelId> channels; // channels fed by this pair
};

struct ChannelSim {
    ChannelConfig cfg;
    std::uint64_t offered_bps = 0;
    double frames_due = 0.0;
    std::uint32_t seq = 0;
    std::optional<ClassicalSession> enc_session;
    std::optional<ClassicalSession> dec_session;
    std::unique_ptr<KeyPool> e2e_tx; // key-relay-only end-to-end pools
    std::unique_ptr<KeyPool> e2e_rx;
};

class SimRun {
public:
    SimRun(const Scenario& sc, bool live) : sc_(sc), live_(live), rng_(sc.seed) {
        topo_ = build_topology(sc.topology);
        controller_ = std::make_unique<Controller>(&topo_, sc.controller);
        build_fabric();
        if (live_)
            start_api();
    }

    ~SimRun() {
        if (api_)
            api_->stop();
    }

    RunReport run() {
        report_.scenario = sc_.name;
        report_.seed = sc_.seed;
        report_.live = live_;
        report_.duration_s = sc_.duration_s;

        const auto ticks = static_cast<std::uint64_t>(sc_.duration_s / sc_.tick_s + 0.5);
        std::size_t next_event = 0;
        for (std::uint64_t k = 0; k < ticks; ++k) {
            now_ = static_cast<double>(k) * sc_.tick_s;
            while (next_event < sc_.timeline.size() && sc_.timeline[next_event].time <= now_)
                apply_timeline(sc_.timeline[next_event++]);
            generate_keys();
            apply(controller_->evaluate_all(now_));
            send_traffic();
        }
        finalize();
        return std::move(report_);
    }

private:
    void build_fabric() {
        for (const PairConfig& pc : sc_.pairs) {
            PairSim ps;
            ps.pair.id = pc.id;
            ps.pair.alice = pc.alice;
            ps.pair.bob = pc.bob;
            ps.pair.link = pc.link;
            ps.pair.mu = pc.mu;
            ps.pair.eavesdropper_present = pc.eavesdropper;
            pairs_.emplace(pc.id, std::move(ps));
            pools_.emplace(pc.id, PoolMirror{std::make_unique<KeyPool>(pc.id),
                                             std::make_unique<KeyPool>(pc.id)});
            MuPolicy mu_policy;
            if (auto it = sc_.mu_policies.find(pc.id); it != sc_.mu_policies.end())
                mu_policy = it->second;
            controller_->register_pair(&pairs_.at(pc.id).pair, std::move(mu_policy));
        }

        for (const ChannelConfig& cc : sc_.channels) {
            ChannelSim cs;
            cs.cfg = cc;
            cs.offered_bps = cc.offered_bps;

            ChannelSetup setup;
            setup.id = cc.id;
            setup.src = cc.src;
            setup.dst = cc.dst;
            setup.policy = cc.policy;
            setup.relay = cc.relay;
            setup.app_dst_addr = parse_ipv4(app_addr(cc.dst));
            setup.app_dst_port = static_cast<std::uint16_t>(9000 + cc.id);
            for (ChannelId pair_id : cc.pair_ids) {
                auto pit = pairs_.find(pair_id);
                if (pit == pairs_.end())
                    throw ConfigError("channel " + std::to_string(cc.id) +
                                      " references unknown pair " + std::to_string(pair_id));
                pit->second.channels.push_back(cc.id);
                PoolMirror& mirror = pools_.at(pair_id);
                setup.segments.push_back(
                    {pair_id, &pit->second.pair, mirror.tx.get(), mirror.rx.get()});
            }
            controller_->add_channel(std::move(setup));

            for (NodeId node : {cc.src, cc.dst}) {
                if (!switches_.count(node)) {
                    switches_.emplace(node, SoftSwitch(node));
                    switches_.at(node).set_connected(true);
                    register_entrances(node);
                }
            }
            if (cc.relay && cc.policy.key_relay_only) {
                cs.e2e_tx = std::make_unique<KeyPool>(cc.id);
                cs.e2e_rx = std::make_unique<KeyPool>(cc.id);
            }
            channels_.emplace(cc.id, std::move(cs));
        }
    }

    void register_entrances(NodeId node) {
        for (CodecKind kind :
             {CodecKind::Transparent, CodecKind::Quantum, CodecKind::Classical}) {
            for (CodecDirection dir : {CodecDirection::Encoder, CodecDirection::Decoder}) {
                EntrancePoint ep;
                ep.address = node_addr(node);
                ep.port = entrance_port(kind, dir);
                ep.kind = kind;
                ep.direction = dir;
                controller_->register_entrance(node, ep);
                entrance_kinds_[{parse_ipv4(ep.address), ep.port}] = kind;
            }
        }
    }

    void start_api() {
        api_ = std::make_unique<ControlApi>(
            *controller_, [this](const CommandBatch& batch) { apply(batch); });
        api_->set_clock([this] { return now_; });
        api_port_ = api_->listen_any_port("127.0.0.1");
        client_ = std::make_unique<httplib::Client>("127.0.0.1", api_port_);
    }

    void apply(const CommandBatch& batch) {
        for (const Command& cmd : batch.commands) {
            if (const auto* fm = std::get_if<FlowModCommand>(&cmd)) {
                auto sw = switches_.find(fm->target_switch);
                if (sw == switches_.end())
                    throw ConfigError("flow mod for node without a switch");
                ControlMessage msg;
                msg.type = MsgType::FlowMod;
                msg.xid = next_xid_++;
                msg.body = FlowModBody{fm->cmd, fm->rule};
                for (const Bytes& reply : sw->second.on_control_bytes(encode_control(msg))) {
                    const auto decoded = decode_control(reply);
                    if (decoded.ok() && decoded.msg.type == MsgType::Error)
                        report_.check_failures.push_back("switch rejected flow mod");
                }
            } else if (const auto* sl = std::get_if<SetPairLinkCommand>(&cmd)) {
                pairs_.at(sl->pair).pair.link = sl->link;
            }
            // SetMuCommand: the controller already tuned the pair in place;
            // NoteCommand: audit only
        }
    }

    void dispatch_status(ChannelId channel, int status) {
        if (live_) {
            client_->Get("/qchannel/" + std::to_string(channel) + "/" + std::to_string(status));
        } else {
            apply(controller_->on_qchannel_status(channel, status, now_));
        }
    }

    void apply_timeline(const TimelineEvent& ev) {
        switch (ev.kind) {
        case TimelineEvent::Kind::FaultCut:
        case TimelineEvent::Kind::FaultAddLoss:
        case TimelineEvent::Kind::FaultClear: {
            Fault fault = Fault::clear();
            if (ev.kind == TimelineEvent::Kind::FaultCut)
                fault = Fault::cut();
            else if (ev.kind == TimelineEvent::Kind::FaultAddLoss)
                fault = Fault::add_loss(ev.value);
            inject_fault(topo_, ev.target, fault);
            const LossReport report =
                measure_loss(topo_, ev.target, sc_.loss_noise_db, rng_, now_);
            apply(controller_->on_loss_report(report, now_));
            break;
        }
        case TimelineEvent::Kind::EavesdropOn:
        case TimelineEvent::Kind::EavesdropOff:
            pairs_.at(ev.target).pair.eavesdropper_present =
                ev.kind == TimelineEvent::Kind::EavesdropOn;
            break;
        case TimelineEvent::Kind::Traffic:
            channels_.at(ev.target).offered_bps = static_cast<std::uint64_t>(ev.value);
            break;
        }
    }

    void generate_keys() {
        for (auto& [pair_id, ps] : pairs_) {
            KeyGenOutput out = generate_key_blocks(ps.pair, topo_, sc_.tick_s, sc_.block_bytes,
                                                   sc_.qkd, rng_, now_);
            if (out.channel_dead) {
                if (!ps.dead_notified) {
                    ps.dead_notified = true;
                    for (ChannelId ch : ps.channels)
                        apply(controller_->on_channel_dead(ch, now_));
                }
                continue;
            }
            ps.dead_notified = false;

            PoolMirror& mirror = pools_.at(pair_id);
            Bytes aggregated;
            for (KeyBlock& block : out.blocks) {
                report_.key_bits_produced += block.bits.size() * 8;
                report_.qber_mean += block.qber;
                ++report_.qber_samples;
                if (live_) {
                    aggregated.insert(aggregated.end(), block.bits.begin(), block.bits.end());
                } else {
                    mirror.tx->push_block(block.bits);
                    mirror.rx->push_block(std::move(block.bits));
                }
            }
            if (live_ && !aggregated.empty()) {
                // in live mode keys reach the codecs through the REST API
                ChannelId api_channel = pair_id;
                bool via_api = false;
                for (ChannelId ch : ps.channels) {
                    const auto& cs = channels_.at(ch);
                    if (cs.cfg.pair_ids.size() == 1 && cs.cfg.pair_ids.front() == pair_id) {
                        api_channel = ch;
                        via_api = true;
                        break;
                    }
                }
                if (via_api) {
                    client_->Post("/qkey/" + std::to_string(api_channel), to_hex(aggregated),
                                  "text/plain");
                } else {
                    mirror.tx->push_block(aggregated);
                    mirror.rx->push_block(aggregated);
                }
            }

            for (const DiscardEvent& discard : out.discards) {
                report_.key_bits_discarded += sc_.block_bytes * 8;
                report_.qber_mean += discard.qber;
                ++report_.qber_samples;
                ++report_.discard_events;
            }
            if (!out.discards.empty()) {
                for (ChannelId ch : ps.channels)
                    if (controller_->quantum_eligible(ch))
                        dispatch_status(ch, 0);
            } else if (!out.blocks.empty()) {
                for (ChannelId ch : ps.channels)
                    if (!controller_->quantum_eligible(ch))
                        dispatch_status(ch, 1);
            }
        }
    }

    void send_traffic() {
        for (auto& [id, cs] : channels_) {
            cs.frames_due += static_cast<double>(cs.offered_bps) * sc_.tick_s /
                             (8.0 * static_cast<double>(cs.cfg.frame_bytes));
            std::uint64_t bytes_this_tick = 0;
            while (cs.frames_due >= 1.0) {
                cs.frames_due -= 1.0;
                bytes_this_tick += cs.cfg.frame_bytes;
                send_frame(cs);
            }
            if (bytes_this_tick > 0)
                apply(controller_->on_traffic_sample(id, bytes_this_tick, now_));
        }
    }

    void send_frame(ChannelSim& cs) {
        ++report_.frames_sent;
        Bytes payload(cs.cfg.frame_bytes);
        std::uniform_int_distribution<int> byte_dist(0, 255);
        for (auto& b : payload)
            b = static_cast<std::uint8_t>(byte_dist(rng_));

        const PacketMeta meta{parse_ipv4(app_addr(cs.cfg.dst)),
                              static_cast<std::uint16_t>(9000 + cs.cfg.id), cs.cfg.id};
        const std::size_t wire_size = kFrameHeaderSize + payload.size();
        const FlowAction src_action = switches_.at(cs.cfg.src).forward(meta, wire_size);
        if (src_action.type != FlowAction::Type::Forward) {
            ++report_.frames_dropped;
            return;
        }
        const auto kind_it =
            entrance_kinds_.find({src_action.target.addr, src_action.target.port});
        if (kind_it == entrance_kinds_.end()) {
            report_.check_failures.push_back("flow rule targets unknown entrance point");
            ++report_.frames_dropped;
            return;
        }
        const CodecKind kind = kind_it->second;

        Bytes wire_payload;
        std::optional<Bytes> delivered;
        switch (kind) {
        case CodecKind::Transparent:
            wire_payload = transparent_pass(payload);
            delivered = wire_payload;
            ++report_.transparent_checked;
            if (wire_payload == payload)
                ++report_.transparent_plain_on_wire;
            break;
        case CodecKind::Quantum:
            delivered = send_quantum(cs, payload, wire_payload);
            break;
        case CodecKind::Classical:
            delivered = send_classical(cs, payload, wire_payload);
            break;
        }
        if (!delivered)
            return; // starved or relay failure, already accounted

        // frame traverses the destination switch to the decoder entrance
        const FlowAction dst_action = switches_.at(cs.cfg.dst).forward(meta, wire_size);
        if (dst_action.type != FlowAction::Type::Forward) {
            ++report_.frames_dropped;
            return;
        }

        DataFrame df;
        df.kind = kind;
        df.channel = cs.cfg.id;
        df.seq = cs.seq++;
        df.payload = wire_payload;
        const Bytes framed = frame(df);
        const DeframeResult rx = deframe(framed);
        if (!rx.ok() || rx.frame.payload != wire_payload) {
            ++report_.integrity_failures;
            return;
        }

        report_.bytes_by_codec[static_cast<std::size_t>(kind)] += payload.size();
        if (*delivered == payload)
            ++report_.frames_delivered;
        else
            ++report_.integrity_failures;
    }

    KeyPool& seg_tx(const ChannelSim& cs, std::size_t seg) {
        return *pools_.at(cs.cfg.pair_ids.at(seg)).tx;
    }
    KeyPool& seg_rx(const ChannelSim& cs, std::size_t seg) {
        return *pools_.at(cs.cfg.pair_ids.at(seg)).rx;
    }

    std::optional<Bytes> send_quantum(ChannelSim& cs, const Bytes& payload, Bytes& wire_payload) {
        try {
            if (cs.cfg.relay && cs.cfg.pair_ids.size() == 2) {
                RelayPlan plan;
                try {
                    plan = controller_->plan_trusted_relay(cs.cfg.id);
                } catch (const ConfigError&) {
                    starve(cs);
                    return std::nullopt;
                }
                if (plan.mode == RelayMode::KeyRelayOnly)
                    return relay_keys_and_send(cs, payload, wire_payload);
                return relay_data(cs, plan, payload, wire_payload);
            }
            wire_payload = otp_seal(payload, seg_tx(cs, 0), now_);
            check_otp_wire(payload, wire_payload);
            OpenResult open = otp_open(wire_payload, seg_rx(cs, 0), now_);
            if (!open.ok) {
                ++report_.integrity_failures;
                return std::nullopt;
            }
            return open.plain;
        } catch (const InsufficientKey&) {
            starve(cs);
            return std::nullopt;
        }
    }

    // hop-by-hop trusted repeater: decode with segment-1 keys at the relay,
    // re-encode with segment-2 keys
    std::optional<Bytes> relay_data(ChannelSim& cs, const RelayPlan& plan, const Bytes& payload,
                                    Bytes& wire_payload) {
        wire_payload = otp_seal(payload, seg_tx(cs, 0), now_);
        check_otp_wire(payload, wire_payload);
        OpenResult at_relay = otp_open(wire_payload, seg_rx(cs, 0), now_);
        if (!at_relay.ok) {
            ++report_.integrity_failures;
            return std::nullopt;
        }
        ++report_.relay_exposed_frames;
        if (report_.relay_log.size() < 4) {
            std::ostringstream line;
            line << "t=" << now_ << " channel " << cs.cfg.id << " plaintext exposed at node "
                 << plan.relay << " (" << at_relay.plain.size() << " bytes)";
            report_.relay_log.push_back(line.str());
        }
        const Bytes second_hop = otp_seal(at_relay.plain, seg_tx(cs, 1), now_);
        OpenResult at_dst = otp_open(second_hop, seg_rx(cs, 1), now_);
        if (!at_dst.ok) {
            ++report_.integrity_failures;
            return std::nullopt;
        }
        return at_dst.plain;
    }

    // key-relay mode: segment-1 material becomes the end-to-end pad; moving
    // it through the relay consumes an equal amount of segment-2 material as
    // transport wrapping. Data frames stay on the direct path.
    std::optional<Bytes> relay_keys_and_send(ChannelSim& cs, const Bytes& payload,
                                             Bytes& wire_payload) {
        const std::size_t need = payload.size() + 4;
        while (cs.e2e_tx->available_bits() < need * 8) {
            const std::size_t chunk = std::max(sc_.block_bytes, need);
            KeyPool& s1t = seg_tx(cs, 0);
            KeyPool& s1r = seg_rx(cs, 0);
            KeyPool& s2t = seg_tx(cs, 1);
            KeyPool& s2r = seg_rx(cs, 1);
            if (s1t.available_bits() < chunk * 8 || s2t.available_bits() < chunk * 8)
                break;
            Bytes k_tx = s1t.take_material(chunk, KeyPurpose::OtpData, now_);
            Bytes k_rx = s1r.take_material(chunk, KeyPurpose::OtpData, now_);
            s2t.take_material(chunk, KeyPurpose::SessionKeyWrap, now_);
            s2r.take_material(chunk, KeyPurpose::SessionKeyWrap, now_);
            cs.e2e_tx->push_block(std::move(k_tx));
            cs.e2e_rx->push_block(std::move(k_rx));
        }
        wire_payload = otp_seal(payload, *cs.e2e_tx, now_);
        check_otp_wire(payload, wire_payload);
        OpenResult open = otp_open(wire_payload, *cs.e2e_rx, now_);
        if (!open.ok) {
            ++report_.integrity_failures;
            return std::nullopt;
        }
        return open.plain;
    }

    std::optional<Bytes> send_classical(ChannelSim& cs, const Bytes& payload,
                                        Bytes& wire_payload) {
        if (!cs.enc_session)
            establish_sessions(cs);
        try {
            wire_payload = classical_seal(payload, *cs.enc_session);
        } catch (const RekeyRequired&) {
            establish_sessions(cs);
            wire_payload = classical_seal(payload, *cs.enc_session);
        }
        OpenResult open = classical_open(wire_payload, *cs.dec_session);
        if (!open.ok) {
            ++report_.integrity_failures;
            return std::nullopt;
        }
        return open.plain;
    }

    void establish_sessions(ChannelSim& cs) {
        SessionHandshake hs = establish_classical_session(
            cs.cfg.id, seg_tx(cs, 0), rng_, sc_.bootstrap_secret, kDefaultRekeyAfterBytes, now_);
        cs.enc_session = hs.session;
        cs.dec_session =
            accept_classical_session(cs.cfg.id, hs.transport, hs.quantum_wrapped, seg_rx(cs, 0),
                                     sc_.bootstrap_secret, kDefaultRekeyAfterBytes, now_);
    }

    void check_otp_wire(const Bytes& payload, const Bytes& wire_payload) {
        if (payload.size() < 8)
            return;
        ++report_.otp_checked;
        if (std::equal(payload.begin(), payload.end(), wire_payload.begin()))
            ++report_.otp_plain_on_wire;
    }

    void starve(ChannelSim& cs) {
        ++report_.frames_starved;
        apply(controller_->on_key_starvation(cs.cfg.id, now_));
    }

    void finalize() {
        if (report_.qber_samples > 0)
            report_.qber_mean /= static_cast<double>(report_.qber_samples);
        report_.sifted_rate_bps =
            static_cast<double>(report_.key_bits_produced) / sc_.duration_s;

        auto check_pool = [&](const KeyPool& pool, const std::string& label) {
            report_.key_bits_consumed += pool.consumed_bits_total();
            report_.pool_consumed_bits.emplace_back(label, pool.consumed_bits_total());
            if (pool.pushed_bits_total() != pool.available_bits() + pool.consumed_bits_total())
                report_.check_failures.push_back("key conservation violated in pool " + label);
        };
        for (const auto& [pair_id, mirror] : pools_) {
            check_pool(*mirror.tx, std::to_string(pair_id) + "/tx");
            check_pool(*mirror.rx, std::to_string(pair_id) + "/rx");
        }
        for (const auto& [id, cs] : channels_) {
            if (cs.e2e_tx)
                check_pool(*cs.e2e_tx, std::to_string(id) + "/e2e-tx");
            if (cs.e2e_rx)
                check_pool(*cs.e2e_rx, std::to_string(id) + "/e2e-rx");
        }

        if (report_.integrity_failures > 0)
            report_.check_failures.push_back("end-to-end integrity failures");
        if (report_.transparent_plain_on_wire != report_.transparent_checked)
            report_.check_failures.push_back("transparent codec altered a payload");
        if (report_.otp_plain_on_wire != 0)
            report_.check_failures.push_back("plaintext observed on wire during DirectOtp");

        report_.transitions = controller_->mode_changes();
        report_.route_log = controller_->decision_log();
    }

    const Scenario& sc_;
    bool live_;
    std::mt19937_64 rng_;
    Topology topo_;
    std::unique_ptr<Controller> controller_;
    std::map<ChannelId, PairSim> pairs_;
    std::map<ChannelId, PoolMirror> pools_;
    std::map<ChannelId, ChannelSim> channels_;
    std::map<NodeId, SoftSwitch> switches_;
    std::map<std::pair<std::uint32_t, std::uint16_t>, CodecKind> entrance_kinds_;
    std::uint32_t next_xid_ = 1;
    SimTime now_ = 0.0;
    RunReport report_;

    std::unique_ptr<ControlApi> api_;
    std::unique_ptr<httplib::Client> client_;
    int api_port_ = 0;
};

} // namespace

RunReport run_scenario(const Scenario& scenario, bool live) {
    SimRun run(scenario, live);
    return run.run();
}

std::string render_report(const RunReport& r, ReportFormat format) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(3);
    const char* codec_names[3] = {"transparent", "quantum", "classical"};

    if (format == ReportFormat::Lines) {
        out << "report scenario=" << r.scenario << " seed=" << r.seed << " live=" << r.live
            << '\n';
        out << "sifted_rate_bps " << r.sifted_rate_bps << '\n';
        out << "qber_mean " << std::setprecision(6) << r.qber_mean << std::setprecision(3)
            << '\n';
        out << "key_bits produced=" << r.key_bits_produced << " consumed=" << r.key_bits_consumed
            << " discarded=" << r.key_bits_discarded << " discard_events=" << r.discard_events
            << '\n';
        out << "frames sent=" << r.frames_sent << " delivered=" << r.frames_delivered
            << " dropped=" << r.frames_dropped << " starved=" << r.frames_starved
            << " integrity_failures=" << r.integrity_failures << '\n';
        out << "bytes_by_codec";
        for (std::size_t i = 0; i < 3; ++i)
            out << ' ' << codec_names[i] << '=' << r.bytes_by_codec[i];
        out << '\n';
        for (const ModeChange& t : r.transitions)
            out << "transition t=" << t.time << " ch=" << t.channel << ' ' << mode_name(t.from)
                << "->" << mode_name(t.to) << " reason=" << t.reason << '\n';
        for (const std::string& line : r.route_log)
            out << "decision " << line << '\n';
        for (const std::string& line : r.relay_log)
            out << "relay " << line << '\n';
        for (const std::string& fail : r.check_failures)
            out << "check FAILED: " << fail << '\n';
        out << (r.all_ok() ? "checks ok" : "checks FAILED") << '\n';
        return out.str();
    }

    out << "Scenario: " << r.scenario << " (seed " << r.seed << (r.live ? ", live" : "")
        << ")\n";
    out << "  sifted key rate:  " << r.sifted_rate_bps << " bit/s\n";
    out << "  mean QBER:        " << std::setprecision(4) << r.qber_mean * 100.0
        << std::setprecision(3) << " %\n";
    out << "  key bits:         produced " << r.key_bits_produced << ", consumed "
        << r.key_bits_consumed << ", discarded " << r.key_bits_discarded << " ("
        << r.discard_events << " discard events)\n";
    out << "  frames:           sent " << r.frames_sent << ", delivered " << r.frames_delivered
        << ", dropped " << r.frames_dropped << ", starved " << r.frames_starved
        << ", integrity failures " << r.integrity_failures << "\n";
    out << "  bytes by codec:   ";
    for (std::size_t i = 0; i < 3; ++i)
        out << (i ? ", " : "") << codec_names[i] << ' ' << r.bytes_by_codec[i];
    out << "\n";
    if (!r.transitions.empty()) {
        out << "  mode transitions:\n";
        out << "    time      channel  from                      to                        "
               "reason\n";
        for (const ModeChange& t : r.transitions)
            out << "    " << std::setw(8) << t.time << "  " << std::setw(7) << t.channel << "  "
                << std::setw(24) << std::left << mode_name(t.from) << "  " << std::setw(24)
                << mode_name(t.to) << std::right << "  " << t.reason << '\n';
    }
    if (!r.route_log.empty()) {
        out << "  controller decisions:\n";
        for (const std::string& line : r.route_log)
            out << "    " << line << '\n';
    }
    if (r.relay_exposed_frames > 0) {
        out << "  relay exposure:   " << r.relay_exposed_frames << " frames\n";
        for (const std::string& line : r.relay_log)
            out << "    " << line << '\n';
    }
    for (const std::string& fail : r.check_failures)
        out << "  CHECK FAILED: " << fail << '\n';
    out << "  result: " << (r.all_ok() ? "all checks passed" : "CHECKS FAILED") << '\n';
    return out.str();
}

} // namespace qsdn
