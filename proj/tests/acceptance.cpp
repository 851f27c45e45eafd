// Acceptance suite: one pass/fail line per top-level criterion.
#include "qsdn/control_api.hpp"
#include "qsdn/scenario.hpp"

#include <chrono>
#include <cmath>
#include <deque>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

using namespace qsdn;

namespace {

int failures = 0;

void criterion(int index, const std::string& name, bool ok, const std::string& detail) {
    std::cout << (ok ? "PASS" : "FAIL") << "  " << index << ". " << name;
    if (!detail.empty())
        std::cout << "  [" << detail << "]";
    std::cout << '\n';
    if (!ok)
        ++failures;
}

std::string fixture(const char* name) { return std::string(SCENARIO_DIR) + "/" + name; }

// --- 1: calibration reproduction ---------------------------------------------

void check_calibration() {
    const auto start = std::chrono::steady_clock::now();
    const RunReport r = run_scenario(Scenario::parse_file(fixture("two_node.scn")));
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const bool rate_ok = std::fabs(r.sifted_rate_bps / 1.06e6 - 1.0) <= 0.01;
    const bool qber_ok = std::fabs(r.qber_mean - 0.010) <= 0.002;
    std::ostringstream detail;
    detail << "rate=" << r.sifted_rate_bps << " bit/s, qber=" << r.qber_mean * 100
           << "%, wall=" << wall << " s";
    criterion(1, "calibration point: 1.06 Mbit/s +/-1%, QBER 1.0% +/-0.2%, <5 s wall",
              rate_ok && qber_ok && wall < 5.0 && r.all_ok(), detail.str());
}

// --- 2: eavesdropper discard rule ---------------------------------------------

void check_discard_rule() {
    // model level: with an intercept-resend attacker every block is discarded
    Topology topo = build_topology(TopologySpec::parse(
        "node 1 endpoint\nnode 2 endpoint\nlink 1 1 2 length_km=1.63\n"));
    QcPair pair{.id = 1, .alice = 1, .bob = 2, .link = 1};
    pair.eavesdropper_present = true;
    std::mt19937_64 rng(1);
    QkdModelParams params;
    const KeyGenOutput out = generate_key_blocks(pair, topo, 10.0, 16, params, rng);
    const std::uint64_t expected = static_cast<std::uint64_t>(1.06e6 * 10.0 / 128.0);
    const bool all_discarded =
        out.blocks.empty() && out.discards.size() == expected &&
        pair.status == PairStatus::Compromised;

    // system level: the scenario downgrades within one evaluation round (one tick)
    const RunReport r = run_scenario(Scenario::parse_file(fixture("eavesdrop.scn")));
    bool fast_downgrade = false;
    for (const ModeChange& t : r.transitions)
        fast_downgrade |= t.from == EncryptionMode::DirectOtp &&
                          t.to == EncryptionMode::ClassicalOnly && t.time >= 5.0 &&
                          t.time <= 5.1;

    std::ostringstream detail;
    detail << out.discards.size() << "/" << expected << " blocks discarded, 0 pooled";
    criterion(2, "eavesdropped blocks 100% discarded, status-0 fallback within one round",
              all_discarded && fast_downgrade && r.all_ok(), detail.str());
}

// --- 3: control-script replay ---------------------------------------------------

void check_control_replay() {
    Topology topo = build_topology(TopologySpec::parse(
        "node 1 endpoint\nnode 2 endpoint\nlink 1 1 2 length_km=1.63\n"));
    Controller controller(&topo, {});
    QcPair pair{.id = 1, .alice = 1, .bob = 2, .link = 1};
    KeyPool tx(1), rx(1);
    controller.register_pair(&pair, {});
    for (NodeId node : {NodeId{1}, NodeId{2}})
        for (CodecKind kind : {CodecKind::Transparent, CodecKind::Quantum, CodecKind::Classical})
            for (CodecDirection dir : {CodecDirection::Encoder, CodecDirection::Decoder})
                controller.register_entrance(
                    node, {"10.0.1." + std::to_string(node),
                           static_cast<std::uint16_t>(7000 + static_cast<int>(kind) * 2 +
                                                      (dir == CodecDirection::Decoder)),
                           kind, dir});
    ChannelSetup setup;
    setup.id = 1;
    setup.src = 1;
    setup.dst = 2;
    setup.segments = {{1, &pair, &tx, &rx}};
    setup.app_dst_addr = parse_ipv4("10.0.2.2");
    setup.app_dst_port = 9001;
    controller.add_channel(std::move(setup));
    controller.evaluate_all(0.0);

    ControlApi api(controller, nullptr);
    const auto r1 = api.handle("GET", "/qchannel/1/0", "");
    const EncryptionMode after_down = controller.mode(1);
    const auto r2 = api.handle("GET", "/qchannel/1/1", "");
    const bool eligible = controller.quantum_eligible(1);
    const std::uint64_t before_bits = controller.pool_bits(1);
    const auto r3 = api.handle("POST", "/qkey/1", "BCC6C0B92F8F0F0D33D38CDA55AB6A94");
    const std::uint64_t grown = controller.pool_bits(1) - before_bits;
    const EncryptionMode after_key = controller.mode(1);

    std::ostringstream detail;
    detail << r1.status << "/" << r2.status << "/" << r3.status << ", "
           << mode_name(after_down) << " -> eligible -> " << mode_name(after_key) << ", +"
           << grown << " bits";
    criterion(3, "status/key replay: 200/200/200, classical->eligible->quantum, +128 bits",
              r1.status == 200 && r2.status == 200 && r3.status == 200 &&
                  after_down == EncryptionMode::ClassicalOnly && eligible && grown == 128 &&
                  after_key == EncryptionMode::DirectOtp,
              detail.str());
}

// --- 4: reroute policy vs exhaustive oracle ------------------------------------

struct OraclePath {
    double loss = 0.0;
    std::vector<LinkId> links;
};

void enumerate(const Topology& topo, NodeId at, NodeId dst, NodeId src,
               std::vector<LinkId>& stack, std::vector<NodeId>& visited, double loss,
               std::vector<OraclePath>& out) {
    for (const auto& [id, link] : topo.links) {
        if (link.status != LinkStatus::Up || !link.connects(at))
            continue;
        if (link.connects(src) && link.connects(dst))
            continue;
        const NodeId next = link.other(at);
        if (std::find(visited.begin(), visited.end(), next) != visited.end())
            continue;
        stack.push_back(id);
        if (next == dst) {
            out.push_back({loss + link.total_loss_db(), stack});
        } else if (topo.nodes.at(next) == NodeRole::TrustedRelay) {
            visited.push_back(next);
            enumerate(topo, next, dst, src, stack, visited, loss + link.total_loss_db(), out);
            visited.pop_back();
        }
        stack.pop_back();
    }
}

bool oracle_agrees(const Topology& topo, NodeId src, NodeId dst, double margin) {
    std::optional<OraclePath> direct;
    bool direct_unavailable = false;
    for (const auto& [id, link] : topo.links) {
        if (!(link.connects(src) && link.connects(dst)))
            continue;
        if (link.status != LinkStatus::Up) {
            direct_unavailable = true;
            continue;
        }
        if (!direct || link.total_loss_db() < direct->loss)
            direct = OraclePath{link.total_loss_db(), {id}};
    }
    std::vector<OraclePath> alternatives;
    std::vector<LinkId> stack;
    std::vector<NodeId> visited{src};
    enumerate(topo, src, dst, src, stack, visited, 0.0, alternatives);
    std::optional<OraclePath> alt;
    for (const auto& p : alternatives)
        if (!alt || p.loss < alt->loss)
            alt = p;

    ChannelPolicy policy;
    policy.direct_preference_margin_db = margin;
    const RouteDecision got = compute_route(topo, src, dst, policy);

    if (direct && !(alt && direct->loss - alt->loss > margin))
        return got.path == direct->links &&
               got.reason == (direct_unavailable ? RouteReason::FailoverReserve
                                                 : RouteReason::Direct);
    if (alt)
        return got.path == alt->links && got.reason == RouteReason::LossOptimal &&
               std::fabs(got.loss_db - alt->loss) < 1e-12;
    return got.reason == RouteReason::NoQuantumPath && got.path.empty();
}

Topology four_link(double direct_db, double reserve_db, double hop_db) {
    std::ostringstream spec;
    spec << "node 1 endpoint\nnode 2 endpoint\nnode 3 trusted_relay\n"
         << "link 1 1 2 length_km=0 insertion_db=" << direct_db << "\n"
         << "link 2 1 2 length_km=0 insertion_db=" << reserve_db << "\n"
         << "link 3 1 3 length_km=0 insertion_db=" << hop_db << "\n"
         << "link 4 3 2 length_km=0 insertion_db=" << hop_db << "\n";
    return build_topology(TopologySpec::parse(spec.str()));
}

void check_reroute_policy() {
    // reserve at 12 dB vs a 4 dB two-hop detour: margin 3 dB sends the route
    // through the trusted relay
    Topology a = four_link(0.5, 12.0, 2.0);
    inject_fault(a, 1, Fault::cut());
    ChannelPolicy policy;
    const RouteDecision via_relay = compute_route(a, 1, 2, policy);
    const bool relay_case = via_relay.path == std::vector<LinkId>{3, 4} &&
                            via_relay.reason == RouteReason::LossOptimal &&
                            via_relay.via_trusted == std::vector<NodeId>{3} &&
                            oracle_agrees(a, 1, 2, 3.0);

    // reserve at 6 dB: margin not exceeded, the reserve fiber is kept
    Topology b = four_link(0.5, 6.0, 2.0);
    inject_fault(b, 1, Fault::cut());
    const RouteDecision reserve = compute_route(b, 1, 2, policy);
    const bool reserve_case = reserve.path == std::vector<LinkId>{2} &&
                              reserve.reason == RouteReason::FailoverReserve &&
                              oracle_agrees(b, 1, 2, 3.0);

    // randomized sweep against the exhaustive enumeration, exact match
    std::mt19937_64 rng(424242);
    std::uniform_int_distribution<int> n_nodes_dist(2, 6);
    std::uniform_real_distribution<double> loss_dist(0.1, 15.0);
    bool sweep_ok = true;
    for (int g = 0; g < 500 && sweep_ok; ++g) {
        const int n = n_nodes_dist(rng);
        Topology topo;
        for (int i = 1; i <= n; ++i)
            topo.nodes[static_cast<NodeId>(i)] =
                (i > 2 && (rng() & 1)) ? NodeRole::TrustedRelay : NodeRole::Endpoint;
        std::uniform_int_distribution<int> node_dist(1, n);
        const int m = static_cast<int>(rng() % 11);
        for (int i = 1; i <= m; ++i) {
            LinkState link;
            link.id = static_cast<LinkId>(i);
            link.a = static_cast<NodeId>(node_dist(rng));
            do {
                link.b = static_cast<NodeId>(node_dist(rng));
            } while (link.b == link.a);
            link.base_loss_db = loss_dist(rng);
            link.status = rng() % 4 == 0 ? LinkStatus::Down : LinkStatus::Up;
            topo.links[link.id] = link;
        }
        sweep_ok = oracle_agrees(topo, 1, 2, loss_dist(rng) / 3.0);
    }

    criterion(4, "loss-aware rerouting matches the exhaustive path oracle exactly",
              relay_case && reserve_case && sweep_ok,
              relay_case && reserve_case ? "fixed cases + 500 random graphs" : "fixed case failed");
}

// --- 5: full fallback under a triple cut ---------------------------------------

void check_triple_cut() {
    Topology topo = build_topology(TopologySpec::parse(
        "node 1 endpoint\nnode 2 endpoint\n"
        "link 1 1 2 length_km=1.63\nlink 2 1 2 length_km=2.5\nlink 3 1 2 length_km=4\n"));
    Controller controller(&topo, {});
    std::vector<QcPair> pairs(3);
    std::deque<KeyPool> pools;
    for (int i = 0; i < 3; ++i) {
        pairs[i].id = static_cast<ChannelId>(i + 1);
        pairs[i].alice = 1;
        pairs[i].bob = 2;
        pairs[i].link = static_cast<LinkId>(i + 1);
        controller.register_pair(&pairs[i], {});
    }
    for (NodeId node : {NodeId{1}, NodeId{2}})
        for (CodecKind kind : {CodecKind::Transparent, CodecKind::Quantum, CodecKind::Classical})
            for (CodecDirection dir : {CodecDirection::Encoder, CodecDirection::Decoder})
                controller.register_entrance(
                    node, {"10.0.1." + std::to_string(node),
                           static_cast<std::uint16_t>(7000 + static_cast<int>(kind) * 2 +
                                                      (dir == CodecDirection::Decoder)),
                           kind, dir});
    for (int i = 0; i < 3; ++i) {
        pools.emplace_back(static_cast<ChannelId>(i + 1));
        KeyPool& tx = pools.back();
        pools.emplace_back(static_cast<ChannelId>(i + 1));
        KeyPool& rx = pools.back();
        tx.push_block(Bytes(64, 1));
        rx.push_block(Bytes(64, 1));
        ChannelSetup setup;
        setup.id = static_cast<ChannelId>(i + 1);
        setup.src = 1;
        setup.dst = 2;
        setup.segments = {{setup.id, &pairs[i], &tx, &rx}};
        setup.app_dst_addr = parse_ipv4("10.0.2.2");
        setup.app_dst_port = static_cast<std::uint16_t>(9001 + i);
        controller.add_channel(std::move(setup));
    }
    controller.evaluate_all(0.0);
    bool armed = true;
    for (ChannelId ch : {1, 2, 3})
        armed = armed && controller.mode(ch) == EncryptionMode::DirectOtp;

    // all three fibers cut; the last loss report carries the joint fallback
    CommandBatch last;
    for (LinkId link : {1, 2, 3}) {
        inject_fault(topo, link, Fault::cut());
        std::mt19937_64 rng(0);
        last = controller.on_loss_report(measure_loss(topo, link, 0.0, rng, 1.0), 1.0);
    }

    bool all_classical = true;
    for (ChannelId ch : {1, 2, 3})
        all_classical = all_classical && controller.mode(ch) == EncryptionMode::ClassicalOnly;

    // paired FLOW_MODs: the same batch re-points both endpoints of each channel
    int adds_src = 0, adds_dst = 0, dels = 0;
    for (const Command& c : last.commands)
        if (const auto* fm = std::get_if<FlowModCommand>(&c)) {
            if (fm->cmd == FlowModBody::Cmd::Add)
                (fm->target_switch == 1 ? adds_src : adds_dst)++;
            else
                ++dels;
        }
    const bool paired = adds_src == 3 && adds_dst == 3 && dels == 6;

    std::ostringstream detail;
    detail << "modes classical=" << all_classical << ", batch adds " << adds_src << "+"
           << adds_dst << ", deletes " << dels;
    criterion(5, "triple cut: every channel falls back to classical, paired flow mods in one batch",
              armed && all_classical && paired, detail.str());
}

// --- 6: trusted repeater delivery -----------------------------------------------

void check_trusted_repeater() {
    const RunReport r = run_scenario(Scenario::parse_file(fixture("three_node_relay.scn")));
    std::uint64_t seg1 = 0, seg2 = 0;
    for (const auto& [label, bits] : r.pool_consumed_bits) {
        if (label == "1/tx")
            seg1 = bits;
        if (label == "2/tx")
            seg2 = bits;
    }
    std::ostringstream detail;
    detail << r.frames_delivered << "/" << r.frames_sent << " frames, pools -" << seg1 << "/-"
           << seg2 << " bits, " << r.relay_exposed_frames << " exposures logged";
    criterion(6, "trusted repeater: >=1000 intact frames, two pools decremented, exposure logged",
              r.all_ok() && r.frames_sent >= 1000 && r.frames_delivered == r.frames_sent &&
                  r.integrity_failures == 0 && seg1 > 0 && seg2 > 0 &&
                  r.relay_exposed_frames == r.frames_sent && !r.relay_log.empty(),
              detail.str());
}

// --- 7: property suites -----------------------------------------------------------

bool prop_otp_involution() {
    std::mt19937_64 rng(7001);
    std::uniform_int_distribution<int> len_dist(1, 256);
    std::uniform_int_distribution<int> byte_dist(0, 255);
    for (int i = 0; i < 1000; ++i) {
        Bytes plain(static_cast<std::size_t>(len_dist(rng)));
        for (auto& b : plain)
            b = static_cast<std::uint8_t>(byte_dist(rng));
        KeyPool tx(1), rx(1);
        Bytes material(plain.size());
        for (auto& b : material)
            b = static_cast<std::uint8_t>(byte_dist(rng));
        tx.push_block(material);
        rx.push_block(material);
        if (otp_decode(otp_encode(plain, tx), rx) != plain)
            return false;
        if (tx.consumed_bits_total() != plain.size() * 8 ||
            rx.consumed_bits_total() != plain.size() * 8)
            return false;
    }
    return true;
}

bool prop_keystore_conservation() {
    std::mt19937_64 rng(7002);
    KeyPool pool(1);
    std::deque<std::uint8_t> oracle;
    std::uniform_int_distribution<int> len_dist(1, 48);
    for (int i = 0; i < 10'000; ++i) {
        if (rng() % 3 == 0) {
            Bytes block(static_cast<std::size_t>(len_dist(rng)), static_cast<std::uint8_t>(i));
            oracle.insert(oracle.end(), block.begin(), block.end());
            pool.push_block(std::move(block));
        } else {
            const auto n = static_cast<std::size_t>(len_dist(rng));
            if (oracle.size() >= n) {
                const Bytes got = pool.take_material(n, KeyPurpose::OtpData);
                for (std::size_t k = 0; k < n; ++k) {
                    if (got[k] != oracle.front())
                        return false;
                    oracle.pop_front();
                }
            } else {
                try {
                    pool.take_material(n, KeyPurpose::OtpData);
                    return false;
                } catch (const InsufficientKey&) {
                }
            }
        }
        if (pool.pushed_bits_total() != pool.available_bits() + pool.consumed_bits_total())
            return false;
        if (pool.available_bits() != oracle.size() * 8)
            return false;
    }
    return true;
}

bool prop_flow_table_oracle() {
    std::mt19937_64 rng(7003);
    std::uniform_int_distribution<std::uint32_t> addr_dist(1, 4);
    std::uniform_int_distribution<int> small(0, 3);
    for (int t = 0; t < 10'000; ++t) {
        FlowTable table;
        const int n = static_cast<int>(rng() % 9);
        for (int i = 0; i < n; ++i) {
            FlowRule r;
            r.cookie = static_cast<std::uint64_t>(i) + 1;
            r.priority = static_cast<std::uint16_t>(small(rng));
            const int chan = small(rng);
            r.match = {addr_dist(rng), static_cast<std::uint16_t>(small(rng)),
                       chan == 0 ? kAnyChannel : static_cast<std::uint16_t>(chan)};
            r.action = {FlowAction::Type::Forward, {addr_dist(rng), 1}};
            table.install(r);
        }
        for (int probe = 0; probe < 8; ++probe) {
            const PacketMeta meta{addr_dist(rng), static_cast<std::uint16_t>(small(rng)),
                                  static_cast<std::uint16_t>(small(rng))};
            const FlowRule* best = nullptr;
            for (const FlowRule& r : table.rules()) {
                const bool hit =
                    r.match.dst_addr == meta.dst_addr && r.match.dst_port == meta.dst_port &&
                    (r.match.channel == kAnyChannel || r.match.channel == meta.channel);
                if (!hit)
                    continue;
                if (best == nullptr || r.priority > best->priority ||
                    (r.priority == best->priority && r.installed_seq < best->installed_seq))
                    best = &r;
            }
            const FlowRule* got = table.match(meta);
            if ((got == nullptr) != (best == nullptr))
                return false;
            if (got != nullptr && got->cookie != best->cookie)
                return false;
        }
    }
    return true;
}

bool prop_control_roundtrip_and_fuzz() {
    std::mt19937_64 rng(7004);
    for (int i = 0; i < 1000; ++i) {
        ControlMessage msg;
        msg.type = MsgType::FlowMod;
        msg.xid = static_cast<std::uint32_t>(rng());
        FlowModBody body;
        body.cmd = rng() & 1 ? FlowModBody::Cmd::Add : FlowModBody::Cmd::Delete;
        body.rule.cookie = rng();
        body.rule.priority = static_cast<std::uint16_t>(rng());
        body.rule.match = {static_cast<std::uint32_t>(rng()), static_cast<std::uint16_t>(rng()),
                           static_cast<std::uint16_t>(rng())};
        body.rule.action = {rng() & 1 ? FlowAction::Type::Forward : FlowAction::Type::Drop,
                            {static_cast<std::uint32_t>(rng()),
                             static_cast<std::uint16_t>(rng())}};
        msg.body = body;
        const ControlDecodeResult back = decode_control(encode_control(msg));
        if (!back.ok() || back.msg.xid != msg.xid ||
            !(std::get<FlowModBody>(back.msg.body) == body))
            return false;
    }
    std::uniform_int_distribution<int> len_dist(0, 64);
    std::uniform_int_distribution<int> byte_dist(0, 255);
    for (int i = 0; i < 100'000; ++i) {
        Bytes buf(static_cast<std::size_t>(len_dist(rng)));
        for (auto& b : buf)
            b = static_cast<std::uint8_t>(byte_dist(rng));
        (void)decode_control(buf); // totality: must not throw
    }
    return true;
}

bool prop_select_mode_exhaustion() {
    const std::uint64_t threshold = 1'000'000;
    for (int codec = -1; codec <= 2; ++codec)
        for (bool critical : {false, true})
            for (QosPreference qos :
                 {QosPreference::SecurityFirst, QosPreference::BandwidthFirst})
                for (std::uint64_t pool :
                     {std::uint64_t{0}, std::uint64_t{64}, std::uint64_t{1'000'000}})
                    for (std::uint64_t traffic : {std::uint64_t{0}, threshold, threshold + 1})
                        for (bool alive : {false, true}) {
                            ChannelPolicy policy;
                            policy.critical = critical;
                            policy.qos = qos;
                            if (codec >= 0)
                                policy.explicit_codec = static_cast<CodecKind>(codec);
                            const EncryptionMode mode = select_mode(policy, pool, traffic, alive);
                            if (!policy.explicit_codec) {
                                if (mode == EncryptionMode::Transparent)
                                    return false;
                                if ((pool == 0 || !alive) && mode == EncryptionMode::DirectOtp)
                                    return false;
                                if (critical && pool > 0 &&
                                    mode < EncryptionMode::QuantumWrappedClassical)
                                    return false;
                                if (pool == 0 && mode != EncryptionMode::ClassicalOnly)
                                    return false;
                            }
                        }
    return true;
}

bool prop_deterministic_replay() {
    const Scenario sc = Scenario::parse_file(fixture("two_node.scn"));
    const std::string a = render_report(run_scenario(sc), ReportFormat::Lines);
    const std::string b = render_report(run_scenario(sc), ReportFormat::Lines);
    return !a.empty() && a == b;
}

void check_properties() {
    const bool otp = prop_otp_involution();
    const bool pool = prop_keystore_conservation();
    const bool table = prop_flow_table_oracle();
    const bool wire = prop_control_roundtrip_and_fuzz();
    const bool modes = prop_select_mode_exhaustion();
    const bool replay = prop_deterministic_replay();
    std::ostringstream detail;
    detail << "otp=" << otp << " pool=" << pool << " table=" << table << " wire=" << wire
           << " modes=" << modes << " replay=" << replay;
    criterion(7, "property suites: involution, conservation, oracles, totality, determinism",
              otp && pool && table && wire && modes && replay, detail.str());
}

} // namespace

int main() {
    check_calibration();
    check_discard_rule();
    check_control_replay();
    check_reroute_policy();
    check_triple_cut();
    check_trusted_repeater();
    check_properties();
    if (failures == 0)
        std::cout << "all acceptance criteria passed\n";
    else
        std::cout << failures << " acceptance criteria FAILED\n";
    return failures;
}
