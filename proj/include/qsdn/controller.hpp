#pragma once

#include "qsdn/codec.hpp"
#include "qsdn/flow_switch.hpp"
#include "qsdn/keystore.hpp"
#include "qsdn/net_model.hpp"
#include "qsdn/qkd.hpp"

#include <deque>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace qsdn {

// Ordered by security level; comparisons rely on the enum values.
enum class EncryptionMode : int {
    Transparent = 0,
    ClassicalOnly = 1,
    QuantumWrappedClassical = 2,
    DirectOtp = 3,
};

const char* mode_name(EncryptionMode m);

enum class QosPreference { SecurityFirst, BandwidthFirst };

struct ChannelPolicy {
    ChannelId channel{};
    bool critical = false;
    QosPreference qos = QosPreference::SecurityFirst;
    std::optional<CodecKind> explicit_codec; // administrator override, dominates
    std::uint64_t traffic_threshold_bps = 1'000'000;
    double direct_preference_margin_db = 3.0; // delta
    bool key_relay_only = false;              // trusted-relay mode flag
};

// Pure decision table, total on its domain. Critical channels with key
// material left never drop below QuantumWrappedClassical; Transparent is
// reachable only through the explicit-codec override.
EncryptionMode select_mode(const ChannelPolicy& policy, std::uint64_t pool_bits,
                           std::uint64_t traffic_bps, bool quantum_path_alive);

enum class RouteReason { Direct, LossOptimal, FailoverReserve, NoQuantumPath };

const char* reason_name(RouteReason r);

struct RouteDecision {
    ChannelId channel{};
    std::vector<LinkId> path; // empty iff NoQuantumPath
    std::vector<NodeId> via_trusted;
    RouteReason reason = RouteReason::NoQuantumPath;
    double loss_db = 0.0;
};

// Loss-optimal routing over Up links. The direct (single-hop) link is kept
// unless an alternative through trusted relays beats it by more than the
// policy margin delta.
RouteDecision compute_route(const Topology& topo, NodeId src, NodeId dst,
                            const ChannelPolicy& policy);

enum class RelayMode { DataRelay, KeyRelayOnly };

struct RelayPlan {
    ChannelId channel{};
    NodeId relay{};
    RelayMode mode = RelayMode::DataRelay;
    ChannelId segment1_pair{};
    ChannelId segment2_pair{};
};

// --- controller commands -----------------------------------------------------

struct FlowModCommand {
    NodeId target_switch{};
    FlowModBody::Cmd cmd = FlowModBody::Cmd::Add;
    FlowRule rule{};
};

struct SetMuCommand {
    ChannelId pair{};
    double mu = 0.0;
};

// Optical-switch instruction: move a QC pair's quantum signal to a fiber.
struct SetPairLinkCommand {
    ChannelId pair{};
    LinkId link{};
};

struct NoteCommand {
    std::string text;
};

using Command = std::variant<FlowModCommand, SetMuCommand, SetPairLinkCommand, NoteCommand>;

struct CommandBatch {
    std::uint64_t map_version = 0;
    std::vector<Command> commands;
};

struct ModeChange {
    SimTime time = 0.0;
    ChannelId channel{};
    EncryptionMode from = EncryptionMode::ClassicalOnly;
    EncryptionMode to = EncryptionMode::ClassicalOnly;
    std::string reason;
};

// --- controller ----------------------------------------------------------------

struct ControllerConfig {
    double reroute_threshold_db = 10.0;
    std::uint64_t reentry_watermark_bits = 256; // 2x default key block
    double traffic_window_s = 10.0;
    QkdModelParams qkd;
};

struct ChannelSegment {
    ChannelId pair_id{};
    QcPair* pair = nullptr;
    KeyPool* tx_pool = nullptr; // transmitter-side mirror
    KeyPool* rx_pool = nullptr; // receiver-side mirror
};

struct ChannelSetup {
    ChannelId id{};
    NodeId src{};
    NodeId dst{};
    ChannelPolicy policy{};
    std::vector<ChannelSegment> segments;
    std::optional<NodeId> relay;
    std::uint32_t app_dst_addr = 0; // OUT point the flow rules match on
    std::uint16_t app_dst_port = 0;
};

// Centralized policy engine. All state mutation goes through the on_* event
// handlers, which emit one atomic command batch each; identical event
// sequences produce identical command sequences.
class Controller {
public:
    Controller(Topology* topo, ControllerConfig cfg);

    void register_entrance(NodeId node, EntrancePoint point);
    const EntrancePoint* entrance(NodeId node, CodecKind kind, CodecDirection dir) const;

    void add_channel(ChannelSetup setup);
    bool has_channel(ChannelId id) const;
    bool has_pair(ChannelId pair_id) const;
    void register_pair(QcPair* pair, MuPolicy policy);

    CommandBatch on_qchannel_status(ChannelId channel, int status, SimTime now);
    CommandBatch on_qkey(ChannelId channel, std::string_view hex, SimTime now);
    CommandBatch on_loss_report(const LossReport& report, SimTime now);
    CommandBatch on_channel_dead(ChannelId channel, SimTime now);
    CommandBatch on_traffic_sample(ChannelId channel, std::uint64_t bytes, SimTime now);
    // raised by an OTP encoder that could not obtain pad material
    CommandBatch on_key_starvation(ChannelId channel, SimTime now);
    CommandBatch evaluate_channel(ChannelId channel, SimTime now);
    CommandBatch evaluate_all(SimTime now);

    EncryptionMode mode(ChannelId channel) const;
    const RouteDecision& route(ChannelId channel) const;
    std::uint64_t pool_bits(ChannelId channel) const;
    std::uint64_t traffic_bps(ChannelId channel) const;
    bool quantum_eligible(ChannelId channel) const;

    RelayPlan plan_trusted_relay(ChannelId channel) const;

    std::uint64_t map_version() const { return map_version_; }
    const std::vector<std::string>& decision_log() const { return decision_log_; }
    const std::vector<ModeChange>& mode_changes() const { return mode_changes_; }
    const Topology& topology() const { return *topo_; }
    Topology& topology() { return *topo_; }
    std::vector<ChannelId> channel_ids() const;

    std::string render_map() const;

private:
    struct ChannelRuntime {
        ChannelSetup setup;
        EncryptionMode mode = EncryptionMode::ClassicalOnly;
        bool quantum_eligible = true;
        bool starvation_downgrade = false;
        bool rules_installed = false;
        RouteDecision route;
        std::deque<std::pair<SimTime, std::uint64_t>> traffic_samples;
        std::uint64_t traffic_bps = 0;
    };

    struct PairRuntime {
        QcPair* pair = nullptr;
        MuPolicy mu_policy;
    };

    ChannelRuntime& channel(ChannelId id);
    const ChannelRuntime& channel(ChannelId id) const;

    bool quantum_path_alive(const ChannelRuntime& ch) const;
    std::uint64_t channel_pool_bits(const ChannelRuntime& ch) const;
    void emit_flow_mods(ChannelRuntime& ch, CommandBatch& batch);
    CommandBatch evaluate_locked(ChannelRuntime& ch, SimTime now, const char* trigger);
    void evaluate_into(ChannelRuntime& ch, SimTime now, const char* trigger,
                       CommandBatch& batch);
    void log_decision(SimTime now, const std::string& text);
    std::uint64_t cookie_for(ChannelId channel, NodeId node) const;

    Topology* topo_;
    ControllerConfig cfg_;
    std::map<ChannelId, ChannelRuntime> channels_;
    std::map<ChannelId, PairRuntime> pairs_;
    std::map<std::tuple<NodeId, CodecKind, CodecDirection>, EntrancePoint> entrances_;
    std::map<LinkId, double> last_reroute_loss_;
    std::uint64_t map_version_ = 0;
    std::vector<std::string> decision_log_;
    std::vector<ModeChange> mode_changes_;
};

} // namespace qsdn
