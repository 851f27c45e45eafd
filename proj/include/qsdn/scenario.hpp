#pragma once

#include "qsdn/controller.hpp"

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace qsdn {

struct PairConfig {
    ChannelId id{};
    NodeId alice{};
    NodeId bob{};
    LinkId link{};
    double mu = 0.2;
    bool eavesdropper = false;
};

struct ChannelConfig {
    ChannelId id{};
    NodeId src{};
    NodeId dst{};
    std::vector<ChannelId> pair_ids; // one segment per pair, in path order
    std::optional<NodeId> relay;
    ChannelPolicy policy{};
    std::uint64_t offered_bps = 0; // application traffic
    std::size_t frame_bytes = 256;
};

struct TimelineEvent {
    enum class Kind { FaultCut, FaultAddLoss, FaultClear, EavesdropOn, EavesdropOff, Traffic };
    SimTime time = 0.0;
    Kind kind = Kind::FaultCut;
    std::uint16_t target = 0; // link id for faults, pair id for eavesdrop,
                              // channel id for traffic
    double value = 0.0;       // dB for AddLoss, bits/s for Traffic
};

// Batch scenario description, parsed from a line-oriented text file
// (schema in docs/FORMATS.md). Seeded runs are bit-reproducible.
struct Scenario {
    std::string name = "scenario";
    double duration_s = 10.0;
    double tick_s = 0.1;
    std::uint64_t seed = 1;
    std::size_t block_bytes = 16;
    double loss_noise_db = 0.0;
    Bytes bootstrap_secret = {0x71, 0x73, 0x64, 0x6E}; // per-fabric pre-shared
    TopologySpec topology;
    std::vector<PairConfig> pairs;
    std::vector<ChannelConfig> channels;
    std::map<ChannelId, MuPolicy> mu_policies;
    std::vector<TimelineEvent> timeline; // kept sorted by time
    QkdModelParams qkd{};
    ControllerConfig controller{};

    static Scenario parse(const std::string& text);
    static Scenario parse_file(const std::string& path);
};

struct RunReport {
    std::string scenario;
    std::uint64_t seed = 0;
    bool live = false;
    double duration_s = 0.0;

    std::vector<ModeChange> transitions;
    std::array<std::uint64_t, 3> bytes_by_codec{}; // indexed by CodecKind value

    std::uint64_t key_bits_produced = 0;
    std::uint64_t key_bits_consumed = 0;
    std::uint64_t key_bits_discarded = 0;
    std::uint64_t discard_events = 0;

    double sifted_rate_bps = 0.0;
    double qber_mean = 0.0;
    std::uint64_t qber_samples = 0;

    std::uint64_t frames_sent = 0;
    std::uint64_t frames_delivered = 0;
    std::uint64_t frames_dropped = 0;
    std::uint64_t frames_starved = 0;
    std::uint64_t integrity_failures = 0;

    // wire-capture spot checks
    std::uint64_t transparent_checked = 0;
    std::uint64_t transparent_plain_on_wire = 0;
    std::uint64_t otp_checked = 0;
    std::uint64_t otp_plain_on_wire = 0;

    // per-pool consumption, labelled "<pair>/tx" etc., in deterministic order
    std::vector<std::pair<std::string, std::uint64_t>> pool_consumed_bits;

    std::vector<std::string> route_log;
    std::vector<std::string> relay_log;
    std::uint64_t relay_exposed_frames = 0;

    std::vector<std::string> check_failures;
    bool all_ok() const { return check_failures.empty(); }
};

enum class ReportFormat { Table, Lines };

std::string render_report(const RunReport& report, ReportFormat format);

RunReport run_scenario(const Scenario& scenario, bool live = false);

} // namespace qsdn
