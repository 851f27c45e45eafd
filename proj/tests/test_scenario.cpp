#include "qsdn/scenario.hpp"

#include <doctest.h>

#include <string>

using namespace qsdn;

namespace {

std::string fixture(const char* name) { return std::string(SCENARIO_DIR) + "/" + name; }

const char* kMinimal = "name t\nduration 1\ntick 0.5\nseed 4\n"
                       "node 1 endpoint\nnode 2 endpoint\n"
                       "link 1 1 2 length_km=1.63\n"
                       "pair 1 alice=1 bob=2 link=1\n"
                       "channel 1 src=1 dst=2 traffic_bps=8000\n";

} // namespace

TEST_CASE("scenario parser reads every section") {
    Scenario sc = Scenario::parse("name demo\nduration 4\ntick 0.2\nseed 77\n"
                                  "block_bytes 32\nloss_noise_db 0.05\n"
                                  "bootstrap_secret DEADBEEF\n"
                                  "node 1 endpoint\nnode 2 endpoint\nnode 3 trusted_relay\n"
                                  "link 1 1 3 length_km=1\nlink 2 3 2 length_km=1\n"
                                  "pair 1 alice=1 bob=3 link=1 mu=0.3\n"
                                  "pair 2 alice=3 bob=2 link=2 eavesdropper=yes\n"
                                  "channel 1 src=1 dst=2 pairs=1,2 relay=3 critical=1 "
                                  "qos=bandwidth_first traffic_bps=5000 frame_bytes=128\n"
                                  "mu_policy 1 0:0.2 10:0.5\n"
                                  "at 2 fault 1 add_loss 6\n"
                                  "at 1 eavesdrop 2 off\n"
                                  "at 3 traffic 1 99000\n");
    CHECK(sc.name == "demo");
    CHECK(sc.seed == 77);
    CHECK(sc.block_bytes == 32);
    CHECK(sc.bootstrap_secret == Bytes{0xDE, 0xAD, 0xBE, 0xEF});
    REQUIRE(sc.pairs.size() == 2);
    CHECK(sc.pairs[0].mu == doctest::Approx(0.3));
    CHECK(sc.pairs[1].eavesdropper);
    REQUIRE(sc.channels.size() == 1);
    CHECK(sc.channels[0].pair_ids == std::vector<ChannelId>{1, 2});
    CHECK(sc.channels[0].relay == NodeId{3});
    CHECK(sc.channels[0].policy.critical);
    CHECK(sc.channels[0].policy.qos == QosPreference::BandwidthFirst);
    CHECK(sc.mu_policies.at(1).steps.size() == 2);
    REQUIRE(sc.timeline.size() == 3); // sorted by time
    CHECK(sc.timeline[0].kind == TimelineEvent::Kind::EavesdropOff);
    CHECK(sc.timeline[1].kind == TimelineEvent::Kind::FaultAddLoss);
    CHECK(sc.timeline[1].value == doctest::Approx(6.0));
    CHECK(sc.timeline[2].kind == TimelineEvent::Kind::Traffic);
}

TEST_CASE("scenario parser rejects malformed input") {
    CHECK_THROWS_AS(Scenario::parse("bogus 1\n"), ConfigError);
    CHECK_THROWS_AS(Scenario::parse("duration 0\nnode 1 endpoint\n"), ConfigError);
    CHECK_THROWS_AS(Scenario::parse("channel 1 nonsense=1\n"), ConfigError);
    CHECK_THROWS_AS(Scenario::parse("at 1 fault 1 implode\n"), ConfigError);
    CHECK_THROWS_AS(Scenario::parse("node 1 endpoint\n"), ConfigError); // no channels
    CHECK_THROWS_AS(Scenario::parse_file("/nonexistent.scn"), ConfigError);
}

TEST_CASE("unconfigured channel pairs default to the like-named pair") {
    Scenario sc = Scenario::parse(kMinimal);
    CHECK(sc.channels[0].pair_ids == std::vector<ChannelId>{1});
}

TEST_CASE("identical seeds give byte-identical reports, in both formats") {
    Scenario sc = Scenario::parse_file(fixture("two_node.scn"));
    const RunReport a = run_scenario(sc);
    const RunReport b = run_scenario(sc);
    CHECK(render_report(a, ReportFormat::Lines) == render_report(b, ReportFormat::Lines));
    CHECK(render_report(a, ReportFormat::Table) == render_report(b, ReportFormat::Table));

    Scenario other = sc;
    other.seed = sc.seed + 1;
    const RunReport c = run_scenario(other);
    // aggregate physics identical, but the sampled QBER stream differs
    CHECK(c.key_bits_produced == a.key_bits_produced);
    CHECK(render_report(c, ReportFormat::Lines) != render_report(a, ReportFormat::Lines));
}

TEST_CASE("bundled eavesdrop scenario discards keys and downgrades the channel") {
    Scenario sc = Scenario::parse_file(fixture("eavesdrop.scn"));
    const RunReport r = run_scenario(sc);
    CHECK(r.all_ok());
    CHECK(r.discard_events > 0);
    CHECK(r.key_bits_discarded > 0);
    bool downgraded = false;
    for (const ModeChange& t : r.transitions)
        downgraded |= t.from == EncryptionMode::DirectOtp &&
                      t.to == EncryptionMode::ClassicalOnly && t.time >= 5.0 && t.time < 5.2;
    CHECK(downgraded);
    // traffic continued under the classical codec after the downgrade
    CHECK(r.bytes_by_codec[static_cast<int>(CodecKind::Classical)] > 0);
    CHECK(r.frames_delivered == r.frames_sent);
}

TEST_CASE("bundled reroute scenario moves the route onto the relay path") {
    Scenario sc = Scenario::parse_file(fixture("reroute.scn"));
    const RunReport r = run_scenario(sc);
    CHECK(r.all_ok());
    bool rerouted = false;
    for (const std::string& line : r.route_log)
        rerouted |= line.find("LossOptimal") != std::string::npos;
    CHECK(rerouted);
}

TEST_CASE("live mode over loopback HTTP matches the in-process aggregates") {
    Scenario sc = Scenario::parse_file(fixture("two_node.scn"));
    const RunReport batch = run_scenario(sc, /*live=*/false);
    const RunReport live = run_scenario(sc, /*live=*/true);
    CHECK(live.all_ok());
    CHECK(live.key_bits_produced == batch.key_bits_produced);
    CHECK(live.frames_sent == batch.frames_sent);
    CHECK(live.frames_delivered == batch.frames_delivered);
    CHECK(live.integrity_failures == 0);
}
