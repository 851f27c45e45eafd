#include "qsdn/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace qsdn {

namespace {

// splits "key=value" tokens of a config line into a map
std::map<std::string, std::string> parse_options(std::istringstream& in) {
    std::map<std::string, std::string> opts;
    std::string tok;
    while (in >> tok) {
        auto eq = tok.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected key=value, got '" + tok + "'");
        opts[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    return opts;
}

bool truthy(const std::string& v) { return v == "1" || v == "true" || v == "yes"; }

std::vector<ChannelId> parse_id_list(const std::string& v) {
    std::vector<ChannelId> ids;
    std::istringstream in(v);
    std::string part;
    while (std::getline(in, part, ','))
        ids.push_back(static_cast<ChannelId>(std::stoul(part)));
    return ids;
}

void parse_channel(Scenario& sc, std::istringstream& in) {
    ChannelConfig ch;
    unsigned id;
    if (!(in >> id))
        throw ConfigError("expected: channel <id> key=value...");
    ch.id = static_cast<ChannelId>(id);
    ch.policy.channel = ch.id;
    for (const auto& [key, value] : parse_options(in)) {
        if (key == "src")
            ch.src = static_cast<NodeId>(std::stoul(value));
        else if (key == "dst")
            ch.dst = static_cast<NodeId>(std::stoul(value));
        else if (key == "pairs")
            ch.pair_ids = parse_id_list(value);
        else if (key == "relay")
            ch.relay = static_cast<NodeId>(std::stoul(value));
        else if (key == "critical")
            ch.policy.critical = truthy(value);
        else if (key == "qos")
            ch.policy.qos = value == "bandwidth_first" ? QosPreference::BandwidthFirst
                                                       : QosPreference::SecurityFirst;
        else if (key == "codec") {
            if (value == "quantum")
                ch.policy.explicit_codec = CodecKind::Quantum;
            else if (value == "classical")
                ch.policy.explicit_codec = CodecKind::Classical;
            else if (value == "transparent")
                ch.policy.explicit_codec = CodecKind::Transparent;
            else
                throw ConfigError("unknown codec '" + value + "'");
        } else if (key == "traffic_threshold_bps")
            ch.policy.traffic_threshold_bps = std::stoull(value);
        else if (key == "margin_db")
            ch.policy.direct_preference_margin_db = std::stod(value);
        else if (key == "key_relay_only")
            ch.policy.key_relay_only = truthy(value);
        else if (key == "traffic_bps")
            ch.offered_bps = std::stoull(value);
        else if (key == "frame_bytes")
            ch.frame_bytes = std::stoul(value);
        else
            throw ConfigError("unknown channel option '" + key + "'");
    }
    if (ch.pair_ids.empty())
        ch.pair_ids = {ch.id}; // direct channel fed by the like-named pair
    sc.channels.push_back(std::move(ch));
}

void parse_pair(Scenario& sc, std::istringstream& in) {
    PairConfig pair;
    unsigned id;
    if (!(in >> id))
        throw ConfigError("expected: pair <id> key=value...");
    pair.id = static_cast<ChannelId>(id);
    for (const auto& [key, value] : parse_options(in)) {
        if (key == "alice")
            pair.alice = static_cast<NodeId>(std::stoul(value));
        else if (key == "bob")
            pair.bob = static_cast<NodeId>(std::stoul(value));
        else if (key == "link")
            pair.link = static_cast<LinkId>(std::stoul(value));
        else if (key == "mu")
            pair.mu = std::stod(value);
        else if (key == "eavesdropper")
            pair.eavesdropper = truthy(value);
        else
            throw ConfigError("unknown pair option '" + key + "'");
    }
    sc.pairs.push_back(pair);
}

// mu_policy <pair> <threshold>:<mu> ...
void parse_mu_policy(Scenario& sc, std::istringstream& in) {
    unsigned id;
    if (!(in >> id))
        throw ConfigError("expected: mu_policy <pair> <threshold>:<mu>...");
    MuPolicy policy;
    std::string step;
    while (in >> step) {
        auto colon = step.find(':');
        if (colon == std::string::npos)
            throw ConfigError("expected threshold:mu, got '" + step + "'");
        policy.steps.emplace_back(std::stod(step.substr(0, colon)),
                                  std::stod(step.substr(colon + 1)));
    }
    sc.mu_policies[static_cast<ChannelId>(id)] = std::move(policy);
}

// at <time> fault <link> cut|clear|add_loss <db>
// at <time> eavesdrop <pair> on|off
// at <time> traffic <channel> <bps>
void parse_timeline(Scenario& sc, std::istringstream& in) {
    TimelineEvent ev;
    std::string what;
    unsigned target;
    if (!(in >> ev.time >> what >> target))
        throw ConfigError("expected: at <time> <fault|eavesdrop|traffic> <id> ...");
    ev.target = static_cast<std::uint16_t>(target);
    if (what == "fault") {
        std::string kind;
        if (!(in >> kind))
            throw ConfigError("fault needs cut|clear|add_loss");
        if (kind == "cut")
            ev.kind = TimelineEvent::Kind::FaultCut;
        else if (kind == "clear")
            ev.kind = TimelineEvent::Kind::FaultClear;
        else if (kind == "add_loss") {
            ev.kind = TimelineEvent::Kind::FaultAddLoss;
            if (!(in >> ev.value))
                throw ConfigError("add_loss needs a dB value");
        } else
            throw ConfigError("unknown fault kind '" + kind + "'");
    } else if (what == "eavesdrop") {
        std::string state;
        if (!(in >> state))
            throw ConfigError("eavesdrop needs on|off");
        ev.kind = state == "on" ? TimelineEvent::Kind::EavesdropOn
                                : TimelineEvent::Kind::EavesdropOff;
    } else if (what == "traffic") {
        ev.kind = TimelineEvent::Kind::Traffic;
        if (!(in >> ev.value))
            throw ConfigError("traffic needs a bits/s value");
    } else {
        throw ConfigError("unknown timeline event '" + what + "'");
    }
    sc.timeline.push_back(ev);
}

} // namespace

Scenario Scenario::parse(const std::string& text) {
    Scenario sc;
    std::string topology_text;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        std::istringstream ls(line);
        std::string kw;
        if (!(ls >> kw))
            continue;
        try {
            if (kw == "name")
                ls >> sc.name;
            else if (kw == "duration")
                ls >> sc.duration_s;
            else if (kw == "tick")
                ls >> sc.tick_s;
            else if (kw == "seed")
                ls >> sc.seed;
            else if (kw == "block_bytes")
                ls >> sc.block_bytes;
            else if (kw == "loss_noise_db")
                ls >> sc.loss_noise_db;
            else if (kw == "qber_sigma")
                ls >> sc.qkd.qber_sigma;
            else if (kw == "reroute_threshold_db")
                ls >> sc.controller.reroute_threshold_db;
            else if (kw == "reentry_watermark_bits")
                ls >> sc.controller.reentry_watermark_bits;
            else if (kw == "bootstrap_secret") {
                std::string hex;
                ls >> hex;
                sc.bootstrap_secret = decode_hex(hex);
            } else if (kw == "node" || kw == "link")
                topology_text += line + '\n';
            else if (kw == "pair")
                parse_pair(sc, ls);
            else if (kw == "channel")
                parse_channel(sc, ls);
            else if (kw == "mu_policy")
                parse_mu_policy(sc, ls);
            else if (kw == "at")
                parse_timeline(sc, ls);
            else
                throw ConfigError("unknown keyword '" + kw + "'");
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw ConfigError("scenario line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    sc.topology = TopologySpec::parse(topology_text);
    sc.controller.qkd = sc.qkd;
    std::stable_sort(sc.timeline.begin(), sc.timeline.end(),
                     [](const TimelineEvent& a, const TimelineEvent& b) { return a.time < b.time; });

    if (sc.duration_s <= 0 || sc.tick_s <= 0)
        throw ConfigError("duration and tick must be positive");
    if (sc.channels.empty())
        throw ConfigError("scenario has no channels");
    return sc;
}

Scenario Scenario::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open scenario file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

} // namespace qsdn
