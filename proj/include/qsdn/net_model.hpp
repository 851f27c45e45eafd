#pragma once

#include "qsdn/types.hpp"

#include <map>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace qsdn {

enum class NodeRole { Endpoint, TrustedRelay };
enum class LinkStatus { Up, Degraded, Down };

struct LinkState {
    LinkId id{};
    NodeId a{};
    NodeId b{};
    double length_km = 0.0;
    double base_loss_db = 0.0;
    double extra_loss_db = 0.0;
    LinkStatus status = LinkStatus::Up;

    double total_loss_db() const { return base_loss_db + extra_loss_db; }
    bool connects(NodeId n) const { return a == n || b == n; }
    NodeId other(NodeId n) const { return n == a ? b : a; }
};

struct Topology {
    std::map<NodeId, NodeRole> nodes;
    std::map<LinkId, LinkState> links;

    bool has_node(NodeId n) const { return nodes.count(n) != 0; }
    bool has_link(LinkId l) const { return links.count(l) != 0; }
    const LinkState& link(LinkId l) const;
    LinkState& link(LinkId l);
};

// Emulated reflectometer reading. A Down link is flagged unreachable;
// measured_loss_db is meaningless in that case and must not be used.
struct LossReport {
    LinkId link{};
    double measured_loss_db = 0.0;
    bool unreachable = false;
    SimTime timestamp = 0.0;
};

struct LinkSpec {
    LinkId id{};
    NodeId a{};
    NodeId b{};
    double length_km = 0.0;
    double attenuation_db_per_km = 0.2; // standard SMF figure
    double insertion_db = 0.0;
};

// Parsed from the topology file (see docs/FORMATS.md for the schema).
struct TopologySpec {
    std::vector<std::pair<NodeId, NodeRole>> nodes;
    std::vector<LinkSpec> links;

    static TopologySpec parse(const std::string& text);
};

Topology build_topology(const TopologySpec& spec);

LossReport measure_loss(const Topology& topo, LinkId link, double noise_bound_db,
                        std::mt19937_64& rng, SimTime now = 0.0);

struct Fault {
    enum class Kind { Cut, AddLoss, Clear };
    Kind kind = Kind::Clear;
    double add_db = 0.0;

    static Fault cut() { return {Kind::Cut, 0.0}; }
    static Fault add_loss(double db) { return {Kind::AddLoss, db}; }
    static Fault clear() { return {Kind::Clear, 0.0}; }
};

LinkState& inject_fault(Topology& topo, LinkId link, const Fault& fault);

// Sum of total loss over a connected chain of Up links.
double path_loss(const Topology& topo, std::span<const LinkId> path);

} // namespace qsdn
