#include "qsdn/net_model.hpp"

#include <cctype>
#include <sstream>

namespace qsdn {

const LinkState& Topology::link(LinkId l) const {
    auto it = links.find(l);
    if (it == links.end())
        throw ConfigError("unknown link " + std::to_string(l));
    return it->second;
}

LinkState& Topology::link(LinkId l) {
    auto it = links.find(l);
    if (it == links.end())
        throw ConfigError("unknown link " + std::to_string(l));
    return it->second;
}

namespace {

NodeRole parse_role(const std::string& s) {
    if (s == "endpoint")
        return NodeRole::Endpoint;
    if (s == "trusted_relay")
        return NodeRole::TrustedRelay;
    throw ConfigError("unknown node role '" + s + "'");
}

// key=value option on a link line
void apply_link_option(LinkSpec& link, const std::string& tok) {
    auto eq = tok.find('=');
    if (eq == std::string::npos)
        throw ConfigError("malformed link option '" + tok + "'");
    const std::string key = tok.substr(0, eq);
    const double value = std::stod(tok.substr(eq + 1));
    if (key == "length_km")
        link.length_km = value;
    else if (key == "attenuation_db_per_km")
        link.attenuation_db_per_km = value;
    else if (key == "insertion_db")
        link.insertion_db = value;
    else
        throw ConfigError("unknown link option '" + key + "'");
}

} // namespace

TopologySpec TopologySpec::parse(const std::string& text) {
    TopologySpec spec;
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
            if (kw == "node") {
                unsigned id;
                std::string role;
                if (!(ls >> id >> role))
                    throw ConfigError("expected: node <id> <endpoint|trusted_relay>");
                spec.nodes.emplace_back(static_cast<NodeId>(id), parse_role(role));
            } else if (kw == "link") {
                unsigned id, a, b;
                if (!(ls >> id >> a >> b))
                    throw ConfigError("expected: link <id> <nodeA> <nodeB> [opts]");
                LinkSpec link;
                link.id = static_cast<LinkId>(id);
                link.a = static_cast<NodeId>(a);
                link.b = static_cast<NodeId>(b);
                std::string tok;
                while (ls >> tok)
                    apply_link_option(link, tok);
                spec.links.push_back(link);
            } else {
                throw ConfigError("unknown keyword '" + kw + "'");
            }
        } catch (const std::exception& e) {
            throw ConfigError("topology line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return spec;
}

Topology build_topology(const TopologySpec& spec) {
    Topology topo;
    for (const auto& [id, role] : spec.nodes) {
        if (!topo.nodes.emplace(id, role).second)
            throw ConfigError("duplicate node id " + std::to_string(id));
    }
    for (const auto& ls : spec.links) {
        if (!topo.has_node(ls.a) || !topo.has_node(ls.b))
            throw ConfigError("link " + std::to_string(ls.id) + " references unknown node");
        if (ls.length_km < 0 || ls.attenuation_db_per_km < 0 || ls.insertion_db < 0)
            throw ConfigError("link " + std::to_string(ls.id) + " has negative parameter");
        LinkState st;
        st.id = ls.id;
        st.a = ls.a;
        st.b = ls.b;
        st.length_km = ls.length_km;
        st.base_loss_db = ls.length_km * ls.attenuation_db_per_km + ls.insertion_db;
        if (!topo.links.emplace(ls.id, st).second)
            throw ConfigError("duplicate link id " + std::to_string(ls.id));
    }
    return topo;
}

LossReport measure_loss(const Topology& topo, LinkId link, double noise_bound_db,
                        std::mt19937_64& rng, SimTime now) {
    const LinkState& st = topo.link(link);
    LossReport report;
    report.link = link;
    report.timestamp = now;
    if (st.status == LinkStatus::Down) {
        report.unreachable = true;
        return report;
    }
    double noise = 0.0;
    if (noise_bound_db > 0.0)
        noise = std::uniform_real_distribution<double>(-noise_bound_db, noise_bound_db)(rng);
    report.measured_loss_db = st.total_loss_db() + noise;
    return report;
}

LinkState& inject_fault(Topology& topo, LinkId link, const Fault& fault) {
    LinkState& st = topo.link(link);
    switch (fault.kind) {
    case Fault::Kind::Cut:
        st.status = LinkStatus::Down;
        break;
    case Fault::Kind::AddLoss:
        if (fault.add_db < 0)
            throw ConfigError("negative loss injection");
        st.extra_loss_db += fault.add_db;
        break;
    case Fault::Kind::Clear:
        st.extra_loss_db = 0.0;
        st.status = LinkStatus::Up;
        break;
    }
    return st;
}

double path_loss(const Topology& topo, std::span<const LinkId> path) {
    if (path.empty())
        return 0.0;
    double total = 0.0;
    for (LinkId id : path) {
        const LinkState& st = topo.link(id);
        if (st.status == LinkStatus::Down)
            throw ConfigError("path contains Down link " + std::to_string(id));
        total += st.total_loss_db();
    }
    if (path.size() > 1) {
        // Walk the chain, keeping the frontier node of the traversal.
        const LinkState& first = topo.link(path[0]);
        const LinkState& second = topo.link(path[1]);
        NodeId frontier;
        if (second.connects(first.a))
            frontier = first.a;
        else if (second.connects(first.b))
            frontier = first.b;
        else
            throw ConfigError("path links are not a connected chain");
        frontier = second.other(frontier);
        for (size_t i = 2; i < path.size(); ++i) {
            const LinkState& st = topo.link(path[i]);
            if (!st.connects(frontier))
                throw ConfigError("path links are not a connected chain");
            frontier = st.other(frontier);
        }
    }
    return total;
}

} // namespace qsdn
