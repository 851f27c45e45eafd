// Command-line front end for the fabric: batch scenario runs and a live REST
// control node.
#include "qsdn/control_api.hpp"
#include "qsdn/scenario.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

int main(int argc, char** argv) {
    CLI::App app{"software-defined quantum-network fabric emulator"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string format = "table";
    bool live = false;

    CLI::App* run = app.add_subcommand("run", "run a scenario file and print the report");
    run->add_option("scenario", scenario_path, "scenario file")->required();
    run->add_option("--seed", seed, "override the scenario seed")
        ->each([&](const std::string&) { seed_set = true; });
    run->add_option("--format", format, "report format")
        ->check(CLI::IsMember({"table", "lines"}));
    run->add_flag("--live", live, "serve the control REST API over real loopback HTTP");

    std::string host = "127.0.0.1";
    int port = 8080;
    std::string serve_path;
    std::string token;
    CLI::App* serve =
        app.add_subcommand("serve", "load a scenario's fabric and serve the REST API");
    serve->add_option("scenario", serve_path, "scenario file")->required();
    serve->add_option("--host", host, "bind address");
    serve->add_option("--port", port, "TCP port");
    serve->add_option("--token", token, "require X-Auth-Token on every request");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            qsdn::Scenario sc = qsdn::Scenario::parse_file(scenario_path);
            if (seed_set)
                sc.seed = seed;
            const qsdn::RunReport report = qsdn::run_scenario(sc, live);
            std::cout << qsdn::render_report(report, format == "lines"
                                                         ? qsdn::ReportFormat::Lines
                                                         : qsdn::ReportFormat::Table);
            return report.all_ok() ? 0 : 1;
        }

        // serve: build the topology and controller from the scenario and block
        // on the REST API; key pools start empty and fill through POST /qkey.
        qsdn::Scenario sc = qsdn::Scenario::parse_file(serve_path);
        qsdn::Topology topo = qsdn::build_topology(sc.topology);
        qsdn::Controller controller(&topo, sc.controller);

        std::vector<std::unique_ptr<qsdn::QcPair>> pairs;
        std::map<qsdn::ChannelId, std::pair<std::unique_ptr<qsdn::KeyPool>,
                                            std::unique_ptr<qsdn::KeyPool>>> pools;
        for (const qsdn::PairConfig& pc : sc.pairs) {
            auto pair = std::make_unique<qsdn::QcPair>();
            pair->id = pc.id;
            pair->alice = pc.alice;
            pair->bob = pc.bob;
            pair->link = pc.link;
            pair->mu = pc.mu;
            qsdn::MuPolicy policy;
            if (auto it = sc.mu_policies.find(pc.id); it != sc.mu_policies.end())
                policy = it->second;
            controller.register_pair(pair.get(), policy);
            pools.emplace(pc.id, std::make_pair(std::make_unique<qsdn::KeyPool>(pc.id),
                                                std::make_unique<qsdn::KeyPool>(pc.id)));
            pairs.push_back(std::move(pair));
        }
        for (const qsdn::ChannelConfig& cc : sc.channels) {
            qsdn::ChannelSetup setup;
            setup.id = cc.id;
            setup.src = cc.src;
            setup.dst = cc.dst;
            setup.policy = cc.policy;
            setup.relay = cc.relay;
            for (qsdn::ChannelId pid : cc.pair_ids) {
                auto& mirror = pools.at(pid);
                for (auto& owned : pairs)
                    if (owned->id == pid)
                        setup.segments.push_back(
                            {pid, owned.get(), mirror.first.get(), mirror.second.get()});
            }
            controller.add_channel(std::move(setup));
        }

        qsdn::ApiOptions options;
        options.auth_token = token;
        qsdn::ControlApi api(
            controller,
            [](const qsdn::CommandBatch& batch) {
                for (const qsdn::Command& cmd : batch.commands)
                    if (const auto* note = std::get_if<qsdn::NoteCommand>(&cmd))
                        std::cerr << "note: " << note->text << '\n';
            },
            options);
        std::cerr << "serving on " << host << ":" << port << '\n';
        api.listen(host, port);
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
