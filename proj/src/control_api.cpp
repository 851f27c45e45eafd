#include "qsdn/control_api.hpp"

#include <httplib.h>

#include <charconv>
#include <sstream>
#include <vector>

namespace qsdn {

namespace {

std::vector<std::string> split_path(const std::string& path) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : path) {
        if (c == '/') {
            if (!cur.empty())
                parts.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty())
        parts.push_back(std::move(cur));
    return parts;
}

bool parse_uint(const std::string& s, unsigned long& out) {
    if (s.empty())
        return false;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && p == s.data() + s.size();
}

} // namespace

struct ControlApi::Impl {
    Impl(Controller& ctl, std::function<void(const CommandBatch&)> s, ApiOptions opts)
        : controller(ctl), sink(std::move(s)), options(std::move(opts)) {}

    Controller& controller;
    std::function<void(const CommandBatch&)> sink;
    ApiOptions options;
    std::function<SimTime()> clock = [] { return SimTime{0}; };
    std::mutex mutex; // serializes all controller access
    httplib::Server server;
    std::thread server_thread;

    void dispatch(const CommandBatch& batch) {
        if (sink)
            sink(batch);
    }
};

ControlApi::ControlApi(Controller& controller, std::function<void(const CommandBatch&)> sink,
                       ApiOptions options)
    : impl_(std::make_unique<Impl>(controller, std::move(sink), std::move(options))) {}

ControlApi::~ControlApi() { stop(); }

void ControlApi::set_clock(std::function<SimTime()> clock) {
    impl_->clock = std::move(clock);
}

ControlApi::Response ControlApi::handle(const std::string& method, const std::string& path,
                                        const std::string& body) {
    std::lock_guard lock(impl_->mutex);
    Controller& ctl = impl_->controller;
    const SimTime now = impl_->clock();
    const auto parts = split_path(path);

    if (method == "GET" && parts.size() == 3 && parts[0] == "qchannel") {
        unsigned long channel, status;
        if (!parse_uint(parts[1], channel) || !parse_uint(parts[2], status) || status > 1)
            return {400, "bad request"};
        if (!ctl.has_channel(static_cast<ChannelId>(channel)))
            return {404, "unknown channel"};
        impl_->dispatch(ctl.on_qchannel_status(static_cast<ChannelId>(channel),
                                               static_cast<int>(status), now));
        return {200, "OK"};
    }

    if (method == "POST" && parts.size() == 2 && parts[0] == "qkey") {
        unsigned long channel;
        if (!parse_uint(parts[1], channel))
            return {400, "bad request"};
        if (!ctl.has_channel(static_cast<ChannelId>(channel)))
            return {404, "unknown channel"};
        try {
            impl_->dispatch(ctl.on_qkey(static_cast<ChannelId>(channel), body, now));
        } catch (const InvalidHex&) {
            return {400, "invalid hex key"};
        }
        return {200, "OK"};
    }

    if (method == "GET" && parts.size() == 1 && parts[0] == "map")
        return {200, ctl.render_map()};

    if (method == "POST" && parts.size() == 2 && parts[0] == "fault") {
        unsigned long link;
        if (!parse_uint(parts[1], link))
            return {400, "bad request"};
        if (!ctl.topology().has_link(static_cast<LinkId>(link)))
            return {404, "unknown link"};
        Fault fault;
        std::istringstream in(body);
        std::string kind;
        in >> kind;
        if (kind == "cut") {
            fault = Fault::cut();
        } else if (kind == "clear") {
            fault = Fault::clear();
        } else if (kind == "add_loss") {
            double db = -1;
            if (!(in >> db) || db < 0)
                return {400, "bad fault body"};
            fault = Fault::add_loss(db);
        } else {
            return {400, "bad fault body"};
        }
        const LinkState& st = inject_fault(ctl.topology(), static_cast<LinkId>(link), fault);
        LossReport report;
        report.link = static_cast<LinkId>(link);
        report.timestamp = now;
        if (st.status == LinkStatus::Down)
            report.unreachable = true;
        else
            report.measured_loss_db = st.total_loss_db();
        impl_->dispatch(ctl.on_loss_report(report, now));
        return {200, "OK"};
    }

    if (method == "GET" && parts.size() == 2 && parts[0] == "status") {
        unsigned long channel;
        if (!parse_uint(parts[1], channel))
            return {400, "bad request"};
        const auto id = static_cast<ChannelId>(channel);
        if (!ctl.has_channel(id))
            return {404, "unknown channel"};
        std::ostringstream out;
        const RouteDecision& route = ctl.route(id);
        out << "mode=" << mode_name(ctl.mode(id)) << " route=" << reason_name(route.reason)
            << " path=";
        for (std::size_t i = 0; i < route.path.size(); ++i)
            out << (i ? "," : "") << route.path[i];
        out << " pool_bits=" << ctl.pool_bits(id);
        return {200, out.str()};
    }

    return {404, "not found"};
}

namespace {

void bind_routes(ControlApi& api, httplib::Server& server, const ApiOptions& options) {
    auto wrap = [&api, &options](const httplib::Request& req, httplib::Response& res) {
        if (!options.auth_token.empty() &&
            req.get_header_value("X-Auth-Token") != options.auth_token) {
            res.status = 401;
            res.set_content("unauthorized", "text/plain");
            return;
        }
        auto out = api.handle(req.method, req.path, req.body);
        res.status = out.status;
        res.set_content(out.body, "text/plain");
    };
    server.Get(".*", wrap);
    server.Post(".*", wrap);
}

} // namespace

int ControlApi::listen_any_port(const std::string& host) {
    bind_routes(*this, impl_->server, impl_->options);
    const int port = impl_->server.bind_to_any_port(host);
    if (port < 0)
        throw ConfigError("failed to bind control API");
    impl_->server_thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return port;
}

void ControlApi::listen(const std::string& host, int port) {
    bind_routes(*this, impl_->server, impl_->options);
    impl_->server.listen(host, port);
}

void ControlApi::stop() {
    if (impl_->server.is_running())
        impl_->server.stop();
    if (impl_->server_thread.joinable())
        impl_->server_thread.join();
}

} // namespace qsdn
