#pragma once

#include "qsdn/controller.hpp"

#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

namespace qsdn {

struct ApiOptions {
    std::string auth_token; // empty = unauthenticated, as in the testbed
};

// REST control surface. Requests are serialized onto the controller through
// one mutex, preserving its single-event-loop semantics. Endpoint paths:
//
//   GET  /qchannel/{channel_id}/{status}   status 0|1
//   POST /qkey/{channel_id}                body = hex key
//   GET  /map
//   POST /fault/{link_id}                  body = cut | clear | add_loss <db>
//   GET  /status/{channel_id}
class ControlApi {
public:
    // Command batches produced by dispatched events are handed to `sink`
    // (the scenario runner applies them to its switches); a null sink drops
    // them.
    ControlApi(Controller& controller, std::function<void(const CommandBatch&)> sink,
               ApiOptions options = {});
    ~ControlApi();

    ControlApi(const ControlApi&) = delete;
    ControlApi& operator=(const ControlApi&) = delete;

    // Binds to an ephemeral port on `host`, serves on a background thread,
    // returns the port.
    int listen_any_port(const std::string& host);
    void listen(const std::string& host, int port); // blocking
    void stop();

    // Direct dispatch used by unit tests and the in-process runner.
    struct Response {
        int status = 200;
        std::string body;
    };
    Response handle(const std::string& method, const std::string& path, const std::string& body);

    void set_clock(std::function<SimTime()> clock);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace qsdn
