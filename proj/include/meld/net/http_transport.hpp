#pragma once

#include "meld/node/org_node.hpp"

#include <memory>
#include <optional>
#include <string>
#include <thread>

namespace meld::net {

// Real-socket transport behind the same frame protocol, for smoke tests
// only; every benchmark and acceptance run uses the deterministic simulator.
class HttpOrgServer {
public:
    HttpOrgServer(node::OrgNode& node, int port);
    ~HttpOrgServer();

    HttpOrgServer(const HttpOrgServer&) = delete;
    HttpOrgServer& operator=(const HttpOrgServer&) = delete;

    int port() const { return port_; }
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    int port_;
};

std::optional<proto::Frame> http_call(const std::string& host, int port,
                                      const proto::Frame& frame, double timeout_s = 5.0);

} // namespace meld::net
