#include "meld/net/http_transport.hpp"

#include <httplib.h>

namespace meld::net {

struct HttpOrgServer::Impl {
    httplib::Server server;
    std::thread thread;
};

HttpOrgServer::HttpOrgServer(node::OrgNode& node, int port)
    : impl_(std::make_unique<Impl>()), port_(port) {
    impl_->server.Post("/frame", [&node](const httplib::Request& req, httplib::Response& res) {
        auto frame = proto::Frame::decode_bytes(
            ByteSpan(reinterpret_cast<const std::uint8_t*>(req.body.data()), req.body.size()));
        auto response = node.handle_frame(frame);
        if (response) {
            Bytes bytes = response->encoded();
            res.set_content(std::string(bytes.begin(), bytes.end()),
                            "application/octet-stream");
        } else {
            res.status = 204;
        }
    });
    impl_->thread = std::thread([this] { impl_->server.listen("127.0.0.1", port_); });
    impl_->server.wait_until_ready();
}

HttpOrgServer::~HttpOrgServer() { stop(); }

void HttpOrgServer::stop() {
    if (impl_ && impl_->server.is_running())
        impl_->server.stop();
    if (impl_ && impl_->thread.joinable())
        impl_->thread.join();
}

std::optional<proto::Frame> http_call(const std::string& host, int port,
                                      const proto::Frame& frame, double timeout_s) {
    httplib::Client client(host, port);
    client.set_read_timeout(static_cast<time_t>(timeout_s),
                            static_cast<time_t>((timeout_s - int(timeout_s)) * 1e6));
    Bytes bytes = frame.encoded();
    auto res = client.Post("/frame", std::string(bytes.begin(), bytes.end()),
                           "application/octet-stream");
    if (!res || res->status != 200)
        return std::nullopt;
    return proto::Frame::decode_bytes(
        ByteSpan(reinterpret_cast<const std::uint8_t*>(res->body.data()), res->body.size()));
}

} // namespace meld::net
