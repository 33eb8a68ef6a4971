// Eigen must be parsed before httplib pulls in <resolv.h>, which defines _res.
#include "radsynth/study/service.hpp"

#include <thread>

#include "httplib.h"

namespace radsynth::study {

struct HttpServer::Impl {
    StudyService& service;
    httplib::Server server;
    std::thread thread;

    explicit Impl(StudyService& s) : service(s) {}
};

namespace {

void send(httplib::Response& res, const Reply& r) {
    res.status = r.status;
    res.set_content(r.body, r.content_type);
    res.set_header("Cache-Control", "no-store");
}

}  // namespace

HttpServer::HttpServer(StudyService& service, std::optional<std::filesystem::path> static_dir)
    : impl_(std::make_unique<Impl>(service)) {
    auto& srv = impl_->server;
    auto& svc = impl_->service;
    srv.Post("/api/sessions", [&svc](const httplib::Request& req, httplib::Response& res) {
        send(res, svc.create_session(req.body));
    });
    srv.Get(R"(/api/session/([A-Za-z0-9]+)/next)", [&svc](const httplib::Request& req, httplib::Response& res) {
        send(res, svc.next_item(req.matches[1]));
    });
    srv.Post(R"(/api/session/([A-Za-z0-9]+)/response)", [&svc](const httplib::Request& req, httplib::Response& res) {
        send(res, svc.submit(req.matches[1], req.body));
    });
    srv.Get(R"(/api/session/([A-Za-z0-9]+)/progress)", [&svc](const httplib::Request& req, httplib::Response& res) {
        send(res, svc.progress(req.matches[1]));
    });
    srv.Get(R"(/api/image/([a-z]+))", [&svc](const httplib::Request& req, httplib::Response& res) {
        send(res, svc.image(req.matches[1]));
    });
    srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr) {
        res.status = 500;
        res.set_content(R"({"error":"internal error"})", "application/json");
    });
    if (static_dir && !srv.set_mount_point("/", static_dir->string())) {
        throw std::runtime_error("static directory not found: " + static_dir->string());
    }
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start(const std::string& host, int port) {
    auto& srv = impl_->server;
    int bound = port;
    if (port == 0) {
        bound = srv.bind_to_any_port(host);
    } else if (!srv.bind_to_port(host, port)) {
        bound = -1;
    }
    if (bound < 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
    impl_->thread = std::thread([&srv] { srv.listen_after_bind(); });
    srv.wait_until_ready();
    return bound;
}

void HttpServer::wait() {
    if (impl_->thread.joinable()) impl_->thread.join();
}

void HttpServer::stop() {
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace radsynth::study
