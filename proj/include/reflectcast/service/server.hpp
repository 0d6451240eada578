#pragma once

#include <memory>
#include <string>

#include "reflectcast/service/hub.hpp"

namespace reflectcast::service {

struct ServerOptions {
    std::string host = "127.0.0.1";
    unsigned short port = 8080;  // 0 picks a free port
    double time_scale = 1.0;     // session clock speed relative to wall time
    int threads = 2;
    int tick_ms = 5;             // how often each connection pumps its session
};

// HTTP + WebSocket front end over a SessionHub.
//   GET /health                        {"status": "ok"}
//   GET /sessions                      ids of every session seen so far
//   GET /sessions/{id}/transcript      JSON lines
//   GET /sessions/{id}/latency         samples and summary
//   WebSocket upgrade on any path      one session per connection; the first
//                                      text frame must be session.start
class Server {
public:
    Server(std::shared_ptr<SessionHub> hub, ServerOptions options = {});
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    // Binds and serves on background threads. Throws BindError.
    void start();
    // Stops accepting, closes connections and joins the threads. Idempotent.
    void stop();
    // Blocks until stop() is called from another thread or a signal handler.
    void wait();

    unsigned short port() const;
    SessionHub& hub();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace reflectcast::service
