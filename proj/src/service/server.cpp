#include "reflectcast/service/server.hpp"

#include <condition_variable>
#include <regex>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <spdlog/spdlog.h>

#include "reflectcast/errors.hpp"
#include "reflectcast/service/frame_queue.hpp"

namespace reflectcast::service {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

using Request = http::request<http::string_body>;
using Response = http::response<http::string_body>;

nlohmann::json error_body(std::string_view code, const std::string& message) {
    return {{"code", code}, {"message", message}};
}

Response respond(const Request& req, http::status status, std::string body, std::string_view content_type) {
    Response res{status, req.version()};
    res.set(http::field::content_type, std::string(content_type));
    res.set(http::field::access_control_allow_origin, "*");
    res.keep_alive(req.keep_alive());
    res.body() = std::move(body);
    res.prepare_payload();
    return res;
}

Response respond_json(const Request& req, http::status status, const nlohmann::json& j) {
    return respond(req, status, j.dump(), "application/json");
}

Response route(const Request& req, SessionHub& hub) {
    std::string target(req.target());
    if (auto q = target.find('?'); q != std::string::npos) target.resize(q);
    if (req.method() != http::verb::get) {
        return respond_json(req, http::status::method_not_allowed, error_body(error_code::kBadRequest, "only GET is supported"));
    }
    if (target == "/health") return respond_json(req, http::status::ok, {{"status", "ok"}});
    if (target == "/sessions") return respond_json(req, http::status::ok, {{"sessions", hub.session_ids()}});

    static const std::regex session_path(R"(^/sessions/([^/]+)/(transcript|latency)$)");
    std::smatch m;
    if (!std::regex_match(target, m, session_path)) {
        return respond_json(req, http::status::not_found, error_body(error_code::kBadRequest, "no route for " + target));
    }
    try {
        if (m[2] == "transcript") return respond(req, http::status::ok, hub.transcript(m[1]).to_jsonl(), "application/x-ndjson");
        return respond_json(req, http::status::ok, to_json(hub.latency(m[1])));
    } catch (const UnknownSession& e) {
        return respond_json(req, http::status::not_found, error_body(error_code::kUnknownSession, e.what()));
    } catch (const NoTurns& e) {
        return respond_json(req, http::status::conflict, error_body("no_turns", e.what()));
    }
}

// One WebSocket connection carrying one session. All handlers run on the
// connection's strand, so hub calls for a session never race each other here.
class WsConnection : public std::enable_shared_from_this<WsConnection> {
public:
    WsConnection(tcp::socket&& socket, std::shared_ptr<SessionHub> hub, const ServerOptions& options)
        : ws_(std::move(socket)), timer_(ws_.get_executor()), hub_(std::move(hub)), options_(options) {}

    void run(Request req) {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.async_accept(req, beast::bind_front_handler(&WsConnection::on_accept, shared_from_this()));
    }

    // Safe from any thread.
    void shutdown() {
        net::post(ws_.get_executor(), [self = shared_from_this()] {
            if (self->stopped_) return;
            self->closing_ = true;
            self->write_next();
        });
    }

private:
    void on_accept(beast::error_code ec) {
        if (ec) return spdlog::debug("websocket accept failed: {}", ec.message());
        read();
    }

    void read() {
        ws_.async_read(buffer_, beast::bind_front_handler(&WsConnection::on_read, shared_from_this()));
    }

    void on_read(beast::error_code ec, std::size_t) {
        if (ec) return on_closed(ec == websocket::error::closed ? "client closed" : ec.message());
        const bool text = ws_.got_text();
        std::string data = beast::buffers_to_string(buffer_.data());
        buffer_.consume(buffer_.size());
        handle(text, data);
        if (!stopped_) read();
    }

    void handle(bool text, const std::string& data) {
        if (closing_) return;
        if (id_.empty()) return open(text, data);
        try {
            if (!text) {
                const auto* bytes = reinterpret_cast<const std::uint8_t*>(data.data());
                return enqueue(hub_->route_audio(id_, {bytes, data.size()}));
            }
            WireMessage m;
            try {
                m = decode(data);
            } catch (const ProtocolViolation& e) {
                return enqueue(hub_->reject(id_, e.what()));
            }
            enqueue(hub_->route_message(id_, m));
        } catch (const ProtocolViolation& e) {
            spdlog::info("{}: protocol violation: {}", id_, e.what());
            enqueue(hub_->tick(id_));
        }
    }

    void open(bool text, const std::string& data) {
        try {
            if (!text) throw ProtocolViolation("audio before session.start");
            auto opened = hub_->open_session(decode(data), std::make_shared<ScaledClock>(options_.time_scale));
            id_ = opened.session_id;
            enqueue(std::move(opened.outbound));
            schedule_tick();
        } catch (const UnknownContent& e) {
            fail(error_code::kUnknownContent, e.what());
        } catch (const ProtocolViolation& e) {
            fail(error_code::kProtocolViolation, e.what());
        }
    }

    void fail(std::string_view code, const std::string& what) {
        queue_.push_message(encode({std::string(msg::kError), "", out_seq_++, error_body(code, what)}));
        closing_ = true;
        write_next();
    }

    void schedule_tick() {
        timer_.expires_after(std::chrono::milliseconds(options_.tick_ms));
        timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
            if (ec || self->stopped_) return;
            self->on_tick();
        });
    }

    void on_tick() {
        enqueue(hub_->tick(id_));
        if (hub_->finished(id_)) {
            closing_ = true;
            write_next();
            return;
        }
        schedule_tick();
    }

    void enqueue(std::vector<Outbound> out) {
        for (auto& o : out) {
            if (o.kind == Outbound::Kind::Message) {
                queue_.push_message(encode(o.message));
            } else {
                const auto packet = encode_audio(kAgentChannel, o.audio);
                queue_.push_audio(std::string(packet.begin(), packet.end()));
            }
        }
        write_next();
    }

    void write_next() {
        if (writing_ || stopped_) return;
        auto item = queue_.pop();
        if (!item) {
            if (closing_ && !close_sent_) {
                close_sent_ = true;
                ws_.async_close(websocket::close_code::normal,
                                [self = shared_from_this()](beast::error_code) { self->on_closed("session finished"); });
            }
            return;
        }
        writing_ = true;
        current_ = std::move(*item);
        ws_.binary(current_.binary);
        ws_.async_write(net::buffer(current_.data), [self = shared_from_this()](beast::error_code ec, std::size_t) {
            self->writing_ = false;
            if (ec) return self->on_closed(ec.message());
            self->write_next();
        });
    }

    void on_closed(const std::string& why) {
        if (stopped_) return;
        stopped_ = true;
        timer_.cancel();
        if (id_.empty()) return;
        try {
            hub_->close_session(id_, why);
        } catch (const UnknownSession&) {
        }
        spdlog::info("{}: connection closed ({}), {} audio frames dropped", id_, why, queue_.dropped());
    }

    websocket::stream<beast::tcp_stream> ws_;
    net::steady_timer timer_;
    beast::flat_buffer buffer_;
    std::shared_ptr<SessionHub> hub_;
    const ServerOptions& options_;
    std::string id_;
    FrameQueue queue_;
    FrameQueue::Item current_;
    std::int64_t out_seq_ = 0;  // only for errors sent before a session exists
    bool writing_ = false;
    bool closing_ = false;
    bool close_sent_ = false;
    bool stopped_ = false;
};

class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
public:
    using OnUpgrade = std::function<void(std::shared_ptr<WsConnection>)>;

    HttpConnection(tcp::socket&& socket, std::shared_ptr<SessionHub> hub, const ServerOptions& options, OnUpgrade on_upgrade)
        : stream_(std::move(socket)), hub_(std::move(hub)), options_(options), on_upgrade_(std::move(on_upgrade)) {}

    void run() {
        net::dispatch(stream_.get_executor(), beast::bind_front_handler(&HttpConnection::read, shared_from_this()));
    }

private:
    void read() {
        req_ = {};
        stream_.expires_after(std::chrono::seconds(30));
        http::async_read(stream_, buffer_, req_, beast::bind_front_handler(&HttpConnection::on_read, shared_from_this()));
    }

    void on_read(beast::error_code ec, std::size_t) {
        if (ec == http::error::end_of_stream) return close();
        if (ec) return;
        if (websocket::is_upgrade(req_)) {
            stream_.expires_never();
            auto ws = std::make_shared<WsConnection>(stream_.release_socket(), hub_, options_);
            on_upgrade_(ws);
            ws->run(std::move(req_));
            return;
        }
        res_ = std::make_shared<Response>(route(req_, *hub_));
        http::async_write(stream_, *res_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) return;
            if (!self->res_->keep_alive()) return self->close();
            self->read();
        });
    }

    void close() {
        beast::error_code ec;
        stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
    }

    beast::tcp_stream stream_;
    beast::flat_buffer buffer_;
    Request req_;
    std::shared_ptr<Response> res_;
    std::shared_ptr<SessionHub> hub_;
    const ServerOptions& options_;
    OnUpgrade on_upgrade_;
};

}  // namespace

struct Server::Impl {
    std::shared_ptr<SessionHub> hub;
    ServerOptions options;
    net::io_context ioc;
    tcp::acceptor acceptor{ioc};
    std::vector<std::thread> threads;
    unsigned short port = 0;

    std::mutex mu;
    std::condition_variable stopped_cv;
    bool running = false;
    std::vector<std::weak_ptr<WsConnection>> connections;

    Impl(std::shared_ptr<SessionHub> h, ServerOptions o)
        : hub(std::move(h)), options(std::move(o)), ioc(std::max(1, options.threads)) {}

    void accept() {
        acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
            if (ec) {
                if (ec != net::error::operation_aborted) spdlog::warn("accept failed: {}", ec.message());
                if (!acceptor.is_open()) return;
            } else {
                std::make_shared<HttpConnection>(std::move(socket), hub, options, [this](std::shared_ptr<WsConnection> ws) {
                    std::lock_guard lock(mu);
                    std::erase_if(connections, [](const auto& w) { return w.expired(); });
                    connections.push_back(ws);
                })->run();
            }
            accept();
        });
    }
};

Server::Server(std::shared_ptr<SessionHub> hub, ServerOptions options)
    : impl_(std::make_unique<Impl>(std::move(hub), std::move(options))) {}

Server::~Server() { stop(); }

void Server::start() {
    auto& im = *impl_;
    beast::error_code ec;
    const auto address = net::ip::make_address(im.options.host, ec);
    if (ec) throw BindError("bad host '" + im.options.host + "': " + ec.message());
    const tcp::endpoint endpoint{address, im.options.port};

    auto check = [&](std::string_view step) {
        if (ec) throw BindError(std::string(step) + " " + im.options.host + ":" + std::to_string(im.options.port) + ": " + ec.message());
    };
    im.acceptor.open(endpoint.protocol(), ec);
    check("open");
    im.acceptor.set_option(net::socket_base::reuse_address(true), ec);
    check("configure");
    im.acceptor.bind(endpoint, ec);
    check("bind");
    im.acceptor.listen(net::socket_base::max_listen_connections, ec);
    check("listen");
    im.port = im.acceptor.local_endpoint().port();

    {
        std::lock_guard lock(im.mu);
        im.running = true;
    }
    im.accept();
    for (int i = 0; i < std::max(1, im.options.threads); ++i) im.threads.emplace_back([&im] { im.ioc.run(); });
    spdlog::info("listening on {}:{}", im.options.host, im.port);
}

void Server::stop() {
    auto& im = *impl_;
    {
        std::lock_guard lock(im.mu);
        if (!im.running) return;
        im.running = false;
    }
    net::post(im.ioc, [&im] {
        beast::error_code ec;
        im.acceptor.close(ec);
    });
    {
        std::lock_guard lock(im.mu);
        for (auto& w : im.connections)
            if (auto c = w.lock()) c->shutdown();
    }
    // Give connections a moment to flush their close frames.
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    im.ioc.stop();
    for (auto& t : im.threads) t.join();
    im.threads.clear();
    for (const auto& id : im.hub->session_ids()) im.hub->close_session(id, "server stopped");
    im.stopped_cv.notify_all();
    spdlog::info("server stopped");
}

void Server::wait() {
    std::unique_lock lock(impl_->mu);
    impl_->stopped_cv.wait(lock, [this] { return !impl_->running; });
}

unsigned short Server::port() const { return impl_->port; }
SessionHub& Server::hub() { return *impl_->hub; }

}  // namespace reflectcast::service
