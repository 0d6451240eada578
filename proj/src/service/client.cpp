#include "reflectcast/service/client.hpp"

#include <condition_variable>
#include <deque>
#include <mutex>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "reflectcast/errors.hpp"

namespace reflectcast::service {

namespace beast = boost::beast;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

struct Client::Impl {
    net::io_context ioc;
    websocket::stream<beast::tcp_stream> ws{ioc};
    std::optional<net::executor_work_guard<net::io_context::executor_type>> work;
    std::thread thread;
    beast::flat_buffer buffer;

    // io thread only
    std::deque<std::pair<bool, std::string>> outbox;
    bool writing = false;
    bool close_requested = false;

    mutable std::mutex mu;
    std::condition_variable cv;
    std::deque<Received> inbox;
    bool is_closed = false;

    void read() {
        ws.async_read(buffer, [this](beast::error_code ec, std::size_t) {
            if (ec) return mark_closed();
            Received r;
            r.binary = !ws.got_text();
            const auto data = beast::buffers_to_string(buffer.data());
            buffer.consume(buffer.size());
            try {
                if (r.binary) {
                    r.audio = decode_audio({reinterpret_cast<const std::uint8_t*>(data.data()), data.size()});
                } else {
                    r.message = decode(data);
                }
            } catch (const ProtocolViolation&) {
                return read();  // tolerate what we cannot parse
            }
            {
                std::lock_guard lock(mu);
                inbox.push_back(std::move(r));
            }
            cv.notify_all();
            read();
        });
    }

    void write_next() {
        if (writing || is_closed_now()) return;
        if (outbox.empty()) {
            if (close_requested) {
                close_requested = false;
                ws.async_close(websocket::close_code::normal, [this](beast::error_code) {});
            }
            return;
        }
        writing = true;
        ws.binary(outbox.front().first);
        ws.async_write(net::buffer(outbox.front().second), [this](beast::error_code ec, std::size_t) {
            writing = false;
            outbox.pop_front();
            if (ec) return mark_closed();
            write_next();
        });
    }

    void post(bool binary, std::string data) {
        net::post(ioc, [this, binary, data = std::move(data)]() mutable {
            outbox.emplace_back(binary, std::move(data));
            write_next();
        });
    }

    bool is_closed_now() const {
        std::lock_guard lock(mu);
        return is_closed;
    }

    void mark_closed() {
        {
            std::lock_guard lock(mu);
            is_closed = true;
        }
        cv.notify_all();
        work.reset();
    }
};

Client::Client() : impl_(std::make_unique<Impl>()) {}

Client::~Client() {
    close();
    impl_->ioc.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

void Client::connect(const std::string& host, unsigned short port, const std::string& target) {
    auto& im = *impl_;
    try {
        tcp::resolver resolver(im.ioc);
        const auto results = resolver.resolve(host, std::to_string(port));
        beast::get_lowest_layer(im.ws).connect(results);
        im.ws.handshake(host + ":" + std::to_string(port), target);
    } catch (const beast::system_error& e) {
        throw ConnectionError("cannot connect to " + host + ":" + std::to_string(port) + ": " + e.code().message());
    }
    im.work.emplace(im.ioc.get_executor());
    im.read();
    im.thread = std::thread([&im] { im.ioc.run(); });
}

void Client::send(std::string_view type, nlohmann::json payload) {
    send_raw(encode({std::string(type), session_id_, seq_++, std::move(payload)}));
}

void Client::send_raw(const std::string& text) { impl_->post(false, text); }

void Client::send_audio(std::span<const std::int16_t> frame, std::uint8_t channel) {
    const auto packet = encode_audio(channel, frame);
    impl_->post(true, std::string(packet.begin(), packet.end()));
}

std::optional<Received> Client::receive(std::chrono::milliseconds timeout) {
    auto& im = *impl_;
    std::unique_lock lock(im.mu);
    im.cv.wait_for(lock, timeout, [&] { return !im.inbox.empty() || im.is_closed; });
    if (im.inbox.empty()) return std::nullopt;
    auto r = std::move(im.inbox.front());
    im.inbox.pop_front();
    if (!r.binary && r.message.type == msg::kSessionStart) session_id_ = r.message.session_id;
    return r;
}

bool Client::closed() const {
    std::lock_guard lock(impl_->mu);
    return impl_->is_closed;
}

void Client::close() {
    auto& im = *impl_;
    if (!im.thread.joinable() || closed()) return;
    net::post(im.ioc, [&im] {
        im.close_requested = true;
        im.write_next();
    });
    std::unique_lock lock(im.mu);
    im.cv.wait_for(lock, std::chrono::seconds(2), [&] { return im.is_closed; });
}

}  // namespace reflectcast::service
