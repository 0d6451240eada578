#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>

#include "reflectcast/service/protocol.hpp"

namespace reflectcast::service {

struct Received {
    bool binary = false;
    WireMessage message;  // when !binary
    AudioPacket audio;    // when binary
};

// Minimal WebSocket client for the session protocol. Reads run on a background
// thread; receive() hands them out in arrival order. Outbound seq numbers are
// assigned automatically starting at 1.
class Client {
public:
    Client();
    ~Client();
    Client(const Client&) = delete;
    Client& operator=(const Client&) = delete;

    // Throws ConnectionError.
    void connect(const std::string& host, unsigned short port, const std::string& target = "/");
    void send(std::string_view type, nlohmann::json payload = nlohmann::json::object());
    void send_raw(const std::string& text);
    void send_audio(std::span<const std::int16_t> frame, std::uint8_t channel = kLearnerChannel);

    // std::nullopt on timeout or once the connection is closed and drained.
    std::optional<Received> receive(std::chrono::milliseconds timeout);
    bool closed() const;
    void close();

    const std::string& session_id() const { return session_id_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::string session_id_;
    std::int64_t seq_ = 1;
};

}  // namespace reflectcast::service
