#pragma once

#include <algorithm>
#include <cstddef>
#include <deque>
#include <mutex>
#include <optional>
#include <string>

#include "reflectcast/audio.hpp"

namespace reflectcast::service {

// Outbound buffer for one client, in send order. Control messages are never
// dropped. Once more than `audio_capacity` audio frames are waiting, the oldest
// frame goes, so a slow reader hears the present, not the past.
class FrameQueue {
public:
    static constexpr std::size_t kDefaultCapacity = 2000 / kFrameMs;  // 2 s of audio

    struct Item {
        bool binary = false;
        std::string data;
    };

    explicit FrameQueue(std::size_t audio_capacity = kDefaultCapacity) : capacity_(audio_capacity) {}

    void push_message(std::string text) {
        std::lock_guard lock(mu_);
        items_.push_back({false, std::move(text)});
    }

    void push_audio(std::string packet) {
        std::lock_guard lock(mu_);
        items_.push_back({true, std::move(packet)});
        if (++audio_ <= capacity_) return;
        auto oldest = std::find_if(items_.begin(), items_.end(), [](const Item& i) { return i.binary; });
        items_.erase(oldest);
        --audio_;
        ++dropped_;
    }

    std::optional<Item> pop() {
        std::lock_guard lock(mu_);
        if (items_.empty()) return std::nullopt;
        auto item = std::move(items_.front());
        items_.pop_front();
        if (item.binary) --audio_;
        return item;
    }

    bool empty() const {
        std::lock_guard lock(mu_);
        return items_.empty();
    }
    std::size_t size() const {
        std::lock_guard lock(mu_);
        return items_.size();
    }
    std::size_t audio_frames() const {
        std::lock_guard lock(mu_);
        return audio_;
    }
    std::size_t dropped() const {
        std::lock_guard lock(mu_);
        return dropped_;
    }
    std::size_t capacity() const { return capacity_; }

private:
    std::size_t capacity_;
    mutable std::mutex mu_;
    std::deque<Item> items_;
    std::size_t audio_ = 0;
    std::size_t dropped_ = 0;
};

}  // namespace reflectcast::service
