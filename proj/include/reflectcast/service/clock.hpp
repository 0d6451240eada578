#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>

namespace reflectcast::service {

// Session time in milliseconds since the session was opened.
class Clock {
public:
    virtual ~Clock() = default;
    virtual std::int64_t now_ms() const = 0;
};

// Time moves only when the driver says so. Used by the simulator.
class VirtualClock final : public Clock {
public:
    std::int64_t now_ms() const override { return now_.load(); }
    void set(std::int64_t t) { now_.store(t); }
    void advance(std::int64_t dt) { now_.fetch_add(dt); }

private:
    std::atomic<std::int64_t> now_{0};
};

// Wall time since construction, multiplied by `scale` (> 1 plays lessons faster).
class ScaledClock final : public Clock {
public:
    explicit ScaledClock(double scale = 1.0) : scale_(scale), origin_(std::chrono::steady_clock::now()) {}
    std::int64_t now_ms() const override {
        const auto us = std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - origin_);
        return static_cast<std::int64_t>(static_cast<double>(us.count()) * scale_ / 1000.0);
    }
    double scale() const { return scale_; }

private:
    double scale_;
    std::chrono::steady_clock::time_point origin_;
};

}  // namespace reflectcast::service
