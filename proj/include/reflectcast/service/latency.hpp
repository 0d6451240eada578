#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

namespace reflectcast::service {

// Learner turn end to the first agent audio frame that answers it. Times are
// wall-clock milliseconds since the session opened, so provider delay shows up
// even when the session itself runs on virtual time.
struct LatencySample {
    int turn_id = 0;
    double t_user_turn_end_ms = 0;
    double t_agent_audio_start_ms = 0;
    double latency_ms = 0;
};

struct LatencySummary {
    std::size_t count = 0;
    double mean_ms = 0;
    double p95_ms = 0;  // nearest-rank
    double max_ms = 0;
};

struct LatencyReport {
    std::vector<LatencySample> samples;
    LatencySummary summary;
};

// Throws NoTurns when `samples` is empty.
LatencySummary summarize_latency(std::span<const LatencySample> samples);

nlohmann::json to_json(const LatencySample& s);
nlohmann::json to_json(const LatencySummary& s);
nlohmann::json to_json(const LatencyReport& r);

}  // namespace reflectcast::service
