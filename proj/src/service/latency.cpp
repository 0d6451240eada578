#include "reflectcast/service/latency.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "reflectcast/errors.hpp"

namespace reflectcast::service {

LatencySummary summarize_latency(std::span<const LatencySample> samples) {
    if (samples.empty()) throw NoTurns("no completed learner turns");
    std::vector<double> v;
    v.reserve(samples.size());
    for (const auto& s : samples) v.push_back(s.latency_ms);
    std::sort(v.begin(), v.end());
    LatencySummary out;
    out.count = v.size();
    out.mean_ms = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(v.size())));
    out.p95_ms = v[std::max<std::size_t>(rank, 1) - 1];
    out.max_ms = v.back();
    return out;
}

nlohmann::json to_json(const LatencySample& s) {
    return {{"turn_id", s.turn_id},
            {"t_user_turn_end_ms", s.t_user_turn_end_ms},
            {"t_agent_audio_start_ms", s.t_agent_audio_start_ms},
            {"latency_ms", s.latency_ms}};
}

nlohmann::json to_json(const LatencySummary& s) {
    return {{"count", s.count}, {"mean_ms", s.mean_ms}, {"p95_ms", s.p95_ms}, {"max_ms", s.max_ms}};
}

nlohmann::json to_json(const LatencyReport& r) {
    nlohmann::json samples = nlohmann::json::array();
    for (const auto& s : r.samples) samples.push_back(to_json(s));
    return {{"samples", samples}, {"summary", to_json(r.summary)}};
}

}  // namespace reflectcast::service
