#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace reflectcast {

enum class Actor { Agent, Learner, System };

std::string to_string(Actor a);
Actor actor_from_string(const std::string& s);

struct TranscriptEntry {
    std::int64_t t_ms = 0;
    Actor actor = Actor::System;
    std::string kind;
    nlohmann::json payload = nlohmann::json::object();

    bool operator==(const TranscriptEntry&) const = default;
};

// Well-known entry kinds.
namespace entry_kind {
inline constexpr std::string_view kEvent = "event";
inline constexpr std::string_view kAction = "action";
inline constexpr std::string_view kSegmentComplete = "segment_complete";
inline constexpr std::string_view kGateSatisfied = "gate_satisfied";
inline constexpr std::string_view kGateWaived = "gate_waived";
inline constexpr std::string_view kAbort = "abort";
inline constexpr std::string_view kEvaluation = "reflection_evaluation";
inline constexpr std::string_view kProtocolError = "protocol_error";
}  // namespace entry_kind

// Append-only log with non-decreasing timestamps. Persisted as JSON lines
// with fields {t_ms, actor, kind, payload}.
class SessionTranscript {
public:
    // Throws PreconditionError when t_ms goes backwards.
    void append(TranscriptEntry entry);
    void append(std::int64_t t_ms, Actor actor, std::string_view kind,
                nlohmann::json payload = nlohmann::json::object());

    const std::vector<TranscriptEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    std::string to_jsonl() const;
    static SessionTranscript from_jsonl(std::string_view text);

private:
    std::vector<TranscriptEntry> entries_;
};

nlohmann::json to_json(const TranscriptEntry& e);
TranscriptEntry transcript_entry_from_json(const nlohmann::json& j);

}  // namespace reflectcast
