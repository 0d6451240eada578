#include "reflectcast/transcript.hpp"

#include "reflectcast/errors.hpp"
#include "reflectcast/text.hpp"

namespace reflectcast {

std::string to_string(Actor a) {
    switch (a) {
        case Actor::Agent: return "agent";
        case Actor::Learner: return "learner";
        case Actor::System: return "system";
    }
    return "system";
}

Actor actor_from_string(const std::string& s) {
    if (s == "agent") return Actor::Agent;
    if (s == "learner") return Actor::Learner;
    if (s == "system") return Actor::System;
    throw FormatError("unknown actor '" + s + "'");
}

void SessionTranscript::append(TranscriptEntry entry) {
    if (!entries_.empty() && entry.t_ms < entries_.back().t_ms) {
        throw PreconditionError("transcript timestamps must be non-decreasing");
    }
    entries_.push_back(std::move(entry));
}

void SessionTranscript::append(std::int64_t t_ms, Actor actor, std::string_view kind, nlohmann::json payload) {
    append(TranscriptEntry{t_ms, actor, std::string(kind), std::move(payload)});
}

nlohmann::json to_json(const TranscriptEntry& e) {
    return {{"t_ms", e.t_ms}, {"actor", to_string(e.actor)}, {"kind", e.kind}, {"payload", e.payload}};
}

TranscriptEntry transcript_entry_from_json(const nlohmann::json& j) {
    try {
        return {j.at("t_ms").get<std::int64_t>(), actor_from_string(j.at("actor").get<std::string>()),
                j.at("kind").get<std::string>(), j.value("payload", nlohmann::json::object())};
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("transcript entry: ") + e.what());
    }
}

std::string SessionTranscript::to_jsonl() const {
    std::string out;
    for (const auto& e : entries_) {
        out += to_json(e).dump();
        out += '\n';
    }
    return out;
}

SessionTranscript SessionTranscript::from_jsonl(std::string_view text_in) {
    SessionTranscript t;
    std::size_t line_no = 0;
    for (const auto& line : text::split_lines(text_in)) {
        ++line_no;
        if (text::is_blank(line)) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("transcript line " + std::to_string(line_no) + ": " + e.what());
        }
        t.append(transcript_entry_from_json(j));
    }
    return t;
}

}  // namespace reflectcast
