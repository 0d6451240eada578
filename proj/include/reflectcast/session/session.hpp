#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "reflectcast/content/types.hpp"
#include "reflectcast/providers/llm.hpp"
#include "reflectcast/session/machine.hpp"
#include "reflectcast/transcript.hpp"

namespace reflectcast::session {

struct StepResult {
    SessionState new_state;
    std::vector<Action> actions;
};

// A live learner session. Not thread-safe: the owner serializes events.
class Session {
public:
    // Throws EmptyScript.
    Session(std::string id, std::shared_ptr<const content::PodcastScript> script, InteractionMode mode);

    const std::string& id() const { return id_; }
    InteractionMode mode() const { return mode_; }
    SessionState state() const { return cursor_.state; }
    const Cursor& cursor() const { return cursor_; }
    const content::PodcastScript& script() const { return *script_; }
    const SessionTranscript& transcript() const { return transcript_; }
    const std::optional<std::string>& completion_code() const { return completion_code_; }
    int reflection_attempts() const { return cursor_.reflection_attempts; }

    // The section the cursor is on (the last one once the session has ended).
    const content::SummarySection& current_section() const;

    // Applies the event, logs event, actions and notes to the transcript, and
    // fills in the completion code on reaching End. Throws IllegalTransition.
    StepResult advance(const SessionEvent& event);

    // Logs agent speech produced by the driver (interrupt replies, apologies).
    void record_speech(std::int64_t t_ms, const Action& speak);
    // Logs a driver-side observation (evaluation rationale, turn details).
    void record(std::int64_t t_ms, Actor actor, std::string_view kind, nlohmann::json payload);

private:
    std::string id_;
    std::shared_ptr<const content::PodcastScript> script_;
    InteractionMode mode_;
    std::vector<std::int64_t> durations_;
    Cursor cursor_;
    SessionTranscript transcript_;
    std::optional<std::string> completion_code_;
};

// Throws EmptyScript when the script has no segments.
Session create_session(std::string id, std::shared_ptr<const content::PodcastScript> script, InteractionMode mode);

struct ReflectionVerdict {
    bool satisfactory = false;
    std::string rationale;
    std::string raw_response;
    bool deferred = false;  // evaluator failed; the learner is re-prompted and the attempt is not counted
};

// Parses "1"/"0" on the first line. Anything else, including an empty response, is unsatisfactory.
ReflectionVerdict parse_verdict(const std::string& raw_response);

// Binary one-shot judgment with in-context examples. Blank responses are
// unsatisfactory without a provider call; provider failure defers the verdict.
ReflectionVerdict evaluate_reflection(const std::string& response_text, const content::SummarySection& section,
                                      providers::LlmProvider& llm);
// Same, checking that the session is waiting for a reflection.
ReflectionVerdict evaluate_reflection(const Session& session, const std::string& response_text,
                                      providers::LlmProvider& llm);

inline constexpr std::string_view kApology = "Sorry, I can't answer that right now. Let's pick up where we left off.";

// Reply to a learner interruption, grounded on the current section and the outline.
// Blank input yields Action::Kind::None. Provider failure yields the fixed apology.
// Throws PreconditionError unless the session is in UserInterrupt.
Action handle_interrupt(const Session& session, const std::string& final_text, providers::LlmProvider& llm);

// Six uppercase alphanumerics derived from the session id.
std::string derive_completion_code(const std::string& session_id);
// Throws NotFinished unless the session has ended.
std::string completion_code(const Session& session);

// Replays the events logged in a transcript against a fresh session.
std::vector<SessionEvent> events_from_transcript(const SessionTranscript& transcript);

}  // namespace reflectcast::session
