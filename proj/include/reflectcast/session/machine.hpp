#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace reflectcast::session {

enum class InteractionMode { Standard, Reflection };

enum class SessionState { Begin, AgentSpeaking, UserInterrupt, ReflectionPrompt, AwaitReflection, End };

std::string to_string(InteractionMode m);
std::string to_string(SessionState s);
// Case-insensitive ("reflection", "Standard", ...). Throws PreconditionError.
InteractionMode mode_from_string(std::string_view s);

inline constexpr std::string_view kReflectionPrompt = "So, what is the most important thing you've learned so far?";
inline constexpr std::string_view kRepromptLead =
    "Try to go one step beyond naming a topic: how does it connect to something you already know? ";
inline constexpr std::string_view kDeferredLead = "Sorry, I couldn't process that answer. ";
// Unsatisfactory verdicts per section before the gate is waived.
inline constexpr int kReflectionAttemptCap = 3;

struct SessionEvent {
    enum class Kind {
        Start,  // client ready; begins playback
        PlaybackFinishedSegment,
        UserSpeechStart,
        UserFinalTranscript,
        ReflectionVerdict,
        AgentReplyFinished,  // any agent utterance other than a segment finished playing
        Abort,
    };

    Kind kind = Kind::Start;
    std::int64_t t_ms = 0;
    std::string text;           // UserFinalTranscript
    bool satisfactory = false;  // ReflectionVerdict
    bool deferred = false;      // ReflectionVerdict: evaluator unavailable, re-prompt without counting

    static SessionEvent start(std::int64_t t) { return {Kind::Start, t}; }
    static SessionEvent playback_finished(std::int64_t t) { return {Kind::PlaybackFinishedSegment, t}; }
    static SessionEvent speech_start(std::int64_t t) { return {Kind::UserSpeechStart, t}; }
    static SessionEvent final_transcript(std::int64_t t, std::string text) {
        return {Kind::UserFinalTranscript, t, std::move(text)};
    }
    static SessionEvent verdict(std::int64_t t, bool ok, bool deferred = false) {
        return {Kind::ReflectionVerdict, t, {}, ok, deferred};
    }
    static SessionEvent reply_finished(std::int64_t t) { return {Kind::AgentReplyFinished, t}; }
    static SessionEvent abort(std::int64_t t) { return {Kind::Abort, t}; }

    bool operator==(const SessionEvent&) const = default;
};

std::string to_string(SessionEvent::Kind k);

enum class SpeechPurpose { Reply, ReflectionPrompt, Completion, Apology };

struct Action {
    enum class Kind {
        None,
        PlaySegment,         // segment_index, offset_ms
        PausePlayback,       // offset_ms into whatever the agent was saying
        SpeakText,           // text, purpose
        AskReflection,       // opens the reflection window
        EmitCompletionCode,  // text = code once the session fills it in
        // Requests to the driver, which owns the provider calls:
        ReplyToLearner,      // text = learner utterance; driver answers via handle_interrupt
        EvaluateReflection,  // text = reflection; driver feeds back a ReflectionVerdict event
    };

    Kind kind = Kind::None;
    int segment_index = -1;
    std::int64_t offset_ms = 0;
    std::string text;
    SpeechPurpose purpose = SpeechPurpose::Reply;

    bool operator==(const Action&) const = default;
};

std::string to_string(Action::Kind k);

// Side records a transition produces besides actions.
struct Note {
    enum class Kind { SegmentComplete, GateSatisfied, GateWaived, Aborted };
    Kind kind;
    int segment_index = -1;
    int attempts = 0;
    bool operator==(const Note&) const = default;
};

// Everything the transition function reads besides mode and event.
struct Cursor {
    SessionState state = SessionState::Begin;
    int segment_index = 0;
    std::int64_t pause_offset_ms = 0;
    std::int64_t play_started_t_ms = 0;  // when the current segment (re)started
    std::int64_t play_base_offset_ms = 0;
    std::int64_t speech_started_t_ms = 0;  // when the current non-segment utterance started
    int reflection_attempts = 0;
    bool reply_pending = false;
    bool evaluation_pending = false;
    std::int64_t last_event_t_ms = 0;

    bool operator==(const Cursor&) const = default;
};

struct Transition {
    Cursor next;
    std::vector<Action> actions;
    std::vector<Note> notes;
};

// The pure transition function. Throws IllegalTransition when the event is
// not legal in the current state (abort is always legal).
Transition advance(InteractionMode mode, const Cursor& cursor, const SessionEvent& event,
                   std::span<const std::int64_t> segment_durations_ms);

// Event kinds `advance` accepts from this cursor. Drives randomized tests and the service.
std::vector<SessionEvent::Kind> legal_events(InteractionMode mode, const Cursor& cursor);

nlohmann::json to_json(const SessionEvent& e);
SessionEvent session_event_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Action& a);

}  // namespace reflectcast::session
