#include "reflectcast/session/machine.hpp"

#include <algorithm>

#include "reflectcast/errors.hpp"
#include "reflectcast/text.hpp"

namespace reflectcast::session {

std::string to_string(InteractionMode m) { return m == InteractionMode::Standard ? "standard" : "reflection"; }

std::string to_string(SessionState s) {
    switch (s) {
        case SessionState::Begin: return "Begin";
        case SessionState::AgentSpeaking: return "AgentSpeaking";
        case SessionState::UserInterrupt: return "UserInterrupt";
        case SessionState::ReflectionPrompt: return "ReflectionPrompt";
        case SessionState::AwaitReflection: return "AwaitReflection";
        case SessionState::End: return "End";
    }
    return "?";
}

InteractionMode mode_from_string(std::string_view s) {
    const auto m = text::to_lower(text::trim(s));
    if (m == "standard") return InteractionMode::Standard;
    if (m == "reflection") return InteractionMode::Reflection;
    throw PreconditionError("unknown interaction mode '" + std::string(s) + "'");
}

std::string to_string(SessionEvent::Kind k) {
    using K = SessionEvent::Kind;
    switch (k) {
        case K::Start: return "start";
        case K::PlaybackFinishedSegment: return "playback_finished_segment";
        case K::UserSpeechStart: return "user_speech_start";
        case K::UserFinalTranscript: return "user_final_transcript";
        case K::ReflectionVerdict: return "reflection_verdict";
        case K::AgentReplyFinished: return "agent_reply_finished";
        case K::Abort: return "abort";
    }
    return "?";
}

std::string to_string(Action::Kind k) {
    using K = Action::Kind;
    switch (k) {
        case K::None: return "none";
        case K::PlaySegment: return "play_segment";
        case K::PausePlayback: return "pause_playback";
        case K::SpeakText: return "speak_text";
        case K::AskReflection: return "ask_reflection";
        case K::EmitCompletionCode: return "emit_completion_code";
        case K::ReplyToLearner: return "reply_to_learner";
        case K::EvaluateReflection: return "evaluate_reflection";
    }
    return "?";
}

namespace {

using K = SessionEvent::Kind;

[[noreturn]] void illegal(const Cursor& c, const SessionEvent& e) {
    throw IllegalTransition("event " + to_string(e.kind) + " is not legal in state " + to_string(c.state));
}

Action play(int index, std::int64_t offset) { return {Action::Kind::PlaySegment, index, offset, {}, {}}; }

Action speak(std::string text, SpeechPurpose purpose) {
    return {Action::Kind::SpeakText, -1, 0, std::move(text), purpose};
}

void enter_prompt(Transition& t, std::int64_t now, std::string text) {
    t.next.state = SessionState::ReflectionPrompt;
    t.next.speech_started_t_ms = now;
    t.actions.push_back(speak(std::move(text), SpeechPurpose::ReflectionPrompt));
    t.actions.push_back({Action::Kind::AskReflection});
}

void finish(Transition& t, int segment_count) {
    t.next.state = SessionState::End;
    t.next.segment_index = segment_count;
    t.next.pause_offset_ms = 0;
    t.actions.push_back({Action::Kind::EmitCompletionCode});
}

// After a section is done (Standard) or its gate resolved (Reflection).
void next_segment_or_end(Transition& t, std::int64_t now, int segment_count) {
    const int next = t.next.segment_index + 1;
    t.next.reflection_attempts = 0;
    if (next >= segment_count) {
        finish(t, segment_count);
        return;
    }
    t.next.state = SessionState::AgentSpeaking;
    t.next.segment_index = next;
    t.next.pause_offset_ms = 0;
    t.next.play_started_t_ms = now;
    t.next.play_base_offset_ms = 0;
    t.actions.push_back(play(next, 0));
}

}  // namespace

Transition advance(InteractionMode mode, const Cursor& cursor, const SessionEvent& e,
                   std::span<const std::int64_t> durations) {
    const int count = static_cast<int>(durations.size());
    if (count == 0) throw EmptyScript("session has no segments");
    if (e.t_ms < cursor.last_event_t_ms) {
        throw IllegalTransition("event timestamp " + std::to_string(e.t_ms) + " precedes " +
                                std::to_string(cursor.last_event_t_ms));
    }

    Transition t{cursor, {}, {}};
    t.next.last_event_t_ms = e.t_ms;
    const auto now = e.t_ms;

    if (e.kind == K::Abort) {
        if (cursor.state == SessionState::End) return t;
        if (cursor.state == SessionState::AgentSpeaking) {
            t.actions.push_back({Action::Kind::PausePlayback, cursor.segment_index, 0, {}, {}});
        }
        t.notes.push_back({Note::Kind::Aborted, cursor.segment_index, 0});
        t.next.reply_pending = false;
        t.next.evaluation_pending = false;
        finish(t, count);
        return t;
    }

    switch (cursor.state) {
        case SessionState::Begin:
            if (e.kind != K::Start) illegal(cursor, e);
            t.next.state = SessionState::AgentSpeaking;
            t.next.segment_index = 0;
            t.next.pause_offset_ms = 0;
            t.next.play_started_t_ms = now;
            t.next.play_base_offset_ms = 0;
            t.actions.push_back(play(0, 0));
            return t;

        case SessionState::AgentSpeaking: {
            const auto duration = durations[static_cast<std::size_t>(cursor.segment_index)];
            if (e.kind == K::UserSpeechStart) {
                const auto offset = std::clamp<std::int64_t>(
                    cursor.play_base_offset_ms + (now - cursor.play_started_t_ms), 0, duration);
                t.next.state = SessionState::UserInterrupt;
                t.next.pause_offset_ms = offset;
                t.next.reply_pending = false;
                t.actions.push_back({Action::Kind::PausePlayback, cursor.segment_index, offset, {}, {}});
                return t;
            }
            if (e.kind == K::PlaybackFinishedSegment) {
                t.notes.push_back({Note::Kind::SegmentComplete, cursor.segment_index, 0});
                t.next.pause_offset_ms = duration;
                if (mode == InteractionMode::Standard) {
                    next_segment_or_end(t, now, count);
                } else {
                    t.next.reflection_attempts = 0;
                    enter_prompt(t, now, std::string(kReflectionPrompt));
                }
                return t;
            }
            illegal(cursor, e);
        }

        case SessionState::UserInterrupt:
            switch (e.kind) {
                case K::UserSpeechStart:
                    return t;
                case K::UserFinalTranscript:
                    if (text::is_blank(e.text) && !cursor.reply_pending) {
                        t.next.state = SessionState::AgentSpeaking;
                        t.next.play_started_t_ms = now;
                        t.next.play_base_offset_ms = cursor.pause_offset_ms;
                        t.actions.push_back(play(cursor.segment_index, cursor.pause_offset_ms));
                        return t;
                    }
                    if (text::is_blank(e.text)) return t;
                    t.next.reply_pending = true;
                    t.actions.push_back({Action::Kind::ReplyToLearner, cursor.segment_index, 0, e.text, {}});
                    return t;
                case K::AgentReplyFinished:
                    if (!cursor.reply_pending) illegal(cursor, e);
                    t.next.reply_pending = false;
                    t.next.state = SessionState::AgentSpeaking;
                    t.next.play_started_t_ms = now;
                    t.next.play_base_offset_ms = cursor.pause_offset_ms;
                    t.actions.push_back(play(cursor.segment_index, cursor.pause_offset_ms));
                    return t;
                default:
                    illegal(cursor, e);
            }

        case SessionState::ReflectionPrompt:
            switch (e.kind) {
                case K::AgentReplyFinished:
                    t.next.state = SessionState::AwaitReflection;
                    return t;
                case K::UserSpeechStart:
                    // Speaking over the prompt counts as starting the reflection.
                    t.next.state = SessionState::AwaitReflection;
                    t.actions.push_back({Action::Kind::PausePlayback, -1, now - cursor.speech_started_t_ms, {}, {}});
                    return t;
                case K::UserFinalTranscript:
                    t.next.state = SessionState::AwaitReflection;
                    t.next.evaluation_pending = true;
                    t.actions.push_back({Action::Kind::PausePlayback, -1, now - cursor.speech_started_t_ms, {}, {}});
                    t.actions.push_back({Action::Kind::EvaluateReflection, cursor.segment_index, 0, e.text, {}});
                    return t;
                default:
                    illegal(cursor, e);
            }

        case SessionState::AwaitReflection:
            switch (e.kind) {
                case K::UserSpeechStart:
                    return t;
                case K::UserFinalTranscript:
                    if (cursor.evaluation_pending) return t;  // one evaluation in flight at a time
                    t.next.evaluation_pending = true;
                    t.actions.push_back({Action::Kind::EvaluateReflection, cursor.segment_index, 0, e.text, {}});
                    return t;
                case K::ReflectionVerdict: {
                    if (!cursor.evaluation_pending) illegal(cursor, e);
                    t.next.evaluation_pending = false;
                    if (e.deferred) {
                        enter_prompt(t, now, std::string(kDeferredLead) + std::string(kReflectionPrompt));
                        return t;
                    }
                    if (e.satisfactory) {
                        t.notes.push_back({Note::Kind::GateSatisfied, cursor.segment_index, cursor.reflection_attempts + 1});
                        next_segment_or_end(t, now, count);
                        return t;
                    }
                    const int attempts = cursor.reflection_attempts + 1;
                    t.next.reflection_attempts = attempts;
                    if (attempts >= kReflectionAttemptCap) {
                        t.notes.push_back({Note::Kind::GateWaived, cursor.segment_index, attempts});
                        next_segment_or_end(t, now, count);
                        return t;
                    }
                    enter_prompt(t, now, std::string(kRepromptLead) + std::string(kReflectionPrompt));
                    return t;
                }
                default:
                    illegal(cursor, e);
            }

        case SessionState::End:
            illegal(cursor, e);
    }
    illegal(cursor, e);
}

std::vector<SessionEvent::Kind> legal_events(InteractionMode, const Cursor& c) {
    std::vector<K> out;
    switch (c.state) {
        case SessionState::Begin:
            out = {K::Start};
            break;
        case SessionState::AgentSpeaking:
            out = {K::UserSpeechStart, K::PlaybackFinishedSegment};
            break;
        case SessionState::UserInterrupt:
            out = {K::UserSpeechStart, K::UserFinalTranscript};
            if (c.reply_pending) out.push_back(K::AgentReplyFinished);
            break;
        case SessionState::ReflectionPrompt:
            out = {K::AgentReplyFinished, K::UserSpeechStart, K::UserFinalTranscript};
            break;
        case SessionState::AwaitReflection:
            out = {K::UserSpeechStart, K::UserFinalTranscript};
            if (c.evaluation_pending) out.push_back(K::ReflectionVerdict);
            break;
        case SessionState::End:
            break;
    }
    out.push_back(K::Abort);
    return out;
}

nlohmann::json to_json(const SessionEvent& e) {
    nlohmann::json j{{"type", to_string(e.kind)}};
    if (e.kind == K::UserFinalTranscript) j["text"] = e.text;
    if (e.kind == K::ReflectionVerdict) {
        j["satisfactory"] = e.satisfactory;
        if (e.deferred) j["deferred"] = true;
    }
    return j;
}

SessionEvent session_event_from_json(const nlohmann::json& j) {
    static const std::vector<K> kinds = {K::Start, K::PlaybackFinishedSegment, K::UserSpeechStart, K::UserFinalTranscript,
                                         K::ReflectionVerdict, K::AgentReplyFinished, K::Abort};
    const auto type = j.at("type").get<std::string>();
    for (auto k : kinds) {
        if (to_string(k) == type) {
            SessionEvent e;
            e.kind = k;
            e.text = j.value("text", std::string{});
            e.satisfactory = j.value("satisfactory", false);
            e.deferred = j.value("deferred", false);
            return e;
        }
    }
    throw FormatError("unknown session event type '" + type + "'");
}

nlohmann::json to_json(const Action& a) {
    nlohmann::json j{{"type", to_string(a.kind)}};
    switch (a.kind) {
        case Action::Kind::PlaySegment:
            j["segment_index"] = a.segment_index;
            j["offset_ms"] = a.offset_ms;
            break;
        case Action::Kind::PausePlayback:
            j["offset_ms"] = a.offset_ms;
            if (a.segment_index >= 0) j["segment_index"] = a.segment_index;
            break;
        case Action::Kind::SpeakText: {
            static const char* purposes[] = {"reply", "reflection_prompt", "completion", "apology"};
            j["text"] = a.text;
            j["purpose"] = purposes[static_cast<int>(a.purpose)];
            break;
        }
        case Action::Kind::EmitCompletionCode:
            j["code"] = a.text;
            break;
        case Action::Kind::ReplyToLearner:
        case Action::Kind::EvaluateReflection:
            j["segment_index"] = a.segment_index;
            j["text"] = a.text;
            break;
        default:
            break;
    }
    return j;
}

}  // namespace reflectcast::session
