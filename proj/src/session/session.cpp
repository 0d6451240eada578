#include "reflectcast/session/session.hpp"

#include <cctype>

#include "reflectcast/errors.hpp"
#include "reflectcast/prompts.hpp"
#include "reflectcast/text.hpp"

namespace reflectcast::session {

namespace {

Actor actor_for(SessionEvent::Kind k) {
    switch (k) {
        case SessionEvent::Kind::UserSpeechStart:
        case SessionEvent::Kind::UserFinalTranscript:
            return Actor::Learner;
        default:
            return Actor::System;
    }
}

nlohmann::json note_payload(const Note& n, const content::PodcastScript& script) {
    nlohmann::json p{{"segment_index", n.segment_index}};
    if (n.segment_index >= 0 && static_cast<std::size_t>(n.segment_index) < script.segments.size()) {
        p["section_id"] = script.segments[static_cast<std::size_t>(n.segment_index)].section_id;
    }
    if (n.kind == Note::Kind::GateSatisfied || n.kind == Note::Kind::GateWaived) p["attempts"] = n.attempts;
    return p;
}

std::string_view note_kind(Note::Kind k) {
    switch (k) {
        case Note::Kind::SegmentComplete: return entry_kind::kSegmentComplete;
        case Note::Kind::GateSatisfied: return entry_kind::kGateSatisfied;
        case Note::Kind::GateWaived: return entry_kind::kGateWaived;
        case Note::Kind::Aborted: return entry_kind::kAbort;
    }
    return "note";
}

}  // namespace

Session::Session(std::string id, std::shared_ptr<const content::PodcastScript> script, InteractionMode mode)
    : id_(std::move(id)), script_(std::move(script)), mode_(mode) {
    if (!script_ || script_->empty()) throw EmptyScript("cannot start a session on an empty script");
    for (const auto& s : script_->segments) durations_.push_back(s.duration_ms);
}

Session create_session(std::string id, std::shared_ptr<const content::PodcastScript> script, InteractionMode mode) {
    return Session(std::move(id), std::move(script), mode);
}

const content::SummarySection& Session::current_section() const {
    const auto n = script_->segments.size();
    const auto idx = std::min<std::size_t>(static_cast<std::size_t>(cursor_.segment_index), n - 1);
    return script_->section_for(idx);
}

StepResult Session::advance(const SessionEvent& event) {
    auto t = session::advance(mode_, cursor_, event, durations_);

    transcript_.append(event.t_ms, actor_for(event.kind), entry_kind::kEvent, to_json(event));
    for (auto& a : t.actions) {
        if (a.kind == Action::Kind::EmitCompletionCode) {
            completion_code_ = derive_completion_code(id_);
            a.text = *completion_code_;
        }
    }
    for (const auto& n : t.notes) transcript_.append(event.t_ms, Actor::System, note_kind(n.kind), note_payload(n, *script_));

    std::vector<Action> actions;
    for (auto& a : t.actions) {
        transcript_.append(event.t_ms, Actor::Agent, entry_kind::kAction, to_json(a));
        actions.push_back(a);
        if (a.kind == Action::Kind::EmitCompletionCode) {
            Action spoken{Action::Kind::SpeakText, -1, 0,
                          "That's the end of the lesson. Your completion code is " + a.text + ".",
                          SpeechPurpose::Completion};
            transcript_.append(event.t_ms, Actor::Agent, entry_kind::kAction, to_json(spoken));
            actions.push_back(std::move(spoken));
        }
    }
    cursor_ = t.next;
    return {cursor_.state, std::move(actions)};
}

void Session::record_speech(std::int64_t t_ms, const Action& speak) {
    transcript_.append(t_ms, Actor::Agent, entry_kind::kAction, to_json(speak));
}

void Session::record(std::int64_t t_ms, Actor actor, std::string_view kind, nlohmann::json payload) {
    transcript_.append(t_ms, actor, kind, std::move(payload));
}

// --- reflection --------------------------------------------------------------

ReflectionVerdict parse_verdict(const std::string& raw_response) {
    ReflectionVerdict v;
    v.raw_response = raw_response;
    const auto trimmed = text::trim(raw_response);
    if (trimmed.empty()) {
        v.rationale = "empty evaluator response";
        return v;
    }
    const auto lines = text::split_lines(trimmed);
    const auto first = text::trim(lines.front());
    // Accept "1", "1.", "Verdict: 1" style first lines.
    char digit = 0;
    for (char c : first) {
        if (c == '0' || c == '1') {
            digit = c;
            break;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) break;
    }
    v.satisfactory = digit == '1';
    std::vector<std::string> rest(lines.begin() + 1, lines.end());
    v.rationale = std::string(text::trim(text::join(rest, " ")));
    if (digit == 0) v.rationale = "unparseable evaluator response";
    return v;
}

ReflectionVerdict evaluate_reflection(const std::string& response_text, const content::SummarySection& section,
                                      providers::LlmProvider& llm) {
    if (text::is_blank(response_text)) {
        return {false, "empty reflection", "", false};
    }
    try {
        const auto res = llm.complete_chat(prompts::evaluate_reflection(section.heading, section.summary_text, response_text));
        return parse_verdict(res.text);
    } catch (const ProviderError& e) {
        return {false, std::string("evaluator unavailable: ") + e.what(), "", true};
    }
}

ReflectionVerdict evaluate_reflection(const Session& session, const std::string& response_text,
                                      providers::LlmProvider& llm) {
    if (session.state() != SessionState::AwaitReflection) {
        throw PreconditionError("evaluate_reflection: session is in " + to_string(session.state()));
    }
    return evaluate_reflection(response_text, session.current_section(), llm);
}

// --- interrupts --------------------------------------------------------------

Action handle_interrupt(const Session& session, const std::string& final_text, providers::LlmProvider& llm) {
    if (session.state() != SessionState::UserInterrupt) {
        throw PreconditionError("handle_interrupt: session is in " + to_string(session.state()));
    }
    if (text::is_blank(final_text)) return {};
    const auto& section = session.current_section();
    const auto request = prompts::interrupt_reply(session.script().summary.outline_headings(), section.heading,
                                                  section.summary_text, final_text);
    try {
        auto reply = std::string(text::trim(llm.complete_chat(request).text));
        if (reply.empty()) return {Action::Kind::SpeakText, -1, 0, std::string(kApology), SpeechPurpose::Apology};
        return {Action::Kind::SpeakText, -1, 0, std::move(reply), SpeechPurpose::Reply};
    } catch (const ProviderError&) {
        return {Action::Kind::SpeakText, -1, 0, std::string(kApology), SpeechPurpose::Apology};
    }
}

// --- completion code -----------------------------------------------------------

std::string derive_completion_code(const std::string& session_id) {
    static constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
    auto h = stable_hash("completion-code:" + session_id);
    std::string code(6, 'A');
    for (auto& c : code) {
        c = kAlphabet[h % 36];
        h /= 36;
    }
    return code;
}

std::string completion_code(const Session& session) {
    if (session.state() != SessionState::End || !session.completion_code()) {
        throw NotFinished("session " + session.id() + " has not finished");
    }
    return *session.completion_code();
}

std::vector<SessionEvent> events_from_transcript(const SessionTranscript& transcript) {
    std::vector<SessionEvent> events;
    for (const auto& e : transcript.entries()) {
        if (e.kind != entry_kind::kEvent) continue;
        auto ev = session_event_from_json(e.payload);
        ev.t_ms = e.t_ms;
        events.push_back(std::move(ev));
    }
    return events;
}

}  // namespace reflectcast::session
