#include "reflectcast/service/runtime.hpp"

#include <algorithm>

#include <spdlog/spdlog.h>

#include "reflectcast/errors.hpp"
#include "reflectcast/text.hpp"

namespace reflectcast::service {

using session::Action;
using session::SessionEvent;
using session::SpeechPurpose;

namespace {

std::string_view purpose_name(SpeechPurpose p) {
    switch (p) {
        case SpeechPurpose::Reply: return "reply";
        case SpeechPurpose::ReflectionPrompt: return "reflection_prompt";
        case SpeechPurpose::Completion: return "completion";
        case SpeechPurpose::Apology: return "apology";
    }
    return "reply";
}

bool is_legal(const session::Session& s, SessionEvent::Kind k) {
    const auto legal = session::legal_events(s.mode(), s.cursor());
    return std::find(legal.begin(), legal.end(), k) != legal.end();
}

}  // namespace

SessionRuntime::SessionRuntime(std::string session_id, std::string content_id,
                               std::shared_ptr<const content::PodcastScript> script, session::InteractionMode mode,
                               providers::ProviderSet providers, std::shared_ptr<Clock> clock, RuntimeOptions options)
    : id_(std::move(session_id)),
      content_id_(std::move(content_id)),
      script_(script),
      providers_(std::move(providers)),
      clock_(std::move(clock)),
      options_(options),
      session_(id_, std::move(script), mode),
      wall_origin_(std::chrono::steady_clock::now()) {
    if (!providers_.llm || !providers_.tts || !providers_.stt || !providers_.vad || !providers_.turn) {
        throw ConfigError("session runtime needs every provider kind");
    }
    for (std::size_t i = 0; i < script_->segments.size(); ++i) {
        const auto& seg = script_->segments[i];
        if (seg.audio) {
            // Alias into the shared script; segments are never copied per session.
            segment_audio_.emplace_back(script_, &seg.audio->samples);
        } else {
            segment_audio_.push_back(std::make_shared<const std::vector<std::int16_t>>(make_silence(seg.duration_ms).samples));
        }
    }
    vad_ = providers_.vad->open_stream();
    stt_ = providers_.stt->open_stream();
}

double SessionRuntime::wall_ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - wall_origin_).count();
}

WireMessage SessionRuntime::make(std::string_view type, nlohmann::json payload) {
    return {std::string(type), id_, out_seq_++, std::move(payload)};
}

std::vector<Outbound> SessionRuntime::acknowledge(std::int64_t start_seq) {
    last_in_seq_ = start_seq;
    return {Outbound::of(make(msg::kSessionStart, {{"mode", session::to_string(session_.mode())},
                                                   {"content_id", content_id_},
                                                   {"section_count", script_->segments.size()}}))};
}

// --- inbound -------------------------------------------------------------------

void SessionRuntime::check_inbound_seq(const WireMessage& m) {
    if (!m.session_id.empty() && m.session_id != id_) violation("message for session '" + m.session_id + "' on " + id_);
    if (m.seq <= last_in_seq_) {
        violation("seq regression: " + std::to_string(m.seq) + " after " + std::to_string(last_in_seq_));
    }
    last_in_seq_ = m.seq;
}

void SessionRuntime::violation(const std::string& what) {
    const auto t = std::max(clock_->now_ms(), session_.cursor().last_event_t_ms);
    std::vector<Outbound> out;
    out.push_back(Outbound::of(make(msg::kError, {{"code", error_code::kProtocolViolation}, {"message", what}})));
    if (!ended()) {
        session_.record(t, Actor::System, entry_kind::kProtocolError, {{"message", what}});
        feed(SessionEvent::abort(t), out);
    }
    pending_.insert(pending_.end(), std::make_move_iterator(out.begin()), std::make_move_iterator(out.end()));
    throw ProtocolViolation(what);
}

std::vector<Outbound> SessionRuntime::on_message(const WireMessage& m) {
    std::vector<Outbound> out;
    pump_stream(clock_->now_ms(), out);
    if (!is_known_type(m.type)) violation("unknown message type '" + m.type + "'");
    if (!is_client_type(m.type)) violation("'" + m.type + "' is not a client message");
    check_inbound_seq(m);
    if (ended()) violation("session " + id_ + " has ended");

    const auto now = clock_->now_ms();
    if (m.type == msg::kSessionStart) {
        violation("session already started");
    } else if (m.type == msg::kClientReady) {
        if (session_.state() == session::SessionState::Begin) feed(SessionEvent::start(now), out);
    } else if (m.type == msg::kUserSpeechStart) {
        feed(SessionEvent::speech_start(now), out);
    } else if (m.type == msg::kUserTranscript) {
        const auto text = m.payload.find("text");
        if (text == m.payload.end() || !text->is_string()) violation("user.transcript needs a string text");
        if (m.payload.value("is_final", false)) {
            turn_ = {};
            close_turn(now, text->get<std::string>(), out);
        }
    }
    return out;
}

std::vector<Outbound> SessionRuntime::on_audio(std::span<const std::int16_t> frame) {
    std::vector<Outbound> out;
    const auto now = clock_->now_ms();
    pump_stream(now, out);
    if (ended()) return out;

    const auto vad_events = vad_->push(frame, now);
    const auto chunks = stt_->push(frame, now);
    for (const auto& ev : vad_events) {
        if (ev.kind != providers::VadEvent::Kind::SpeechStart) continue;
        turn_.in_speech = true;
        turn_.speech_end_t.reset();
        turn_.vad_events.push_back(ev);
        if (is_legal(session_, SessionEvent::Kind::UserSpeechStart)) feed(SessionEvent::speech_start(ev.t_ms), out);
    }
    for (const auto& c : chunks) {
        turn_.chunks.push_back(c);
        turn_.has_final = turn_.has_final || c.is_final;
        out.push_back(Outbound::of(make(msg::kUserTranscript, {{"text", c.text}, {"is_final", c.is_final}})));
    }
    for (const auto& ev : vad_events) {
        if (ev.kind != providers::VadEvent::Kind::SpeechEnd) continue;
        turn_.in_speech = false;
        turn_.speech_end_t = ev.t_ms;
        turn_.vad_events.push_back(ev);
    }
    maybe_close_turn(now, out);
    return out;
}

void SessionRuntime::maybe_close_turn(std::int64_t now, std::vector<Outbound>& out) {
    if (turn_.in_speech || !turn_.speech_end_t) return;
    const auto end_t = *turn_.speech_end_t;
    const bool grace_over = now - end_t >= options_.turn_grace_ms;
    bool close = false;
    std::int64_t at = end_t;
    if (turn_.has_final) {
        providers::TurnContext ctx{turn_.chunks, turn_.vad_events, now};
        const auto p = providers_.turn->predict_turn_end(ctx);
        if (providers::is_end_of_turn(true, p, providers_.turn_threshold)) {
            close = true;
        } else if (grace_over) {
            close = true;
            at = now;
        }
    } else if (grace_over) {
        close = true;
        at = now;
    }
    if (!close) return;

    std::vector<std::string> finals;
    for (const auto& c : turn_.chunks)
        if (c.is_final && !text::is_blank(c.text)) finals.push_back(c.text);
    turn_ = {};
    close_turn(at, text::join(finals, " "), out);
}

void SessionRuntime::close_turn(std::int64_t t, const std::string& text, std::vector<Outbound>& out) {
    if (!is_legal(session_, SessionEvent::Kind::UserFinalTranscript)) {
        spdlog::debug("{}: dropping learner turn in state {}", id_, session::to_string(session_.state()));
        return;
    }
    awaiting_audio_ = {++turns_, wall_ms()};
    feed(SessionEvent::final_transcript(t, text), out);
}

// --- time ----------------------------------------------------------------------

std::vector<Outbound> SessionRuntime::tick() {
    std::vector<Outbound> out = drain();
    const auto now = clock_->now_ms();
    pump_stream(now, out);
    if (!ended()) maybe_close_turn(now, out);
    return out;
}

std::vector<Outbound> SessionRuntime::drain() {
    std::vector<Outbound> out;
    out.swap(pending_);
    return out;
}

std::vector<Outbound> SessionRuntime::abort(const std::string& reason) {
    std::vector<Outbound> out = drain();
    if (ended()) return out;
    const auto t = std::max(clock_->now_ms(), session_.cursor().last_event_t_ms);
    spdlog::info("{}: aborting: {}", id_, reason);
    feed(SessionEvent::abort(t), out);
    return out;
}

void SessionRuntime::pump_stream(std::int64_t now, std::vector<Outbound>& out) {
    while (stream_) {
        auto& s = *stream_;
        while (s.next_sample < s.samples->size() && s.start_t + s.frames_sent * kFrameMs <= now) emit_frame(out);
        if (now < s.end_t) return;
        while (s.next_sample < s.samples->size()) emit_frame(out);

        const AgentStream done = s;
        stream_.reset();
        if (done.segment_index >= 0) {
            const auto section = script_->segments[static_cast<std::size_t>(done.segment_index)].section_id;
            out.push_back(Outbound::of(make(msg::kAgentSpeechEnd, {{"section_id", section}})));
            feed(SessionEvent::playback_finished(done.end_t), out);
        } else if (done.purpose != SpeechPurpose::Completion) {
            feed(SessionEvent::reply_finished(done.end_t), out);
        }
    }
}

void SessionRuntime::emit_frame(std::vector<Outbound>& out) {
    auto& s = *stream_;
    Frame f(static_cast<std::size_t>(kFrameSamples), 0);
    const auto n = std::min<std::size_t>(f.size(), s.samples->size() - s.next_sample);
    std::copy_n(s.samples->begin() + static_cast<std::ptrdiff_t>(s.next_sample), n, f.begin());
    s.next_sample += n;
    ++s.frames_sent;
    ++frames_sent_;
    out.push_back(Outbound::of(std::move(f)));
    if (awaiting_audio_) {
        const auto now = wall_ms();
        samples_.push_back({awaiting_audio_->first, awaiting_audio_->second, now, now - awaiting_audio_->second});
        awaiting_audio_.reset();
    }
}

void SessionRuntime::start_stream(AgentStream s, std::vector<Outbound>& out) {
    stream_ = std::move(s);
    if (stream_->next_sample < stream_->samples->size()) emit_frame(out);
}

// --- session events and actions ---------------------------------------------------

void SessionRuntime::feed(SessionEvent ev, std::vector<Outbound>& out) {
    ev.t_ms = std::max(ev.t_ms, session_.cursor().last_event_t_ms);
    if (!is_legal(session_, ev.kind)) {
        spdlog::debug("{}: ignoring {} in {}", id_, session::to_string(ev.kind), session::to_string(session_.state()));
        return;
    }
    const auto result = session_.advance(ev);
    execute(ev.t_ms, result.actions, out);
}

void SessionRuntime::execute(std::int64_t t, const std::vector<Action>& actions, std::vector<Outbound>& out) {
    for (const auto& a : actions) {
        switch (a.kind) {
            case Action::Kind::None:
            case Action::Kind::AskReflection:
                break;
            case Action::Kind::PlaySegment: {
                const auto i = static_cast<std::size_t>(a.segment_index);
                const auto& seg = script_->segments[i];
                AgentStream s;
                s.samples = segment_audio_[i];
                s.next_sample = std::min<std::size_t>(static_cast<std::size_t>(a.offset_ms) * kSampleRate / 1000, s.samples->size());
                s.start_t = t;
                s.end_t = t + std::max<std::int64_t>(0, seg.duration_ms - a.offset_ms);
                s.segment_index = a.segment_index;
                if (a.offset_ms == 0) {
                    out.push_back(Outbound::of(make(msg::kAgentSpeechStart, {{"section_id", seg.section_id}})));
                } else {
                    out.push_back(Outbound::of(
                        make(msg::kAgentSpeechResume, {{"section_id", seg.section_id}, {"offset_ms", a.offset_ms}})));
                }
                start_stream(std::move(s), out);
                break;
            }
            case Action::Kind::PausePlayback: {
                stream_.reset();
                nlohmann::json p{{"offset_ms", a.offset_ms}};
                if (a.segment_index >= 0) p["section_id"] = script_->segments[static_cast<std::size_t>(a.segment_index)].section_id;
                out.push_back(Outbound::of(make(msg::kAgentSpeechPause, std::move(p))));
                break;
            }
            case Action::Kind::SpeakText: {
                AudioClip clip;
                try {
                    clip = providers_.tts->synthesize_speech(a.text);
                } catch (const ProviderError& e) {
                    spdlog::warn("{}: speech synthesis failed, sending text only: {}", id_, e.what());
                    clip = make_silence(kFrameMs);
                }
                if (a.purpose == SpeechPurpose::ReflectionPrompt) {
                    out.push_back(Outbound::of(make(msg::kReflectionPrompt,
                                                    {{"text", a.text}, {"section_id", session_.current_section().section_id}})));
                } else {
                    out.push_back(Outbound::of(make(msg::kAgentReply, {{"text", a.text}, {"purpose", purpose_name(a.purpose)}})));
                }
                AgentStream s;
                s.start_t = t;
                s.end_t = t + clip.duration_ms();
                s.purpose = a.purpose;
                s.samples = std::make_shared<const std::vector<std::int16_t>>(std::move(clip.samples));
                start_stream(std::move(s), out);
                break;
            }
            case Action::Kind::EmitCompletionCode:
                pending_end_code_ = a.text;
                break;
            case Action::Kind::ReplyToLearner: {
                auto reply = session::handle_interrupt(session_, a.text, *providers_.llm);
                if (reply.kind == Action::Kind::None) {
                    reply = {Action::Kind::SpeakText, -1, 0, std::string(session::kApology), SpeechPurpose::Apology};
                }
                const auto at = std::max(t, clock_->now_ms());
                session_.record_speech(at, reply);
                execute(at, {reply}, out);
                break;
            }
            case Action::Kind::EvaluateReflection: {
                const auto& section = script_->section_for(static_cast<std::size_t>(a.segment_index));
                const auto v = session::evaluate_reflection(a.text, section, *providers_.llm);
                const auto at = std::max(t, clock_->now_ms());
                session_.record(at, Actor::System, entry_kind::kEvaluation,
                                {{"section_id", section.section_id},
                                 {"satisfactory", v.satisfactory},
                                 {"deferred", v.deferred},
                                 {"rationale", v.rationale}});
                nlohmann::json p{{"satisfactory", v.satisfactory}, {"section_id", section.section_id}};
                if (v.deferred) p["deferred"] = true;
                out.push_back(Outbound::of(make(msg::kReflectionVerdict, std::move(p))));
                feed(SessionEvent::verdict(at, v.satisfactory, v.deferred), out);
                break;
            }
        }
    }
    if (pending_end_code_) {
        out.push_back(Outbound::of(make(msg::kSessionEnd, {{"completion_code", *pending_end_code_}})));
        pending_end_code_.reset();
    }
}

LatencyReport SessionRuntime::latency() const { return {samples_, summarize_latency(samples_)}; }

}  // namespace reflectcast::service
