#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "reflectcast/content/types.hpp"
#include "reflectcast/providers/registry.hpp"
#include "reflectcast/service/clock.hpp"
#include "reflectcast/service/latency.hpp"
#include "reflectcast/service/protocol.hpp"
#include "reflectcast/session/session.hpp"

namespace reflectcast::service {

// One unit of server output: a control message or an agent audio frame.
struct Outbound {
    enum class Kind { Message, Audio };
    Kind kind = Kind::Message;
    WireMessage message;
    Frame audio;

    static Outbound of(WireMessage m) { return {Kind::Message, std::move(m), {}}; }
    static Outbound of(Frame f) { return {Kind::Audio, {}, std::move(f)}; }
};

struct RuntimeOptions {
    // After a speech_end whose turn-end probability is below threshold, the turn
    // still closes once this much silence has passed.
    int turn_grace_ms = 1200;
};

// Drives one learner session: maps protocol input and learner audio to session
// events, executes the resulting actions against the providers, and paces agent
// audio on the session clock. Callers serialize access (see mutex()).
class SessionRuntime {
public:
    SessionRuntime(std::string session_id, std::string content_id, std::shared_ptr<const content::PodcastScript> script,
                   session::InteractionMode mode, providers::ProviderSet providers, std::shared_ptr<Clock> clock,
                   RuntimeOptions options = {});

    // The session.start acknowledgement; records `start_seq` as the first inbound seq.
    std::vector<Outbound> acknowledge(std::int64_t start_seq);

    // Throws ProtocolViolation (after aborting the session; call drain() for the abort messages).
    std::vector<Outbound> on_message(const WireMessage& message);
    // A learner frame from channel 0x02, stamped at the current session time.
    std::vector<Outbound> on_audio(std::span<const std::int16_t> frame);
    // Emits due agent audio and fires time-based transitions.
    std::vector<Outbound> tick();
    // Aborts unless already ended. `reason` lands in the transcript.
    std::vector<Outbound> abort(const std::string& reason);
    // Records a protocol violation, aborts, and throws ProtocolViolation.
    [[noreturn]] void reject(const std::string& what) { violation(what); }
    // Output queued outside a call's return value (protocol aborts).
    std::vector<Outbound> drain();

    const std::string& id() const { return id_; }
    const std::string& content_id() const { return content_id_; }
    session::InteractionMode mode() const { return session_.mode(); }
    const session::Session& session() const { return session_; }
    bool ended() const { return session_.state() == session::SessionState::End; }
    // Ended and nothing left to send.
    bool finished() const { return ended() && !stream_ && pending_.empty(); }
    std::int64_t now_ms() const { return clock_->now_ms(); }

    std::vector<LatencySample> latency_samples() const { return samples_; }
    // Throws NoTurns.
    LatencyReport latency() const;
    std::size_t agent_frames_sent() const { return frames_sent_; }

    std::mutex& mutex() { return mu_; }

private:
    struct AgentStream {
        std::shared_ptr<const std::vector<std::int16_t>> samples;
        std::size_t next_sample = 0;
        std::int64_t start_t = 0;     // session time of the first frame
        std::int64_t end_t = 0;       // session time playback completes
        std::int64_t frames_sent = 0;
        int segment_index = -1;       // -1 for synthesized speech
        session::SpeechPurpose purpose = session::SpeechPurpose::Reply;
    };

    struct TurnState {
        bool in_speech = false;
        std::vector<providers::TranscriptChunk> chunks;
        std::vector<providers::VadEvent> vad_events;
        std::optional<std::int64_t> speech_end_t;
        bool has_final = false;
    };

    WireMessage make(std::string_view type, nlohmann::json payload);
    void feed(session::SessionEvent ev, std::vector<Outbound>& out);
    void execute(std::int64_t t, const std::vector<session::Action>& actions, std::vector<Outbound>& out);
    void start_stream(AgentStream s, std::vector<Outbound>& out);
    void pump_stream(std::int64_t now, std::vector<Outbound>& out);
    void emit_frame(std::vector<Outbound>& out);
    void maybe_close_turn(std::int64_t now, std::vector<Outbound>& out);
    void close_turn(std::int64_t t, const std::string& text, std::vector<Outbound>& out);
    void check_inbound_seq(const WireMessage& m);
    [[noreturn]] void violation(const std::string& what);
    double wall_ms() const;

    std::string id_;
    std::string content_id_;
    std::shared_ptr<const content::PodcastScript> script_;
    std::vector<std::shared_ptr<const std::vector<std::int16_t>>> segment_audio_;
    providers::ProviderSet providers_;
    std::shared_ptr<Clock> clock_;
    RuntimeOptions options_;
    session::Session session_;

    std::mutex mu_;
    std::int64_t out_seq_ = 0;
    std::int64_t last_in_seq_ = -1;
    std::optional<AgentStream> stream_;
    std::unique_ptr<providers::VoiceActivityDetector> vad_;
    std::unique_ptr<providers::SpeechToText> stt_;
    TurnState turn_;
    std::vector<Outbound> pending_;
    std::optional<std::string> pending_end_code_;

    std::chrono::steady_clock::time_point wall_origin_;
    int turns_ = 0;
    std::optional<std::pair<int, double>> awaiting_audio_;  // turn id, wall ms at turn end
    std::vector<LatencySample> samples_;
    std::size_t frames_sent_ = 0;
};

}  // namespace reflectcast::service
