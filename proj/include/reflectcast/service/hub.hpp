#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "reflectcast/content/types.hpp"
#include "reflectcast/providers/registry.hpp"
#include "reflectcast/service/runtime.hpp"

namespace reflectcast::service {

// Lessons available to sessions, by content id. Scripts are immutable once added.
class ContentStore {
public:
    void add(const std::string& content_id, std::shared_ptr<const content::PodcastScript> script);
    // Each subdirectory holding a script.json becomes a content id named after
    // the directory. Segments without audio are synthesized with `tts`.
    void load_dir(const std::filesystem::path& dir, providers::TtsProvider& tts);

    // Throws UnknownContent.
    std::shared_ptr<const content::PodcastScript> get(const std::string& content_id) const;
    bool contains(const std::string& content_id) const;
    std::vector<std::string> ids() const;

private:
    mutable std::shared_mutex mu_;
    std::map<std::string, std::shared_ptr<const content::PodcastScript>> scripts_;
};

// Fills in missing segment audio so every segment can be streamed.
std::shared_ptr<const content::PodcastScript> with_audio(content::PodcastScript script, providers::TtsProvider& tts);

struct HubOptions {
    std::string id_prefix = "s";
    std::string default_mode = "standard";  // used when session.start omits the mode
    RuntimeOptions runtime;
};

struct OpenedSession {
    std::string session_id;
    std::vector<Outbound> outbound;
};

struct SessionInfo {
    std::string session_id;
    std::string content_id;
    session::InteractionMode mode;
    session::SessionState state;
    std::optional<std::string> completion_code;
};

// Transport-independent session registry. Every method is thread-safe; events
// for one session are serialized by that session's lock, so distinct sessions
// progress in parallel.
class SessionHub {
public:
    SessionHub(std::shared_ptr<ContentStore> content, providers::ProviderSet providers, HubOptions options = {});

    // Throws UnknownContent, ProtocolViolation (not a session.start, bad mode).
    OpenedSession open_session(const WireMessage& start, std::shared_ptr<Clock> clock);
    OpenedSession open_session(const std::string& mode, const std::string& content_id, std::shared_ptr<Clock> clock);

    // Throws UnknownSession; ProtocolViolation after aborting the session (the
    // abort messages come out of the next tick()).
    std::vector<Outbound> route_message(const std::string& session_id, const WireMessage& message);
    // `packet` is a tagged binary frame; only the learner channel is accepted.
    std::vector<Outbound> route_audio(const std::string& session_id, std::span<const std::uint8_t> packet);
    std::vector<Outbound> route_audio_frame(const std::string& session_id, std::span<const std::int16_t> frame);
    std::vector<Outbound> tick(const std::string& session_id);
    // Aborts the session for a transport-level protocol violation (for example
    // an undecodable frame) and returns the error and session.end messages.
    std::vector<Outbound> reject(const std::string& session_id, const std::string& what);
    // Aborts the session if it is still running (client went away).
    std::vector<Outbound> close_session(const std::string& session_id, const std::string& reason = "client disconnected");

    SessionTranscript transcript(const std::string& session_id) const;
    // Throws NoTurns.
    LatencyReport latency(const std::string& session_id) const;
    SessionInfo info(const std::string& session_id) const;
    bool finished(const std::string& session_id) const;
    std::vector<std::string> session_ids() const;

    const ContentStore& content() const { return *content_; }

private:
    std::shared_ptr<SessionRuntime> find(const std::string& session_id) const;

    std::shared_ptr<ContentStore> content_;
    providers::ProviderSet providers_;
    HubOptions options_;
    mutable std::shared_mutex mu_;
    std::map<std::string, std::shared_ptr<SessionRuntime>> sessions_;
    std::uint64_t next_id_ = 1;
};

}  // namespace reflectcast::service
