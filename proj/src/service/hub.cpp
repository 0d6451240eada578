#include "reflectcast/service/hub.hpp"

#include <cstdio>
#include <limits>

#include <spdlog/spdlog.h>

#include "reflectcast/content/pipeline.hpp"
#include "reflectcast/errors.hpp"

namespace reflectcast::service {

// --- content -------------------------------------------------------------------

void ContentStore::add(const std::string& content_id, std::shared_ptr<const content::PodcastScript> script) {
    if (!script || script->empty()) throw EmptyScript("content '" + content_id + "' has no segments");
    std::unique_lock lock(mu_);
    scripts_[content_id] = std::move(script);
}

void ContentStore::load_dir(const std::filesystem::path& dir, providers::TtsProvider& tts) {
    if (!std::filesystem::is_directory(dir)) throw ConfigError("content directory not found: " + dir.string());
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        const auto script_json = entry.path() / "script.json";
        if (!entry.is_directory() || !std::filesystem::exists(script_json)) continue;
        add(entry.path().filename().string(), with_audio(content::load_script(script_json), tts));
        spdlog::info("loaded content '{}'", entry.path().filename().string());
    }
}

std::shared_ptr<const content::PodcastScript> ContentStore::get(const std::string& content_id) const {
    std::shared_lock lock(mu_);
    auto it = scripts_.find(content_id);
    if (it == scripts_.end()) throw UnknownContent("unknown content id '" + content_id + "'");
    return it->second;
}

bool ContentStore::contains(const std::string& content_id) const {
    std::shared_lock lock(mu_);
    return scripts_.count(content_id) != 0;
}

std::vector<std::string> ContentStore::ids() const {
    std::shared_lock lock(mu_);
    std::vector<std::string> out;
    for (const auto& [id, _] : scripts_) out.push_back(id);
    return out;
}

std::shared_ptr<const content::PodcastScript> with_audio(content::PodcastScript script, providers::TtsProvider& tts) {
    for (auto& seg : script.segments) {
        if (!seg.audio) seg = content::synthesize_segment(std::move(seg), tts);
    }
    return std::make_shared<const content::PodcastScript>(std::move(script));
}

// --- hub -----------------------------------------------------------------------

SessionHub::SessionHub(std::shared_ptr<ContentStore> content, providers::ProviderSet providers, HubOptions options)
    : content_(std::move(content)), providers_(std::move(providers)), options_(std::move(options)) {}

OpenedSession SessionHub::open_session(const WireMessage& start, std::shared_ptr<Clock> clock) {
    if (start.type != msg::kSessionStart) throw ProtocolViolation("expected session.start, got '" + start.type + "'");
    const auto& p = start.payload;
    const auto content_it = p.find("content_id");
    if (content_it == p.end() || !content_it->is_string()) throw ProtocolViolation("session.start needs a content_id");
    std::string mode = options_.default_mode;
    if (auto m = p.find("mode"); m != p.end() && !m->is_null()) {
        if (!m->is_string()) throw ProtocolViolation("session.start mode must be a string");
        mode = m->get<std::string>();
    }

    session::InteractionMode parsed;
    try {
        parsed = session::mode_from_string(mode);
    } catch (const PreconditionError& e) {
        throw ProtocolViolation(e.what());
    }
    const auto content_id = content_it->get<std::string>();
    auto script = content_->get(content_id);

    std::shared_ptr<SessionRuntime> runtime;
    {
        std::unique_lock lock(mu_);
        char buf[32];
        std::snprintf(buf, sizeof buf, "%04llu", static_cast<unsigned long long>(next_id_++));
        const auto id = options_.id_prefix + "-" + buf;
        runtime = std::make_shared<SessionRuntime>(id, content_id, std::move(script), parsed, providers_, std::move(clock),
                                                   options_.runtime);
        sessions_[id] = runtime;
    }
    std::lock_guard lock(runtime->mutex());
    spdlog::info("{}: opened ({}, content '{}')", runtime->id(), session::to_string(parsed), content_id);
    return {runtime->id(), runtime->acknowledge(start.seq)};
}

OpenedSession SessionHub::open_session(const std::string& mode, const std::string& content_id, std::shared_ptr<Clock> clock) {
    return open_session(WireMessage{std::string(msg::kSessionStart), "", 0, {{"mode", mode}, {"content_id", content_id}}},
                        std::move(clock));
}

std::shared_ptr<SessionRuntime> SessionHub::find(const std::string& session_id) const {
    std::shared_lock lock(mu_);
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) throw UnknownSession("unknown session '" + session_id + "'");
    return it->second;
}

std::vector<Outbound> SessionHub::route_message(const std::string& session_id, const WireMessage& message) {
    auto rt = find(session_id);
    std::lock_guard lock(rt->mutex());
    return rt->on_message(message);
}

std::vector<Outbound> SessionHub::route_audio(const std::string& session_id, std::span<const std::uint8_t> packet) {
    auto rt = find(session_id);
    std::lock_guard lock(rt->mutex());
    AudioPacket a;
    try {
        a = decode_audio(packet);
    } catch (const ProtocolViolation& e) {
        rt->reject(e.what());
    }
    if (a.channel != kLearnerChannel) rt->reject("clients may only send on the learner channel");
    return rt->on_audio(a.frame);
}

std::vector<Outbound> SessionHub::route_audio_frame(const std::string& session_id, std::span<const std::int16_t> frame) {
    auto rt = find(session_id);
    std::lock_guard lock(rt->mutex());
    return rt->on_audio(frame);
}

std::vector<Outbound> SessionHub::tick(const std::string& session_id) {
    auto rt = find(session_id);
    std::lock_guard lock(rt->mutex());
    return rt->tick();
}

std::vector<Outbound> SessionHub::reject(const std::string& session_id, const std::string& what) {
    auto rt = find(session_id);
    std::lock_guard lock(rt->mutex());
    if (rt->ended()) return rt->drain();
    try {
        rt->reject(what);
    } catch (const ProtocolViolation&) {
    }
    return rt->drain();
}

std::vector<Outbound> SessionHub::close_session(const std::string& session_id, const std::string& reason) {
    auto rt = find(session_id);
    std::lock_guard lock(rt->mutex());
    return rt->abort(reason);
}

SessionTranscript SessionHub::transcript(const std::string& session_id) const {
    auto rt = find(session_id);
    std::lock_guard lock(rt->mutex());
    return rt->session().transcript();
}

LatencyReport SessionHub::latency(const std::string& session_id) const {
    auto rt = find(session_id);
    std::lock_guard lock(rt->mutex());
    return rt->latency();
}

SessionInfo SessionHub::info(const std::string& session_id) const {
    auto rt = find(session_id);
    std::lock_guard lock(rt->mutex());
    return {rt->id(), rt->content_id(), rt->mode(), rt->session().state(), rt->session().completion_code()};
}

bool SessionHub::finished(const std::string& session_id) const {
    auto rt = find(session_id);
    std::lock_guard lock(rt->mutex());
    return rt->finished();
}

std::vector<std::string> SessionHub::session_ids() const {
    std::shared_lock lock(mu_);
    std::vector<std::string> out;
    for (const auto& [id, _] : sessions_) out.push_back(id);
    return out;
}

}  // namespace reflectcast::service
