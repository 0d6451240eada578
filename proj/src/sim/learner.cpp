#include "reflectcast/sim/learner.hpp"

#include <chrono>
#include <deque>
#include <fstream>
#include <map>

#include <spdlog/spdlog.h>

#include "reflectcast/content/pipeline.hpp"
#include "reflectcast/errors.hpp"

namespace reflectcast::sim {

using service::msg::kSessionEnd;
using service::Outbound;
using service::WireMessage;

// --- scripts -------------------------------------------------------------------

namespace {

LearnerAction::Kind action_kind_from_string(const std::string& s) {
    if (s == "speak") return LearnerAction::Kind::Speak;
    if (s == "interrupt") return LearnerAction::Kind::Interrupt;
    if (s == "stay_silent") return LearnerAction::Kind::StaySilent;
    throw ConfigError("unknown learner action '" + s + "' (expected speak, interrupt or stay_silent)");
}

std::string_view to_string(LearnerAction::Kind k) {
    switch (k) {
        case LearnerAction::Kind::Speak: return "speak";
        case LearnerAction::Kind::Interrupt: return "interrupt";
        case LearnerAction::Kind::StaySilent: return "stay_silent";
    }
    return "speak";
}

Directive directive_from_json(const nlohmann::json& j, std::size_t index) {
    const auto where = "directive " + std::to_string(index) + ": ";
    if (!j.is_object()) throw ConfigError(where + "must be an object");
    Directive d;
    const bool has_at = j.contains("at_ms"), has_on = j.contains("on");
    if (has_at == has_on) throw ConfigError(where + "needs exactly one of at_ms or on");
    try {
        if (has_at) {
            d.trigger.kind = Trigger::Kind::At;
            d.trigger.at_ms = j.at("at_ms").get<std::int64_t>();
            if (d.trigger.at_ms < 0) throw ConfigError(where + "at_ms must be >= 0");
        } else {
            d.trigger.kind = Trigger::Kind::On;
            d.trigger.message_type = j.at("on").get<std::string>();
            if (j.contains("section_id")) d.trigger.section_id = j.at("section_id").get<int>();
            d.trigger.after_ms = j.value("after_ms", std::int64_t{0});
            if (d.trigger.after_ms < 0) throw ConfigError(where + "after_ms must be >= 0");
        }
        d.action.kind = action_kind_from_string(j.at("action").get<std::string>());
        if (d.action.kind == LearnerAction::Kind::StaySilent) {
            d.action.duration_ms = j.at("duration_ms").get<std::int64_t>();
            if (d.action.duration_ms <= 0) throw ConfigError(where + "duration_ms must be > 0");
        } else {
            d.action.utterance_id = j.at("utterance").get<std::string>();
        }
        d.repeat = j.value("repeat", false);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(where + e.what());
    }
    return d;
}

}  // namespace

LearnerScript learner_script_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("directives") || !j.at("directives").is_array()) {
        throw ConfigError("learner script needs a \"directives\" array");
    }
    LearnerScript s;
    s.name = j.value("name", std::string("unnamed"));
    std::size_t i = 0;
    for (const auto& d : j.at("directives")) s.directives.push_back(directive_from_json(d, i++));
    return s;
}

LearnerScript load_learner_script(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read learner script " + path.string());
    try {
        return learner_script_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

nlohmann::json to_json(const LearnerScript& script) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& d : script.directives) {
        nlohmann::json j;
        if (d.trigger.kind == Trigger::Kind::At) {
            j["at_ms"] = d.trigger.at_ms;
        } else {
            j["on"] = d.trigger.message_type;
            if (d.trigger.section_id) j["section_id"] = *d.trigger.section_id;
            if (d.trigger.after_ms) j["after_ms"] = d.trigger.after_ms;
        }
        j["action"] = to_string(d.action.kind);
        if (d.action.kind == LearnerAction::Kind::StaySilent) {
            j["duration_ms"] = d.action.duration_ms;
        } else {
            j["utterance"] = d.action.utterance_id;
        }
        if (d.repeat) j["repeat"] = true;
        list.push_back(std::move(j));
    }
    return {{"name", script.name}, {"directives", std::move(list)}};
}

void validate(const LearnerScript& script, const providers::FixtureSet& fixtures) {
    for (std::size_t i = 0; i < script.directives.size(); ++i) {
        const auto& d = script.directives[i];
        const auto where = "directive " + std::to_string(i) + ": ";
        if (d.action.kind != LearnerAction::Kind::StaySilent && !fixtures.contains(d.action.utterance_id)) {
            throw ConfigError(where + "unknown utterance '" + d.action.utterance_id + "'");
        }
        if (d.trigger.kind == Trigger::Kind::On &&
            (!service::is_known_type(d.trigger.message_type) || service::is_client_type(d.trigger.message_type))) {
            if (d.trigger.message_type != service::msg::kSessionStart) {
                throw ConfigError(where + "'" + d.trigger.message_type + "' is not a message the server sends");
            }
        }
    }
}

LearnerScript passive_script() { return {"passive", {}}; }

LearnerScript answering_script(const std::string& utterance_id) {
    Directive d;
    d.trigger.kind = Trigger::Kind::On;
    d.trigger.message_type = std::string(service::msg::kReflectionPrompt);
    d.action.utterance_id = utterance_id;
    d.repeat = true;
    return {"answer-" + utterance_id, {d}};
}

// --- simulation ------------------------------------------------------------------

namespace {

class Learner {
public:
    Learner(const LearnerScript& script, const providers::FixtureSet& fixtures)
        : script_(script), fixtures_(fixtures), used_(script.directives.size(), false) {}

    // Fires every due time trigger.
    void on_time(std::int64_t now) {
        for (std::size_t i = 0; i < script_.directives.size(); ++i) {
            const auto& d = script_.directives[i];
            if (d.trigger.kind != Trigger::Kind::At || used_[i] || d.trigger.at_ms > now) continue;
            used_[i] = true;
            queue(d.trigger.at_ms, d.action);
        }
    }

    // Fires the first unused directive listening for this message.
    void on_message(const WireMessage& m, std::int64_t now) {
        for (std::size_t i = 0; i < script_.directives.size(); ++i) {
            const auto& t = script_.directives[i].trigger;
            if (t.kind != Trigger::Kind::On || used_[i] || t.message_type != m.type) continue;
            if (t.section_id) {
                const auto s = m.payload.find("section_id");
                if (s == m.payload.end() || !s->is_number_integer() || s->get<int>() != *t.section_id) continue;
            }
            if (!script_.directives[i].repeat) used_[i] = true;
            queue(now + t.after_ms, script_.directives[i].action);
            return;
        }
    }

    // The microphone frame for the 20 ms starting at `now`; sets `interrupt`
    // when an interrupt action starts this frame.
    const Frame& next_frame(std::int64_t now, bool& interrupt) {
        interrupt = false;
        if (!has_active_ || done_active(now)) {
            has_active_ = false;
            if (!pending_.empty() && pending_.front().first <= now) {
                active_ = Active{pending_.front().second, now, frames_for(pending_.front().second), 0};
                has_active_ = true;
                pending_.pop_front();
                ++started_;
                interrupt = active_.action.kind == LearnerAction::Kind::Interrupt;
            }
        }
        if (!has_active_ || active_.action.kind == LearnerAction::Kind::StaySilent) return silence_;
        return (*active_.frames)[active_.next++];
    }

    int actions_started() const { return started_; }

private:
    struct Active {
        LearnerAction action;
        std::int64_t started_t = 0;
        const std::vector<Frame>* frames = nullptr;
        std::size_t next = 0;
    };

    void queue(std::int64_t due, const LearnerAction& a) { pending_.emplace_back(due, a); }

    bool done_active(std::int64_t now) const {
        if (active_.action.kind == LearnerAction::Kind::StaySilent) return now >= active_.started_t + active_.action.duration_ms;
        return active_.next >= active_.frames->size();
    }

    const std::vector<Frame>* frames_for(const LearnerAction& a) {
        if (a.kind == LearnerAction::Kind::StaySilent) return nullptr;
        auto it = rendered_.find(a.utterance_id);
        if (it == rendered_.end()) {
            it = rendered_.emplace(a.utterance_id, split_frames(providers::FixtureSet::render(fixtures_.at(a.utterance_id)))).first;
        }
        return &it->second;
    }

    const LearnerScript& script_;
    const providers::FixtureSet& fixtures_;
    std::vector<bool> used_;
    std::deque<std::pair<std::int64_t, LearnerAction>> pending_;
    Active active_;
    bool has_active_ = false;
    std::map<std::string, std::vector<Frame>> rendered_;
    Frame silence_ = Frame(static_cast<std::size_t>(kFrameSamples), 0);
    int started_ = 0;
};

}  // namespace

SimulationResult run_simulation(const LearnerScript& script, session::InteractionMode mode, const std::string& content_id,
                                service::SessionHub& hub, const providers::FixtureSet& fixtures,
                                const SimulationOptions& options) {
    validate(script, fixtures);
    const auto wall_start = std::chrono::steady_clock::now();
    auto clock = std::make_shared<service::VirtualClock>();
    auto opened = hub.open_session(session::to_string(mode), content_id, clock);
    const auto id = opened.session_id;

    SimulationResult result;
    result.session_id = id;
    result.mode = mode;
    Learner learner(script, fixtures);
    std::int64_t seq = 1;
    std::int64_t last_progress = 0;
    bool heard_end = false;

    auto absorb = [&](std::vector<Outbound> out) {
        if (!out.empty()) last_progress = clock->now_ms();
        for (auto& o : out) {
            if (o.kind == Outbound::Kind::Audio) {
                ++result.agent_frames;
                continue;
            }
            heard_end = heard_end || o.message.type == service::msg::kSessionEnd;
            learner.on_message(o.message, clock->now_ms());
            result.messages.push_back(std::move(o.message));
        }
    };

    absorb(std::move(opened.outbound));
    absorb(hub.route_message(id, {"client.ready", id, seq++, {}}));

    const Frame silence(static_cast<std::size_t>(kFrameSamples), 0);
    while (!hub.finished(id)) {
        const auto now = clock->now_ms();
        // After session.end the learner only listens to the closing speech.
        if (heard_end) {
            absorb(hub.route_audio_frame(id, silence));
        } else {
            learner.on_time(now);
            bool interrupt = false;
            const auto& frame = learner.next_frame(now, interrupt);
            if (interrupt) absorb(hub.route_message(id, {"user.speech.start", id, seq++, {}}));
            absorb(hub.route_audio_frame(id, frame));
        }

        clock->advance(kFrameMs);
        absorb(hub.tick(id));

        const auto t = clock->now_ms();
        if (t - last_progress > options.watchdog_ms || t > options.max_session_ms) {
            const auto info = hub.info(id);
            const auto last = result.messages.empty() ? std::string("none") : result.messages.back().type;
            hub.close_session(id, "simulation stalled");
            throw Stall(id + " made no progress for " + std::to_string(t - last_progress) + " ms in state " +
                        session::to_string(info.state) + " (last message: " + last + ", script '" + script.name + "')");
        }
    }

    const auto info = hub.info(id);
    result.final_state = info.state;
    result.completion_code = info.completion_code;
    result.transcript = hub.transcript(id);
    try {
        result.latency = hub.latency(id);
    } catch (const NoTurns&) {
    }
    result.coverage = content::coverage_report(hub.content().get(content_id)->summary, result.transcript);
    result.learner_actions = learner.actions_started();
    result.session_ms = clock->now_ms();
    result.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - wall_start).count();
    spdlog::debug("{}: simulated {} ms in {:.1f} ms", id, result.session_ms, result.wall_ms);
    return result;
}

SimulationResult run_simulation(const LearnerScript& script, session::InteractionMode mode, const std::string& content_id,
                                std::shared_ptr<service::ContentStore> content, providers::ProviderSet providers,
                                const providers::FixtureSet& fixtures, const SimulationOptions& options) {
    service::SessionHub hub(std::move(content), std::move(providers));
    return run_simulation(script, mode, content_id, hub, fixtures, options);
}

nlohmann::json to_json(const SimulationResult& r) {
    nlohmann::json j{{"session_id", r.session_id},
                     {"mode", session::to_string(r.mode)},
                     {"final_state", session::to_string(r.final_state)},
                     {"completion_code", r.completion_code ? nlohmann::json(*r.completion_code) : nlohmann::json()},
                     {"coverage", content::to_json(r.coverage)},
                     {"agent_frames", r.agent_frames},
                     {"learner_actions", r.learner_actions},
                     {"session_ms", r.session_ms},
                     {"wall_ms", r.wall_ms},
                     {"message_count", r.messages.size()}};
    j["latency"] = r.latency ? service::to_json(*r.latency) : nlohmann::json();
    return j;
}

}  // namespace reflectcast::sim
