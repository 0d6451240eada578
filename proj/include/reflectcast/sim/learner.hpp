#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "reflectcast/content/types.hpp"
#include "reflectcast/providers/speech.hpp"
#include "reflectcast/service/hub.hpp"

namespace reflectcast::sim {

// When a directive fires: at a session time, or when a given message arrives
// (optionally only for one section), after an optional delay.
struct Trigger {
    enum class Kind { At, On };
    Kind kind = Kind::At;
    std::int64_t at_ms = 0;
    std::string message_type;
    std::optional<int> section_id;
    std::int64_t after_ms = 0;
};

// speak:       stream the fixture's audio and let the server detect the turn.
// interrupt:   send user.speech.start first, then stream the fixture's audio.
// stay_silent: hold the microphone silent, delaying later actions.
struct LearnerAction {
    enum class Kind { Speak, Interrupt, StaySilent };
    Kind kind = Kind::Speak;
    std::string utterance_id;
    std::int64_t duration_ms = 0;
};

struct Directive {
    Trigger trigger;
    LearnerAction action;
    bool repeat = false;  // a repeating directive fires on every match
};

// Directives are checked in order; the first unused one whose trigger matches
// fires. Fired actions run one after another.
//
//   {"name": "cooperative",
//    "directives": [
//      {"on": "reflection.prompt", "action": "speak", "utterance": "patriarchal", "repeat": true},
//      {"at_ms": 3000, "action": "interrupt", "utterance": "question"},
//      {"on": "agent.speech.start", "section_id": 1, "after_ms": 500,
//       "action": "stay_silent", "duration_ms": 2000}]}
struct LearnerScript {
    std::string name;
    std::vector<Directive> directives;
};

// Throws ConfigError.
LearnerScript learner_script_from_json(const nlohmann::json& j);
LearnerScript load_learner_script(const std::filesystem::path& path);
nlohmann::json to_json(const LearnerScript& script);
// Every utterance id must exist in `fixtures` and every message type must be
// one the server sends. Throws ConfigError.
void validate(const LearnerScript& script, const providers::FixtureSet& fixtures);

// Ready-made scripts.
LearnerScript passive_script();
// Answers every reflection prompt with `utterance_id`.
LearnerScript answering_script(const std::string& utterance_id);

struct SimulationOptions {
    // Session time without any outbound message or agent audio before Stall.
    std::int64_t watchdog_ms = 60000;
    std::int64_t max_session_ms = 4 * 60 * 60 * 1000;
};

struct SimulationResult {
    std::string session_id;
    session::InteractionMode mode = session::InteractionMode::Standard;
    session::SessionState final_state = session::SessionState::Begin;
    std::optional<std::string> completion_code;
    SessionTranscript transcript;
    std::optional<service::LatencyReport> latency;  // none when the learner never took a turn
    content::CoverageReport coverage;
    std::vector<service::WireMessage> messages;     // everything the server sent, in order
    std::size_t agent_frames = 0;
    int learner_actions = 0;
    std::int64_t session_ms = 0;
    double wall_ms = 0;
};

// Runs one simulated learner against `hub` on virtual time. The learner hears
// every outbound item and answers with one microphone frame per 20 ms.
// Throws Stall, ProtocolViolation, UnknownContent, ConfigError.
SimulationResult run_simulation(const LearnerScript& script, session::InteractionMode mode, const std::string& content_id,
                                service::SessionHub& hub, const providers::FixtureSet& fixtures,
                                const SimulationOptions& options = {});

// Same, against a fresh hub over `content` so session ids and completion codes
// repeat from run to run.
SimulationResult run_simulation(const LearnerScript& script, session::InteractionMode mode, const std::string& content_id,
                                std::shared_ptr<service::ContentStore> content, providers::ProviderSet providers,
                                const providers::FixtureSet& fixtures, const SimulationOptions& options = {});

nlohmann::json to_json(const SimulationResult& r);

}  // namespace reflectcast::sim
