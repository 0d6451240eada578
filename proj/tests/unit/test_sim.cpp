#include <doctest.h>

#include "../support/session_properties.hpp"
#include "reflectcast/errors.hpp"
#include "reflectcast/providers/registry.hpp"
#include "reflectcast/sim/learner.hpp"

using namespace reflectcast;
using namespace reflectcast::sim;
using reflectcast::testing::make_test_script;

namespace {

const providers::FixtureSet& fixtures() {
    static const auto f = std::make_shared<const providers::FixtureSet>(providers::FixtureSet::builtin());
    return *f;
}

SimulationResult simulate(const LearnerScript& script, session::InteractionMode mode, int sections = 3,
                          std::int64_t duration_ms = 4000, SimulationOptions options = {}) {
    auto store = std::make_shared<service::ContentStore>();
    store->add("lesson", make_test_script(sections, duration_ms));
    auto shared = std::make_shared<const providers::FixtureSet>(fixtures());
    return run_simulation(script, mode, "lesson", store, providers::make_providers({}, shared), fixtures(), options);
}

std::size_t occurrences(const std::string& haystack, std::string_view needle) {
    std::size_t n = 0;
    for (auto pos = haystack.find(needle); pos != std::string::npos; pos = haystack.find(needle, pos + needle.size())) ++n;
    return n;
}

int count_kind(const SessionTranscript& t, std::string_view kind) {
    int n = 0;
    for (const auto& e : t.entries()) n += e.kind == kind;
    return n;
}

std::vector<service::WireMessage> of_type(const SimulationResult& r, std::string_view type) {
    std::vector<service::WireMessage> out;
    for (const auto& m : r.messages)
        if (m.type == type) out.push_back(m);
    return out;
}

}  // namespace

TEST_SUITE("learner_script") {
    TEST_CASE("json round trip") {
        const auto j = nlohmann::json::parse(R"({
            "name": "mixed",
            "directives": [
              {"on": "reflection.prompt", "action": "speak", "utterance": "patriarchal", "repeat": true},
              {"at_ms": 3000, "action": "interrupt", "utterance": "question"},
              {"on": "agent.speech.start", "section_id": 1, "after_ms": 500, "action": "stay_silent", "duration_ms": 2000}
            ]})");
        const auto s = learner_script_from_json(j);
        REQUIRE(s.directives.size() == 3);
        CHECK(s.directives[0].repeat);
        CHECK(s.directives[1].trigger.kind == Trigger::Kind::At);
        CHECK(s.directives[1].action.kind == LearnerAction::Kind::Interrupt);
        CHECK(s.directives[2].trigger.section_id == 1);
        CHECK(s.directives[2].action.duration_ms == 2000);
        CHECK(to_json(s) == j);
        CHECK_NOTHROW(validate(s, fixtures()));
    }

    TEST_CASE("malformed scripts") {
        using nlohmann::json;
        CHECK_THROWS_AS(learner_script_from_json(json::object()), ConfigError);
        CHECK_THROWS_AS(learner_script_from_json(json::parse(R"({"directives":[{"action":"speak","utterance":"ok"}]})")),
                        ConfigError);
        CHECK_THROWS_AS(learner_script_from_json(json::parse(
                            R"({"directives":[{"at_ms":0,"on":"session.end","action":"speak","utterance":"ok"}]})")),
                        ConfigError);
        CHECK_THROWS_AS(learner_script_from_json(json::parse(R"({"directives":[{"at_ms":0,"action":"shout","utterance":"ok"}]})")),
                        ConfigError);
        CHECK_THROWS_AS(learner_script_from_json(json::parse(R"({"directives":[{"at_ms":0,"action":"stay_silent"}]})")),
                        ConfigError);
    }

    TEST_CASE("unresolvable triggers and unknown fixtures") {
        auto s = answering_script("no-such-utterance");
        CHECK_THROWS_AS(validate(s, fixtures()), ConfigError);
        s = answering_script("ok");
        s.directives[0].trigger.message_type = "user.transcript";  // the learner never hears its own messages
        CHECK_THROWS_AS(validate(s, fixtures()), ConfigError);
        s.directives[0].trigger.message_type = "reflection.hint";
        CHECK_THROWS_AS(validate(s, fixtures()), ConfigError);
    }
}

TEST_SUITE("run_simulation") {
    TEST_CASE("cooperative reflection learner passes every gate first time") {
        const auto r = simulate(answering_script("patriarchal"), session::InteractionMode::Reflection);
        CHECK(r.final_state == session::SessionState::End);
        const auto verdicts = of_type(r, "reflection.verdict");
        REQUIRE(verdicts.size() == 3);
        for (const auto& v : verdicts) CHECK(v.payload.at("satisfactory") == true);
        CHECK(count_kind(r.transcript, entry_kind::kGateSatisfied) == 3);
        CHECK(count_kind(r.transcript, entry_kind::kGateWaived) == 0);
        CHECK(occurrences(r.transcript.to_jsonl(), session::kReflectionPrompt) == 3);
        REQUIRE(r.completion_code);
        CHECK(r.completion_code->size() == 6);
        CHECK(of_type(r, "session.end").at(0).payload.at("completion_code") == *r.completion_code);
        CHECK(r.coverage.coverage_fraction() == 1.0);
        REQUIRE(r.latency);
        CHECK(r.latency->summary.count == 3);
        CHECK(r.wall_ms < 5000);
    }

    TEST_CASE("keyword-only learner is waived after three attempts per section") {
        const auto r = simulate(answering_script("confucius"), session::InteractionMode::Reflection);
        CHECK(r.final_state == session::SessionState::End);
        const auto verdicts = of_type(r, "reflection.verdict");
        CHECK(verdicts.size() == 9);
        for (const auto& v : verdicts) CHECK(v.payload.at("satisfactory") == false);
        CHECK(count_kind(r.transcript, entry_kind::kGateWaived) == 3);
        CHECK(count_kind(r.transcript, entry_kind::kGateSatisfied) == 0);
        // Each visit to the prompt state says the prompt exactly once.
        CHECK(of_type(r, "reflection.prompt").size() == 9);
        CHECK(occurrences(r.transcript.to_jsonl(), session::kReflectionPrompt) == 9);
    }

    TEST_CASE("passive standard learner hears everything") {
        const auto r = simulate(passive_script(), session::InteractionMode::Standard);
        CHECK(r.final_state == session::SessionState::End);
        CHECK_FALSE(r.latency.has_value());
        CHECK(r.coverage.coverage_fraction() == 1.0);
        CHECK(r.learner_actions == 0);
        CHECK(of_type(r, "reflection.prompt").empty());
        CHECK(r.session_ms >= 12000);
    }

    TEST_CASE("a silent reflection learner stalls") {
        SimulationOptions o;
        o.watchdog_ms = 10000;
        CHECK_THROWS_AS(simulate(passive_script(), session::InteractionMode::Reflection, 2, 2000, o), Stall);
    }

    TEST_CASE("same script, same transcript") {
        const auto a = simulate(answering_script("patriarchal"), session::InteractionMode::Reflection);
        const auto b = simulate(answering_script("patriarchal"), session::InteractionMode::Reflection);
        CHECK(a.transcript.to_jsonl() == b.transcript.to_jsonl());
        CHECK(a.completion_code == b.completion_code);
        CHECK(a.messages == b.messages);
    }

    TEST_CASE("timed interruption pauses, answers and resumes") {
        LearnerScript s{"interrupt", {{{Trigger::Kind::At, 2000}, {LearnerAction::Kind::Interrupt, "question"}}}};
        const auto r = simulate(s, session::InteractionMode::Standard, 2, 6000);
        CHECK(r.final_state == session::SessionState::End);
        const auto pauses = of_type(r, "agent.speech.pause");
        REQUIRE(pauses.size() == 1);
        CHECK(pauses[0].payload.at("offset_ms") == 2000);  // explicit speech start, no VAD onset delay
        const auto resumes = of_type(r, "agent.speech.resume");
        REQUIRE(resumes.size() == 1);
        CHECK(resumes[0].payload.at("offset_ms") == 2000);
        REQUIRE(r.latency);
        CHECK(r.latency->summary.count == 1);
    }

    TEST_CASE("stay_silent holds back the next action") {
        LearnerScript s{"late", {{{Trigger::Kind::At, 0}, {LearnerAction::Kind::StaySilent, "", 3000}},
                                 {{Trigger::Kind::At, 500}, {LearnerAction::Kind::Interrupt, "question"}}}};
        const auto r = simulate(s, session::InteractionMode::Standard, 1, 8000);
        const auto pauses = of_type(r, "agent.speech.pause");
        REQUIRE(pauses.size() == 1);
        CHECK(pauses[0].payload.at("offset_ms") == 3000);
    }

    TEST_CASE("actions due after session.end are dropped") {
        // The lesson ends at 2000 ms; the closing speech is still streaming when these fall due.
        LearnerScript s{"late", {{{Trigger::Kind::At, 2200}, {LearnerAction::Kind::Interrupt, "question"}},
                                 {{Trigger::Kind::At, 2400}, {LearnerAction::Kind::Speak, "ok"}}}};
        const auto r = simulate(s, session::InteractionMode::Standard, 1, 2000);
        CHECK(r.final_state == session::SessionState::End);
        CHECK(r.learner_actions == 0);
        CHECK(of_type(r, "error").empty());
        CHECK(r.messages.back().type == "session.end");
    }

    TEST_CASE("message triggers can target one section") {
        Directive d;
        d.trigger = {Trigger::Kind::On, 0, "agent.speech.start", 1, 1000};
        d.action = {LearnerAction::Kind::Speak, "question"};
        const auto r = simulate({"second", {d}}, session::InteractionMode::Standard, 3, 4000);
        const auto pauses = of_type(r, "agent.speech.pause");
        REQUIRE(pauses.size() == 1);
        CHECK(pauses[0].payload.at("section_id") == 1);
        CHECK(r.final_state == session::SessionState::End);
    }
}
