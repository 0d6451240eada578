#include <doctest.h>

#include <set>

#include "../support/session_properties.hpp"
#include "reflectcast/errors.hpp"
#include "reflectcast/prompts.hpp"
#include "reflectcast/text.hpp"

using namespace reflectcast;
using namespace reflectcast::session;
using namespace reflectcast::providers;
using reflectcast::testing::make_test_script;

namespace {

std::vector<Action::Kind> kinds(const std::vector<Action>& actions) {
    std::vector<Action::Kind> out;
    for (const auto& a : actions) out.push_back(a.kind);
    return out;
}

// Drives a session to the reflection window of its current section.
void finish_current_segment(Session& s, std::int64_t t) {
    REQUIRE(s.state() == SessionState::AgentSpeaking);
    s.advance(SessionEvent::playback_finished(t));
}

int count_entries(const Session& s, std::string_view kind) {
    int n = 0;
    for (const auto& e : s.transcript().entries()) n += e.kind == kind;
    return n;
}

}  // namespace

TEST_SUITE("create_session") {
    TEST_CASE("starts in Begin at the first segment") {
        Session s("s1", make_test_script(5), InteractionMode::Reflection);
        CHECK(s.state() == SessionState::Begin);
        CHECK(s.cursor().segment_index == 0);
        CHECK(s.cursor().pause_offset_ms == 0);
        CHECK(s.mode() == InteractionMode::Reflection);
        CHECK_FALSE(s.completion_code().has_value());
    }

    TEST_CASE("empty script") {
        CHECK_THROWS_AS(create_session("s", std::make_shared<content::PodcastScript>(), InteractionMode::Standard), EmptyScript);
    }

    TEST_CASE("sessions on one script are independent") {
        auto script = make_test_script(3);
        Session a("a", script, InteractionMode::Standard), b("b", script, InteractionMode::Standard);
        a.advance(SessionEvent::start(0));
        a.advance(SessionEvent::playback_finished(10));
        CHECK(a.cursor().segment_index == 1);
        CHECK(b.state() == SessionState::Begin);
        CHECK(b.cursor().segment_index == 0);
        CHECK(b.transcript().empty());
    }

    TEST_CASE("mode names are case-insensitive") {
        CHECK(mode_from_string("reflection") == InteractionMode::Reflection);
        CHECK(mode_from_string("Reflection") == InteractionMode::Reflection);
        CHECK(mode_from_string("STANDARD") == InteractionMode::Standard);
        CHECK_THROWS_AS(mode_from_string("mixed"), PreconditionError);
    }
}

TEST_SUITE("advance") {
    TEST_CASE("Standard plays the next segment and never prompts") {
        Session s("s", make_test_script(3), InteractionMode::Standard);
        auto r = s.advance(SessionEvent::start(0));
        CHECK(r.new_state == SessionState::AgentSpeaking);
        REQUIRE(r.actions.size() == 1);
        CHECK(r.actions[0] == Action{Action::Kind::PlaySegment, 0, 0});
        r = s.advance(SessionEvent::playback_finished(5000));
        CHECK(r.new_state == SessionState::AgentSpeaking);
        REQUIRE(r.actions.size() == 1);
        CHECK(r.actions[0] == Action{Action::Kind::PlaySegment, 1, 0});
    }

    TEST_CASE("Standard ends after the last segment with a spoken code") {
        Session s("s", make_test_script(1), InteractionMode::Standard);
        s.advance(SessionEvent::start(0));
        auto r = s.advance(SessionEvent::playback_finished(5000));
        CHECK(r.new_state == SessionState::End);
        CHECK(kinds(r.actions) == std::vector{Action::Kind::EmitCompletionCode, Action::Kind::SpeakText});
        REQUIRE(s.completion_code().has_value());
        CHECK(r.actions[0].text == *s.completion_code());
        CHECK(r.actions[1].text.find(*s.completion_code()) != std::string::npos);
        CHECK(r.actions[1].purpose == SpeechPurpose::Completion);
    }

    TEST_CASE("Reflection prompts with the exact question") {
        Session s("s", make_test_script(3), InteractionMode::Reflection);
        s.advance(SessionEvent::start(0));
        auto r = s.advance(SessionEvent::playback_finished(5000));
        CHECK(r.new_state == SessionState::ReflectionPrompt);
        REQUIRE(r.actions.size() == 2);
        CHECK(r.actions[0].kind == Action::Kind::SpeakText);
        CHECK(r.actions[0].text == "So, what is the most important thing you've learned so far?");
        CHECK(r.actions[0].purpose == SpeechPurpose::ReflectionPrompt);
        CHECK(r.actions[1].kind == Action::Kind::AskReflection);
        r = s.advance(SessionEvent::reply_finished(8000));
        CHECK(r.new_state == SessionState::AwaitReflection);
    }

    TEST_CASE("an unsatisfactory verdict re-prompts") {
        Session s("s", make_test_script(3), InteractionMode::Reflection);
        s.advance(SessionEvent::start(0));
        finish_current_segment(s, 5000);
        s.advance(SessionEvent::reply_finished(8000));
        auto r = s.advance(SessionEvent::final_transcript(9000, "Confucius"));
        CHECK(kinds(r.actions) == std::vector{Action::Kind::EvaluateReflection});
        r = s.advance(SessionEvent::verdict(9100, false));
        CHECK(r.new_state == SessionState::ReflectionPrompt);
        CHECK(s.reflection_attempts() == 1);
        REQUIRE(!r.actions.empty());
        CHECK(r.actions[0].text.ends_with(kReflectionPrompt));
    }

    TEST_CASE("a satisfactory verdict releases the next segment") {
        Session s("s", make_test_script(3), InteractionMode::Reflection);
        s.advance(SessionEvent::start(0));
        finish_current_segment(s, 5000);
        s.advance(SessionEvent::reply_finished(8000));
        s.advance(SessionEvent::final_transcript(9000, "a thoughtful answer"));
        auto r = s.advance(SessionEvent::verdict(9100, true));
        CHECK(r.new_state == SessionState::AgentSpeaking);
        REQUIRE(r.actions.size() == 1);
        CHECK(r.actions[0] == Action{Action::Kind::PlaySegment, 1, 0});
        CHECK(count_entries(s, entry_kind::kGateSatisfied) == 1);
    }

    TEST_CASE("End rejects further events except abort") {
        Session s("s", make_test_script(1), InteractionMode::Standard);
        s.advance(SessionEvent::start(0));
        s.advance(SessionEvent::playback_finished(100));
        REQUIRE(s.state() == SessionState::End);
        CHECK_THROWS_AS(s.advance(SessionEvent::playback_finished(200)), IllegalTransition);
        const auto code = *s.completion_code();
        auto r = s.advance(SessionEvent::abort(300));
        CHECK(r.actions.empty());
        CHECK(*s.completion_code() == code);
    }

    TEST_CASE("timestamps may not go backwards") {
        Session s("s", make_test_script(2), InteractionMode::Standard);
        s.advance(SessionEvent::start(100));
        CHECK_THROWS_AS(s.advance(SessionEvent::playback_finished(50)), IllegalTransition);
    }

    TEST_CASE("speaking over the prompt counts as the reflection") {
        Session s("s", make_test_script(2), InteractionMode::Reflection);
        s.advance(SessionEvent::start(0));
        finish_current_segment(s, 5000);
        auto r = s.advance(SessionEvent::speech_start(6000));
        CHECK(r.new_state == SessionState::AwaitReflection);
        CHECK(kinds(r.actions) == std::vector{Action::Kind::PausePlayback});
        r = s.advance(SessionEvent::final_transcript(7000, "Confucius"));
        CHECK(kinds(r.actions) == std::vector{Action::Kind::EvaluateReflection});
    }

    TEST_CASE("abort mid-session ends with a code and a flag") {
        Session s("s", make_test_script(3), InteractionMode::Reflection);
        s.advance(SessionEvent::start(0));
        auto r = s.advance(SessionEvent::abort(1000));
        CHECK(r.new_state == SessionState::End);
        CHECK(s.completion_code().has_value());
        CHECK(count_entries(s, entry_kind::kAbort) == 1);
    }
}

TEST_SUITE("handle_interrupt") {
    TEST_CASE("resume at the saved offset after the reply") {
        auto backend = std::make_shared<FixedLlm>("A sage is a wise teacher.");
        auto llm = make_llm(backend);
        Session s("s", make_test_script(2, 10000), InteractionMode::Standard);
        s.advance(SessionEvent::start(0));
        auto r = s.advance(SessionEvent::speech_start(4200));
        CHECK(r.new_state == SessionState::UserInterrupt);
        REQUIRE(r.actions.size() == 1);
        CHECK(r.actions[0].kind == Action::Kind::PausePlayback);
        CHECK(r.actions[0].offset_ms == 4200);
        CHECK(s.cursor().pause_offset_ms == 4200);

        r = s.advance(SessionEvent::final_transcript(6000, "What is a sage?"));
        CHECK(kinds(r.actions) == std::vector{Action::Kind::ReplyToLearner});
        const auto reply = handle_interrupt(s, "What is a sage?", *llm);
        CHECK(reply.kind == Action::Kind::SpeakText);
        CHECK(reply.text == "A sage is a wise teacher.");
        s.record_speech(6000, reply);

        r = s.advance(SessionEvent::reply_finished(8500));
        CHECK(r.new_state == SessionState::AgentSpeaking);
        REQUIRE(r.actions.size() == 1);
        CHECK(r.actions[0] == Action{Action::Kind::PlaySegment, 0, 4200});

        // A second interrupt measures from the resumed offset.
        r = s.advance(SessionEvent::speech_start(9500));
        CHECK(r.actions[0].offset_ms == 4200 + 1000);
    }

    TEST_CASE("offset is clamped to the segment") {
        Session s("s", make_test_script(1, 3000), InteractionMode::Standard);
        s.advance(SessionEvent::start(0));
        auto r = s.advance(SessionEvent::speech_start(9000));
        CHECK(r.actions[0].offset_ms == 3000);
    }

    TEST_CASE("blank final resumes immediately") {
        auto backend = std::make_shared<EchoLlm>();
        auto llm = make_llm(backend);
        Session s("s", make_test_script(2), InteractionMode::Standard);
        s.advance(SessionEvent::start(0));
        s.advance(SessionEvent::speech_start(1000));
        CHECK(handle_interrupt(s, "  ", *llm).kind == Action::Kind::None);
        CHECK(backend->request_count() == 0);
        auto r = s.advance(SessionEvent::final_transcript(1500, ""));
        CHECK(r.new_state == SessionState::AgentSpeaking);
        CHECK(r.actions[0] == Action{Action::Kind::PlaySegment, 0, 1000});
    }

    TEST_CASE("echo reply equals the mock response and is grounded") {
        auto backend = std::make_shared<EchoLlm>();
        auto llm = make_llm(backend);
        auto script = make_test_script(3);
        Session s("s", script, InteractionMode::Standard);
        s.advance(SessionEvent::start(0));
        s.advance(SessionEvent::playback_finished(5000));
        s.advance(SessionEvent::speech_start(6000));
        const auto reply = handle_interrupt(s, "Wait, can you explain what a sage is?", *llm);
        REQUIRE(backend->request_count() == 1);
        const auto req = backend->requests().front();
        CHECK(reply.text == std::string(text::trim(req.last_user_text())));
        const auto body = req.system_text + req.last_user_text();
        CHECK(body.find(script->summary.sections[1].summary_text) != std::string::npos);
        CHECK(body.find(script->summary.sections[0].summary_text) == std::string::npos);
        for (const auto& h : script->summary.outline_headings()) CHECK(body.find(h) != std::string::npos);
        CHECK(body.find("Wait, can you explain what a sage is?") != std::string::npos);
    }

    TEST_CASE("provider failure gives the apology") {
        auto llm = make_llm(std::make_shared<ScriptedLlm>(std::vector<std::optional<std::string>>{}), {1000, 0});
        Session s("s", make_test_script(2), InteractionMode::Standard);
        s.advance(SessionEvent::start(0));
        s.advance(SessionEvent::speech_start(1000));
        const auto reply = handle_interrupt(s, "What is a sage?", *llm);
        CHECK(reply.text == kApology);
        CHECK(reply.purpose == SpeechPurpose::Apology);
    }

    TEST_CASE("requires an interrupt") {
        auto llm = make_llm(std::make_shared<EchoLlm>());
        Session s("s", make_test_script(2), InteractionMode::Standard);
        CHECK_THROWS_AS(handle_interrupt(s, "hi", *llm), PreconditionError);
    }
}

TEST_SUITE("evaluate_reflection") {
    const content::SummarySection section{0, "Confucius and social order",
                                          "Confucius taught that social harmony grows from personal virtue.", 0};

    TEST_CASE("keyword restatement is unsatisfactory") {
        auto backend = std::make_shared<ScriptedLlm>(std::vector<std::optional<std::string>>{"0\nOnly restates a name."});
        auto llm = make_llm(backend);
        const auto v = evaluate_reflection("Confucius", section, *llm);
        CHECK_FALSE(v.satisfactory);
        CHECK_FALSE(v.deferred);
        CHECK(v.rationale == "Only restates a name.");
    }

    TEST_CASE("synthesized statement is satisfactory") {
        auto backend = std::make_shared<ScriptedLlm>(std::vector<std::optional<std::string>>{"1\nConnects the idea to modern values."});
        auto llm = make_llm(backend);
        const auto v = evaluate_reflection("Confucius' teachings would be considered patriarchal by modern standards", section, *llm);
        CHECK(v.satisfactory);
    }

    TEST_CASE("prompt embeds the criterion, both examples and the response") {
        auto backend = std::make_shared<FixedLlm>("1");
        auto llm = make_llm(backend);
        evaluate_reflection("my reflection text", section, *llm);
        const auto req = backend->requests().front();
        const auto body = req.system_text + "\n" + req.last_user_text();
        CHECK(body.find(prompts::kReflectionCriterion) != std::string::npos);
        CHECK(body.find("Confucius' teachings would be considered patriarchal by modern standards") != std::string::npos);
        CHECK(body.find("\"Confucius\"") != std::string::npos);
        CHECK(body.find("my reflection text") != std::string::npos);
        CHECK(body.find(section.summary_text) != std::string::npos);
    }

    TEST_CASE("whitespace never reaches the provider") {
        auto backend = std::make_shared<EchoLlm>();
        auto llm = make_llm(backend);
        const auto v = evaluate_reflection("   ", section, *llm);
        CHECK_FALSE(v.satisfactory);
        CHECK(backend->request_count() == 0);
    }

    TEST_CASE("empty raw response forces unsatisfactory") {
        CHECK_FALSE(parse_verdict("").satisfactory);
        CHECK_FALSE(parse_verdict("maybe").satisfactory);
        CHECK(parse_verdict("1").satisfactory);
        CHECK(parse_verdict("Verdict: 1\nbecause").satisfactory);
        CHECK_FALSE(parse_verdict("0\n1").satisfactory);
    }

    TEST_CASE("provider failure defers and does not count") {
        auto llm = make_llm(std::make_shared<ScriptedLlm>(std::vector<std::optional<std::string>>{}), {1000, 0});
        const auto v = evaluate_reflection("a real answer", section, *llm);
        CHECK(v.deferred);
        CHECK_FALSE(v.satisfactory);

        Session s("s", make_test_script(2), InteractionMode::Reflection);
        s.advance(SessionEvent::start(0));
        finish_current_segment(s, 5000);
        s.advance(SessionEvent::reply_finished(6000));
        s.advance(SessionEvent::final_transcript(7000, "a real answer"));
        CHECK_NOTHROW(evaluate_reflection(s, "a real answer", *llm));
        auto r = s.advance(SessionEvent::verdict(7100, false, true));
        CHECK(r.new_state == SessionState::ReflectionPrompt);
        CHECK(s.reflection_attempts() == 0);
        CHECK(r.actions[0].text.starts_with(kDeferredLead));
    }

    TEST_CASE("requires the reflection window") {
        auto llm = make_llm(std::make_shared<EchoLlm>());
        Session s("s", make_test_script(2), InteractionMode::Reflection);
        CHECK_THROWS_AS(evaluate_reflection(s, "x", *llm), PreconditionError);
    }

    TEST_CASE("three unsatisfactory verdicts waive the gate") {
        Session s("s", make_test_script(2), InteractionMode::Reflection);
        std::int64_t t = 0;
        s.advance(SessionEvent::start(t));
        finish_current_segment(s, t += 5000);
        for (int attempt = 1; attempt <= 3; ++attempt) {
            s.advance(SessionEvent::reply_finished(t += 3000));
            s.advance(SessionEvent::final_transcript(t += 1000, "Confucius"));
            auto r = s.advance(SessionEvent::verdict(t += 100, false));
            if (attempt < 3) {
                CHECK(r.new_state == SessionState::ReflectionPrompt);
                CHECK(s.reflection_attempts() == attempt);
            } else {
                CHECK(r.new_state == SessionState::AgentSpeaking);
                CHECK(r.actions.back() == Action{Action::Kind::PlaySegment, 1, 0});
            }
        }
        CHECK(count_entries(s, entry_kind::kGateWaived) == 1);
        CHECK(s.reflection_attempts() == 0);
    }
}

TEST_SUITE("completion_code") {
    TEST_CASE("idempotent for a finished session") {
        Session s("fixed-id", make_test_script(1), InteractionMode::Standard);
        s.advance(SessionEvent::start(0));
        s.advance(SessionEvent::playback_finished(10));
        const auto a = completion_code(s), b = completion_code(s);
        CHECK(a == b);
        CHECK(a == derive_completion_code("fixed-id"));
        CHECK(a.size() == 6);
        for (char c : a) CHECK(((c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9')));
    }

    TEST_CASE("unfinished session") {
        Session s("x", make_test_script(1), InteractionMode::Standard);
        CHECK_THROWS_AS(completion_code(s), NotFinished);
        s.advance(SessionEvent::start(0));
        CHECK_THROWS_AS(completion_code(s), NotFinished);
    }

    TEST_CASE("distinct ids give distinct codes over 10^4 ids") {
        std::set<std::string> codes;
        for (int i = 0; i < 10000; ++i) codes.insert(derive_completion_code("session-" + std::to_string(i)));
        CHECK(codes.size() == 10000);
    }
}

TEST_SUITE("transcript") {
    TEST_CASE("append-only with non-decreasing time") {
        SessionTranscript t;
        t.append(10, Actor::Agent, "x");
        t.append(10, Actor::Learner, "y");
        CHECK_THROWS_AS(t.append(5, Actor::System, "z"), PreconditionError);
        CHECK(t.size() == 2);
    }

    TEST_CASE("jsonl round trip") {
        Session s("rt", make_test_script(2), InteractionMode::Reflection);
        s.advance(SessionEvent::start(0));
        s.advance(SessionEvent::playback_finished(100));
        s.advance(SessionEvent::final_transcript(200, "Confucius"));
        const auto text = s.transcript().to_jsonl();
        const auto back = SessionTranscript::from_jsonl(text);
        CHECK(back.to_jsonl() == text);
        CHECK(back.entries() == s.transcript().entries());
        const auto first = nlohmann::json::parse(text.substr(0, text.find('\n')));
        for (const auto* key : {"t_ms", "actor", "kind", "payload"}) CHECK(first.contains(key));
    }
}

TEST_SUITE("properties") {
    TEST_CASE("random legal sequences, Standard") {
        const auto r = reflectcast::testing::check_random_sequences(InteractionMode::Standard, 1000, 11);
        for (const auto& m : r.messages) MESSAGE(m);
        CHECK(r.ok());
        CHECK(r.sequences == 1000);
        CHECK(r.reached_end > 0);
    }

    TEST_CASE("random legal sequences, Reflection") {
        const auto r = reflectcast::testing::check_random_sequences(InteractionMode::Reflection, 1000, 29);
        for (const auto& m : r.messages) MESSAGE(m);
        CHECK(r.ok());
        CHECK(r.sequences == 1000);
        CHECK(r.reached_end > 0);
    }
}
