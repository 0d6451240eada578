#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "reflectcast/content/pipeline.hpp"
#include "reflectcast/errors.hpp"
#include "reflectcast/prompts.hpp"

using namespace reflectcast;
using namespace reflectcast::content;
using namespace reflectcast::providers;

namespace {

std::string read_fixture(const std::string& name) {
    std::ifstream in(std::string(REFLECTCAST_FIXTURE_DIR) + "/" + name);
    REQUIRE(in);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

SourceDocument five_paragraph_doc() {
    return ingest_document(read_fixture("five_paragraphs.txt"), SourceFormat::Plain, "five");
}

std::string section_json(const std::string& heading, const std::string& summary) {
    return nlohmann::json{{"heading", heading}, {"summary_text", summary}}.dump();
}

std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("reflectcast-" + name + "-" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

StructuredSummary demo_summary() {
    auto llm = make_llm(std::make_shared<DemoLlm>());
    return build_structured_summary(five_paragraph_doc(), *llm);
}

}  // namespace

TEST_SUITE("ingest_document") {
    TEST_CASE("empty input") {
        CHECK_THROWS_AS(ingest_document("", SourceFormat::Plain), EmptyDocument);
        CHECK_THROWS_AS(ingest_document("  \n\t\n", SourceFormat::Markdown), EmptyDocument);
    }

    TEST_CASE("three plain paragraphs") {
        const auto doc = ingest_document("one\n\ntwo\nstill two\n\n\nthree\n", SourceFormat::Plain);
        REQUIRE(doc.paragraphs.size() == 3);
        for (int i = 0; i < 3; ++i) CHECK(doc.paragraphs[static_cast<std::size_t>(i)].index == i);
        CHECK(doc.paragraphs[1].text == "two still two");
    }

    TEST_CASE("markdown fixture matches the golden document") {
        const auto doc = ingest_document(read_fixture("ancient_philosophy.md"), SourceFormat::Markdown, "early-philosophers");
        const auto golden = document_from_json(nlohmann::json::parse(read_fixture("ancient_philosophy.golden.json")));
        CHECK(doc.paragraphs.size() == 4);
        CHECK(doc.title == "Early Philosophers");
        CHECK(doc == golden);
    }

    TEST_CASE("later headings annotate paragraphs") {
        const auto doc = ingest_document("# Title\n\nintro\n\n## Part\n\nbody\n", SourceFormat::Markdown);
        REQUIRE(doc.paragraphs.size() == 2);
        CHECK(doc.paragraphs[0].heading.empty());
        CHECK(doc.paragraphs[1].heading == "Part");
    }

    TEST_CASE("headings alone are empty") {
        CHECK_THROWS_AS(ingest_document("# Only a title\n", SourceFormat::Markdown), EmptyDocument);
    }

    TEST_CASE("default id is stable") {
        CHECK(ingest_document("a\n\nb", SourceFormat::Plain).id == ingest_document("a\n\nb", SourceFormat::Plain).id);
    }

    TEST_CASE("document json round trip") {
        const auto doc = five_paragraph_doc();
        CHECK(document_from_json(to_json(doc)) == doc);
    }
}

TEST_SUITE("build_structured_summary") {
    TEST_CASE("five paragraphs give five sections in order") {
        auto backend = std::make_shared<DemoLlm>();
        auto llm = make_llm(backend);
        const auto doc = five_paragraph_doc();
        const auto summary = build_structured_summary(doc, *llm);
        REQUIRE(summary.sections.size() == 5);
        for (int i = 0; i < 5; ++i) {
            CHECK(summary.sections[static_cast<std::size_t>(i)].section_id == i);
            CHECK(summary.sections[static_cast<std::size_t>(i)].source_paragraph == i);
        }
        CHECK_NOTHROW(summary.validate_against(doc));
    }

    TEST_CASE("each request carries only its paragraph and the title") {
        auto backend = std::make_shared<DemoLlm>();
        auto llm = make_llm(backend);
        const auto doc = five_paragraph_doc();
        build_structured_summary(doc, *llm);
        const auto requests = backend->requests();
        REQUIRE(requests.size() == 5);
        for (const auto& req : requests) {
            const auto& body = req.last_user_text();
            int hits = 0;
            for (const auto& p : doc.paragraphs) hits += body.find(p.text) != std::string::npos;
            CHECK(hits == 1);
        }
    }

    TEST_CASE("one paragraph with a fixed mock") {
        auto llm = make_llm(std::make_shared<FixedLlm>(section_json("Heading", "the fixed response")));
        const auto summary = build_structured_summary(ingest_document("just one paragraph", SourceFormat::Plain), *llm);
        REQUIRE(summary.sections.size() == 1);
        CHECK(summary.sections[0].summary_text == "the fixed response");
    }

    TEST_CASE("malformed twice then valid succeeds with budget 2") {
        auto backend = std::make_shared<ScriptedLlm>(std::vector<std::optional<std::string>>{
            "not json", R"({"heading": 3})", section_json("H", "S")});
        auto llm = make_llm(backend);
        const auto summary = build_structured_summary(ingest_document("p", SourceFormat::Plain), *llm, {2, 1});
        CHECK(summary.sections.at(0).summary_text == "S");
        CHECK(backend->request_count() == 3);
    }

    TEST_CASE("malformed beyond the budget is a schema error") {
        auto llm = make_llm(std::make_shared<FixedLlm>("[]"));
        CHECK_THROWS_AS(build_structured_summary(ingest_document("p", SourceFormat::Plain), *llm, {2, 1}),
                        SchemaValidationError);
    }

    TEST_CASE("fenced and wrapped responses are accepted") {
        auto backend = std::make_shared<ScriptedLlm>(std::vector<std::optional<std::string>>{
            "```json\n" + section_json("A", "first") + "\n```",
            R"({"sections": [{"heading": "B", "summary_text": "second"}]})",
            R"([{"heading": "C", "summary_text": "third"}])"});
        auto llm = make_llm(backend);
        const auto summary = build_structured_summary(ingest_document("a\n\nb\n\nc", SourceFormat::Plain), *llm);
        CHECK(summary.sections[0].summary_text == "first");
        CHECK(summary.sections[1].summary_text == "second");
        CHECK(summary.sections[2].summary_text == "third");
    }

    TEST_CASE("transport failure surfaces as a provider error") {
        auto llm = make_llm(std::make_shared<ScriptedLlm>(std::vector<std::optional<std::string>>{}), {1000, 0});
        CHECK_THROWS_AS(build_structured_summary(ingest_document("p", SourceFormat::Plain), *llm), ProviderError);
    }

    TEST_CASE("parallel generation matches sequential") {
        auto llm = make_llm(std::make_shared<DemoLlm>());
        const auto doc = five_paragraph_doc();
        CHECK(build_structured_summary(doc, *llm, {2, 4}) == build_structured_summary(doc, *llm, {2, 1}));
    }
}

TEST_SUITE("generate_segment") {
    TEST_CASE("echo mock script for section 2") {
        const auto summary = demo_summary();
        auto llm = make_llm(std::make_shared<FixedLlm>("narration for two"));
        const auto seg = generate_segment(summary.sections[2], {summary.title, summary.outline_headings()}, *llm);
        CHECK(seg.section_id == 2);
        CHECK(seg.script_text == "narration for two");
        CHECK_FALSE(seg.audio.has_value());
    }

    TEST_CASE("requests reference only their own section plus the outline") {
        const auto summary = demo_summary();
        auto backend = std::make_shared<DemoLlm>();
        auto llm = make_llm(backend);
        generate_segments(summary, *llm, {}, std::vector<int>{4, 0, 2, 1, 3});
        const auto requests = backend->requests();
        REQUIRE(requests.size() == 5);
        const std::vector<int> order{4, 0, 2, 1, 3};
        for (std::size_t r = 0; r < requests.size(); ++r) {
            const auto body = requests[r].system_text + "\n" + requests[r].last_user_text();
            for (const auto& s : summary.sections) {
                const bool own = s.section_id == order[r];
                CHECK((body.find(s.summary_text) != std::string::npos) == own);
                CHECK(body.find(s.heading) != std::string::npos);
            }
        }
    }

    TEST_CASE("permuted generation order assembles the same script") {
        const auto summary = demo_summary();
        auto llm = make_llm(std::make_shared<DemoLlm>());
        const auto in_order = assemble_script(summary, generate_segments(summary, *llm));
        const auto permuted = assemble_script(summary, generate_segments(summary, *llm, {}, std::vector<int>{4, 0, 2, 1, 3}));
        CHECK(in_order == permuted);
    }

    TEST_CASE("whitespace-only output") {
        const auto summary = demo_summary();
        auto llm = make_llm(std::make_shared<FixedLlm>("  \n "));
        CHECK_THROWS_AS(generate_segment(summary.sections[0], {summary.title, summary.outline_headings()}, *llm),
                        EmptyGeneration);
    }
}

TEST_SUITE("synthesize_segment") {
    TEST_CASE("one second per ten characters") {
        MockTts tts(100);
        PodcastSegment seg{0, std::string(20, 'a')};
        const auto out = synthesize_segment(seg, tts);
        REQUIRE(out.audio.has_value());
        CHECK(out.duration_ms == 2000);
        CHECK(out.audio->sample_rate == kSampleRate);
    }

    TEST_CASE("empty script") {
        MockTts tts;
        CHECK_THROWS_AS(synthesize_segment(PodcastSegment{0, ""}, tts), PreconditionError);
    }

    TEST_CASE("durations add up") {
        MockTts tts(100);
        const auto summary = demo_summary();
        std::vector<PodcastSegment> segs;
        std::int64_t expected = 0;
        for (int i = 0; i < 3; ++i) {
            auto s = synthesize_segment(PodcastSegment{i, std::string(static_cast<std::size_t>(7 + i * 5), 'x')}, tts);
            expected += s.duration_ms;
            segs.push_back(std::move(s));
        }
        StructuredSummary three = summary;
        three.sections.resize(3);
        const auto script = assemble_script(three, segs);
        CHECK(script.total_duration_ms() == expected);
        std::int64_t samples = 0;
        for (const auto& s : script.segments) samples += static_cast<std::int64_t>(s.audio->samples.size());
        CHECK(samples * 1000 / kSampleRate == expected);
    }

    TEST_CASE("cache hit skips the provider") {
        const auto dir = temp_dir("cache");
        AudioCache cache(dir);
        MockTts tts(100, MockTts::Waveform::Tone);
        const auto a = synthesize_segment(PodcastSegment{0, "hello there"}, tts, &cache);
        const auto b = synthesize_segment(PodcastSegment{0, "hello there"}, tts, &cache);
        CHECK(tts.call_count() == 1);
        CHECK(a.audio->samples == b.audio->samples);
        CHECK(cache.key_for("v1", "text") != cache.key_for("v2", "text"));
        std::filesystem::remove_all(dir);
    }
}

TEST_SUITE("assemble_script") {
    StructuredSummary three_sections() {
        StructuredSummary s;
        s.doc_id = "d";
        for (int i = 0; i < 3; ++i) s.sections.push_back({i, "h" + std::to_string(i), "s" + std::to_string(i), i});
        return s;
    }

    TEST_CASE("sorts by section id") {
        const auto script = assemble_script(three_sections(), {{2, "c"}, {0, "a"}, {1, "b"}});
        REQUIRE(script.segments.size() == 3);
        for (int i = 0; i < 3; ++i) CHECK(script.segments[static_cast<std::size_t>(i)].section_id == i);
    }

    TEST_CASE("duplicates") {
        CHECK_THROWS_AS(assemble_script(three_sections(), {{0, "a"}, {0, "a"}, {1, "b"}}), DuplicateSection);
    }

    TEST_CASE("missing section reports its id") {
        try {
            assemble_script(three_sections(), {{0, "a"}, {2, "c"}});
            FAIL("expected MissingSection");
        } catch (const MissingSection& e) {
            CHECK(e.section_id() == 1);
        }
    }

    TEST_CASE("invariant under shuffling") {
        std::vector<PodcastSegment> segs{{0, "a"}, {1, "b"}, {2, "c"}};
        const auto base = assemble_script(three_sections(), segs);
        std::mt19937 rng(7);
        for (int i = 0; i < 20; ++i) {
            std::shuffle(segs.begin(), segs.end(), rng);
            CHECK(assemble_script(three_sections(), segs) == base);
        }
    }
}

TEST_SUITE("coverage_report") {
    SessionTranscript played(std::initializer_list<int> ids) {
        SessionTranscript t;
        std::int64_t ms = 0;
        for (int id : ids) t.append(ms += 1000, Actor::System, entry_kind::kSegmentComplete, {{"section_id", id}});
        return t;
    }

    TEST_CASE("full playback") {
        const auto r = coverage_report(demo_summary(), played({0, 1, 2, 3, 4}));
        CHECK(r.coverage_fraction() == doctest::Approx(1.0));
        CHECK(r.uncovered_sections.empty());
    }

    TEST_CASE("abandoned after segment 1") {
        const auto r = coverage_report(demo_summary(), played({0, 1}));
        CHECK(r.covered_sections == std::set<int>{0, 1});
        CHECK(r.uncovered_sections == std::set<int>{2, 3, 4});
        CHECK(r.coverage_fraction() == doctest::Approx(0.4));
    }

    TEST_CASE("unknown section") {
        CHECK_THROWS_AS(coverage_report(demo_summary(), played({0, 9})), MismatchedSummary);
    }

    TEST_CASE("monotone over a growing transcript") {
        const auto summary = demo_summary();
        SessionTranscript t;
        double last = 0;
        for (int i = 0; i < 5; ++i) {
            t.append(i * 10, Actor::System, entry_kind::kEvent, {{"kind", "noise"}});
            t.append(i * 10 + 5, Actor::System, entry_kind::kSegmentComplete, {{"section_id", i}});
            const double f = coverage_report(summary, t).coverage_fraction();
            CHECK(f >= last);
            last = f;
        }
    }
}

TEST_SUITE("persistence") {
    TEST_CASE("script with audio round trips") {
        const auto dir = temp_dir("script");
        const auto summary = demo_summary();
        auto llm = make_llm(std::make_shared<DemoLlm>());
        MockTts tts(100, MockTts::Waveform::Tone);
        auto segments = generate_segments(summary, *llm);
        for (auto& s : segments) s = synthesize_segment(std::move(s), tts);
        const auto script = assemble_script(summary, segments);
        save_script(script, dir / "script.json");
        const auto loaded = load_script(dir / "script.json");
        REQUIRE(loaded.segments.size() == script.segments.size());
        for (std::size_t i = 0; i < script.segments.size(); ++i) {
            CHECK(loaded.segments[i].script_text == script.segments[i].script_text);
            CHECK(loaded.segments[i].duration_ms == script.segments[i].duration_ms);
            REQUIRE(loaded.segments[i].audio.has_value());
            CHECK(loaded.segments[i].audio->samples == script.segments[i].audio->samples);
        }
        CHECK(loaded.summary == script.summary);
        std::filesystem::remove_all(dir);
    }

    TEST_CASE("wav format is PCM16 mono 24 kHz") {
        const auto dir = temp_dir("wav");
        AudioClip clip = make_silence(100);
        clip.samples[3] = 1234;
        write_wav(dir / "a.wav", clip);
        std::ifstream in(dir / "a.wav", std::ios::binary);
        std::string header(44, '\0');
        in.read(header.data(), 44);
        CHECK(header.substr(0, 4) == "RIFF");
        CHECK(header.substr(8, 4) == "WAVE");
        auto u16 = [&](int off) { return static_cast<unsigned>(static_cast<unsigned char>(header[static_cast<std::size_t>(off)]) |
                                                              (static_cast<unsigned char>(header[static_cast<std::size_t>(off + 1)]) << 8)); };
        auto u32 = [&](int off) { return u16(off) | (u16(off + 2) << 16); };
        CHECK(u16(20) == 1);      // PCM
        CHECK(u16(22) == 1);      // mono
        CHECK(u32(24) == 24000);  // sample rate
        CHECK(u16(34) == 16);     // bits per sample
        CHECK(read_wav(dir / "a.wav").samples == clip.samples);
        std::filesystem::remove_all(dir);
    }
}
