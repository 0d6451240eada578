#include "reflectcast/cli/cli.hpp"

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <pthread.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "reflectcast/analysis/study.hpp"
#include "reflectcast/content/pipeline.hpp"
#include "reflectcast/errors.hpp"
#include "reflectcast/providers/registry.hpp"
#include "reflectcast/service/hub.hpp"
#include "reflectcast/service/server.hpp"
#include "reflectcast/sim/learner.hpp"

namespace reflectcast::cli {

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nlohmann::json read_json(const fs::path& path) {
    try {
        return nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

// Writes to `path`, or to `out` when no path was given.
void emit(const std::string& path, const std::string& body, std::ostream& out) {
    if (path.empty()) {
        out << body;
        return;
    }
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + path);
    f << body;
}

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

struct Globals {
    std::string providers_path;

    providers::ProvidersConfig providers_config() const {
        return providers_path.empty() ? providers::ProvidersConfig::all_mock()
                                      : providers::load_providers_config(providers_path);
    }
    providers::ProviderSet make(std::shared_ptr<const providers::FixtureSet> fixtures = nullptr) const {
        if (!fixtures) fixtures = std::make_shared<const providers::FixtureSet>(providers::FixtureSet::builtin());
        return providers::make_providers(providers_config(), std::move(fixtures));
    }
};

content::SourceDocument load_source(const fs::path& path) {
    if (path.extension() == ".json") return content::document_from_json(read_json(path));
    return content::ingest_document(read_file(path), content::source_format_from_path(path), path.stem().string());
}

// Source document (.md/.txt/.json from ingest) or summary JSON, whichever the file holds.
content::StructuredSummary load_summary(const fs::path& path, providers::LlmProvider& llm,
                                        const content::GenerationOptions& options) {
    if (path.extension() == ".json") {
        const auto j = read_json(path);
        if (j.contains("sections")) return content::summary_from_json(j);
        return content::build_structured_summary(content::document_from_json(j), llm, options);
    }
    return content::build_structured_summary(load_source(path), llm, options);
}

content::PodcastScript build_script(const content::StructuredSummary& summary, providers::LlmProvider& llm,
                                    const content::GenerationOptions& options) {
    return content::assemble_script(summary, content::generate_segments(summary, llm, options));
}

// A script.json, or any source the pipeline accepts.
content::PodcastScript load_lesson(const fs::path& path, const providers::ProviderSet& p) {
    if (path.extension() == ".json") {
        const auto j = read_json(path);
        if (j.contains("segments")) return content::load_script(path);
    }
    return build_script(load_summary(path, *p.llm, {}), *p.llm, {});
}

const std::map<std::string, std::string> kModes{{"standard", "standard"}, {"reflection", "reflection"}};

// --- serve -------------------------------------------------------------------------

struct ServeArgs {
    std::string host;
    int port = -1;
    std::string config;
    std::string content_dir;
    std::string mode_default;
    double time_scale = 0;
};

// Blocks SIGINT and SIGTERM in every thread started after this, so sigwait sees them.
class SignalWaiter {
public:
    SignalWaiter() {
        sigemptyset(&set_);
        sigaddset(&set_, SIGINT);
        sigaddset(&set_, SIGTERM);
        pthread_sigmask(SIG_BLOCK, &set_, &old_);
    }
    ~SignalWaiter() { pthread_sigmask(SIG_SETMASK, &old_, nullptr); }
    int wait() {
        int sig = 0;
        sigwait(&set_, &sig);
        return sig;
    }

private:
    sigset_t set_{}, old_{};
};

int serve(const Globals& g, const ServeArgs& a, std::ostream& out) {
    service::ServerOptions so;
    service::HubOptions ho;
    if (!a.config.empty()) {
        // {"host", "port", "time_scale", "threads", "tick_ms", "mode_default", "turn_grace_ms"}
        const auto j = read_json(a.config);
        so.host = j.value("host", so.host);
        so.port = j.value("port", so.port);
        so.time_scale = j.value("time_scale", so.time_scale);
        so.threads = j.value("threads", so.threads);
        so.tick_ms = j.value("tick_ms", so.tick_ms);
        ho.default_mode = j.value("mode_default", ho.default_mode);
        ho.runtime.turn_grace_ms = j.value("turn_grace_ms", ho.runtime.turn_grace_ms);
    }
    if (!a.host.empty()) so.host = a.host;
    if (a.port >= 0) so.port = static_cast<unsigned short>(a.port);
    if (a.time_scale > 0) so.time_scale = a.time_scale;
    if (!a.mode_default.empty()) ho.default_mode = a.mode_default;
    session::mode_from_string(ho.default_mode);
    if (so.time_scale <= 0 || so.threads < 1 || so.tick_ms < 1) throw ConfigError("time_scale, threads and tick_ms must be positive");

    const auto providers = g.make();
    auto store = std::make_shared<service::ContentStore>();
    store->load_dir(a.content_dir, *providers.tts);
    if (store->ids().empty()) throw ConfigError("no lessons (subdirectories with script.json) in " + a.content_dir);

    SignalWaiter signals;
    service::Server server(std::make_shared<service::SessionHub>(store, providers, ho), so);
    server.start();
    out << "listening on " << so.host << ":" << server.port() << std::endl;
    const int sig = signals.wait();
    spdlog::info("signal {}, shutting down", sig);
    server.stop();
    return kOk;
}

// --- simulate ----------------------------------------------------------------------

struct SimulateArgs {
    std::string script;
    std::string mode = "standard";
    std::string lesson;
    std::string fixtures;
    std::string out;
    std::string transcript;
    std::string latency;
    std::int64_t watchdog_ms = 60000;
};

int simulate(const Globals& g, const SimulateArgs& a, std::ostream& out, std::ostream& err) {
    auto fixtures = std::make_shared<const providers::FixtureSet>(
        a.fixtures.empty() ? providers::FixtureSet::builtin() : providers::FixtureSet::from_json(read_json(a.fixtures)));
    const auto learner = sim::load_learner_script(a.script);
    sim::validate(learner, *fixtures);
    const auto mode = session::mode_from_string(a.mode);
    const auto providers = g.make(fixtures);

    auto store = std::make_shared<service::ContentStore>();
    store->add("lesson", service::with_audio(load_lesson(a.lesson, providers), *providers.tts));
    sim::SimulationOptions options;
    options.watchdog_ms = a.watchdog_ms;
    const auto r = sim::run_simulation(learner, mode, "lesson", store, providers, *fixtures, options);

    // Wall-clock fields vary run to run; they go to --latency so --out stays reproducible.
    auto j = sim::to_json(r);
    const auto latency = j["latency"];
    const auto wall_ms = j["wall_ms"];
    j.erase("latency");
    j.erase("wall_ms");
    emit(a.out, dump(j), out);
    if (!a.transcript.empty()) emit(a.transcript, r.transcript.to_jsonl(), out);
    if (!a.latency.empty()) emit(a.latency, dump({{"wall_ms", wall_ms}, {"latency", latency}}), out);
    if (r.latency) {
        spdlog::info("latency over {} turns: mean {:.1f} ms, p95 {:.1f} ms", r.latency->summary.count,
                     r.latency->summary.mean_ms, r.latency->summary.p95_ms);
    }
    if (r.final_state != session::SessionState::End) {
        err << "session stopped in " << session::to_string(r.final_state) << "\n";
        return kDomainError;
    }
    return kOk;
}

// --- analyze -----------------------------------------------------------------------

struct AnalyzeArgs {
    std::string csv;
    std::string key;
    std::string out;
    std::string sd = "sample";
    bool json = false;
};

int analyze(const AnalyzeArgs& a, std::ostream& out) {
    std::optional<std::vector<std::string>> key;
    if (!a.key.empty()) key = analysis::load_answer_key(a.key);
    const auto records = analysis::load_records_csv(a.csv, key ? &*key : nullptr);
    const auto report = analysis::analyze(records);
    const auto j = dump(analysis::to_json(report));
    if (!a.out.empty()) emit(a.out, j, out);
    if (a.json) {
        out << j;
    } else {
        out << analysis::format_table(report, a.sd == "population" ? analysis::SdConvention::Population
                                                                    : analysis::SdConvention::Sample);
    }
    return kOk;
}

}  // namespace

void configure_logging() {
    static const bool done = [] {
        auto logger = spdlog::stderr_color_mt("reflectcast");
        spdlog::set_default_logger(logger);
        spdlog::set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
        return true;
    }();
    (void)done;
    auto level = spdlog::level::warn;
    if (const char* env = std::getenv("LOG_LEVEL"); env && *env) {
        level = spdlog::level::from_str(env);
        // from_str maps unknown names to off
        if (level == spdlog::level::off && std::string(env) != "off") level = spdlog::level::warn;
    }
    spdlog::set_level(level);
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Lesson podcasts with spoken reflection prompts: content pipeline, session server, learner simulator and study analysis."};
    app.name("reflectcast");
    app.require_subcommand(1);
    Globals g;
    app.add_option("--providers", g.providers_path, "Provider config JSON (default: every provider mocked)")
        ->check(CLI::ExistingFile);

    content::GenerationOptions gen;
    std::string input, out_path, id;

    auto* ingest = app.add_subcommand("ingest", "Split a Markdown or plain-text chapter into paragraphs");
    ingest->add_option("--input", input, "Chapter file (.md or .txt)")->required()->check(CLI::ExistingFile);
    ingest->add_option("--out", out_path, "Document JSON (default: stdout)");
    ingest->add_option("--id", id, "Document id (default: file stem)");

    auto* summarize = app.add_subcommand("summarize", "Build the structured summary, one LLM request per paragraph");
    summarize->add_option("--input", input, "Chapter file or document JSON")->required()->check(CLI::ExistingFile);
    summarize->add_option("--out", out_path, "Summary JSON (default: stdout)");
    summarize->add_option("--jobs", gen.parallelism, "Concurrent provider requests")->check(CLI::PositiveNumber);

    auto* script = app.add_subcommand("script", "Generate and assemble the podcast script");
    script->add_option("--input", input, "Summary JSON, document JSON or chapter file")->required()->check(CLI::ExistingFile);
    script->add_option("--out", out_path, "Script JSON (default: stdout)");
    script->add_option("--jobs", gen.parallelism, "Concurrent provider requests")->check(CLI::PositiveNumber);

    std::string cache_dir;
    auto* synth = app.add_subcommand("synth", "Synthesize segment audio and write script.json with audio/*.wav");
    synth->add_option("--input", input, "Script JSON")->required()->check(CLI::ExistingFile);
    synth->add_option("--out", out_path, "Output script.json; WAV files go to audio/ beside it")->required();
    synth->add_option("--cache", cache_dir, "Audio cache directory");

    ServeArgs sa;
    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP/WebSocket session server until SIGINT or SIGTERM");
    serve_cmd->add_option("--host", sa.host, "Bind address (default 127.0.0.1)");
    serve_cmd->add_option("--port", sa.port, "Port, 0 for any free port (default 8080)")->check(CLI::Range(0, 65535));
    serve_cmd->add_option("--config", sa.config, "Server config JSON")->check(CLI::ExistingFile);
    serve_cmd->add_option("--content-dir", sa.content_dir, "One subdirectory with script.json per lesson")
        ->required()
        ->check(CLI::ExistingDirectory);
    serve_cmd->add_option("--mode-default", sa.mode_default, "Mode when session.start omits it")
        ->check(CLI::IsMember(kModes));
    serve_cmd->add_option("--time-scale", sa.time_scale, "Session clock speed relative to wall time")
        ->check(CLI::PositiveNumber);

    SimulateArgs sm;
    auto* simulate_cmd = app.add_subcommand("simulate", "Drive one session with a scripted learner on virtual time");
    simulate_cmd->add_option("--script", sm.script, "Learner script JSON")->required()->check(CLI::ExistingFile);
    simulate_cmd->add_option("--mode", sm.mode, "standard or reflection")->check(CLI::IsMember(kModes));
    simulate_cmd->add_option("--lesson", sm.lesson, "script.json, or a chapter run through the pipeline")
        ->required()
        ->check(CLI::ExistingFile);
    simulate_cmd->add_option("--fixtures", sm.fixtures, "Utterance fixture JSON (default: built in)")->check(CLI::ExistingFile);
    simulate_cmd->add_option("--out", sm.out, "Result JSON (default: stdout)");
    simulate_cmd->add_option("--transcript", sm.transcript, "Transcript as JSON lines");
    simulate_cmd->add_option("--latency", sm.latency, "Wall-clock latency report JSON");
    simulate_cmd->add_option("--watchdog-ms", sm.watchdog_ms, "Session time without progress before a stall")
        ->check(CLI::PositiveNumber);

    AnalyzeArgs aa;
    auto* analyze_cmd = app.add_subcommand("analyze", "Score participant records and compare the two conditions");
    analyze_cmd->add_option("--csv", aa.csv, "Participant records CSV")->required()->check(CLI::ExistingFile);
    analyze_cmd->add_option("--key", aa.key, "Answer key for answer_N columns")->check(CLI::ExistingFile);
    analyze_cmd->add_option("--out", aa.out, "JSON report");
    analyze_cmd->add_option("--sd", aa.sd, "Printed SD denominator: sample (n - 1) or population (n)")
        ->check(CLI::IsMember({"sample", "population"}));
    analyze_cmd->add_flag("--json", aa.json, "Print the JSON report instead of the table");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n";
        const CLI::App* scope = &app;
        for (const auto* sub : app.get_subcommands()) scope = sub;
        err << scope->help();
        return kUsageError;
    }

    try {
        if (ingest->parsed()) {
            const auto doc = content::ingest_document(read_file(input), content::source_format_from_path(input),
                                                      id.empty() ? fs::path(input).stem().string() : id);
            emit(out_path, dump(content::to_json(doc)), out);
        } else if (summarize->parsed()) {
            const auto p = g.make();
            emit(out_path, dump(content::to_json(content::build_structured_summary(load_source(input), *p.llm, gen))), out);
        } else if (script->parsed()) {
            const auto p = g.make();
            const auto s = build_script(load_summary(input, *p.llm, gen), *p.llm, gen);
            if (out_path.empty()) {
                emit("", dump(content::to_json(s)), out);
            } else {
                if (fs::path(out_path).has_parent_path()) fs::create_directories(fs::path(out_path).parent_path());
                content::save_script(s, out_path);
            }
        } else if (synth->parsed()) {
            const auto p = g.make();
            auto s = content::load_script(input);
            std::optional<content::AudioCache> cache;
            if (!cache_dir.empty()) cache.emplace(cache_dir);
            for (auto& seg : s.segments) seg = content::synthesize_segment(std::move(seg), *p.tts, cache ? &*cache : nullptr);
            if (fs::path(out_path).has_parent_path()) fs::create_directories(fs::path(out_path).parent_path());
            content::save_script(s, out_path);
        } else if (serve_cmd->parsed()) {
            return serve(g, sa, out);
        } else if (simulate_cmd->parsed()) {
            return simulate(g, sm, out, err);
        } else if (analyze_cmd->parsed()) {
            return analyze(aa, out);
        }
        return kOk;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kDomainError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kDomainError;
    }
}

}  // namespace reflectcast::cli
