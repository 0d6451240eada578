#include "reflectcast/providers/registry.hpp"

#include <cstdlib>

#include "reflectcast/errors.hpp"

namespace reflectcast::providers {

namespace {

void require_credentials(const ProviderConfig& c) {
    if (c.api_key_env.empty()) return;
    const char* v = std::getenv(c.api_key_env.c_str());
    if (!v || !*v) {
        throw ConfigError(to_string(c.kind) + " provider: environment variable " + c.api_key_env + " is not set");
    }
}

[[noreturn]] void no_remote_backend(const ProviderConfig& c) {
    throw ConfigError(to_string(c.kind) + " provider: only endpoint \"mock\" is supported, got " + c.endpoint);
}

}  // namespace

ProviderSet make_providers(const ProvidersConfig& config, std::shared_ptr<const FixtureSet> fixtures) {
    config.validate();
    ProviderSet set;

    if (config.llm.is_mock()) {
        const auto& o = config.llm.options;
        std::shared_ptr<MockLlmBackend> backend;
        const auto kind = o.value("backend", std::string("demo"));
        if (kind == "demo") {
            backend = std::make_shared<DemoLlm>();
        } else if (kind == "echo") {
            backend = std::make_shared<EchoLlm>();
        } else {
            throw ConfigError("llm provider: unknown mock backend '" + kind + "'");
        }
        backend->set_delay(std::chrono::milliseconds(o.value("delay_ms", 0)));
        set.llm = make_llm(backend, config.llm.retry_policy());
    } else {
        require_credentials(config.llm);
        set.llm = make_llm(std::make_shared<HttpChatLlm>(config.llm), config.llm.retry_policy());
    }

    if (config.tts.is_mock()) {
        const auto& o = config.tts.options;
        const auto wave = o.value("waveform", std::string("silence"));
        if (wave != "silence" && wave != "tone") throw ConfigError("tts provider: unknown waveform '" + wave + "'");
        set.tts = std::make_shared<MockTts>(o.value("ms_per_char", 100),
                                            wave == "tone" ? MockTts::Waveform::Tone : MockTts::Waveform::Silence);
    } else {
        require_credentials(config.tts);
        set.tts = std::make_shared<HttpTts>(config.tts);
    }

    if (!config.stt.is_mock()) no_remote_backend(config.stt);
    MockSttConfig stt_cfg;
    stt_cfg.threshold = config.stt.options.value("threshold", stt_cfg.threshold);
    stt_cfg.endpoint_silence_ms = config.stt.options.value("endpoint_silence_ms", stt_cfg.endpoint_silence_ms);
    if (!fixtures) fixtures = std::make_shared<const FixtureSet>(FixtureSet::builtin());
    set.stt = std::make_shared<MockStt>(std::move(fixtures), stt_cfg);

    if (!config.vad.is_mock()) no_remote_backend(config.vad);
    VadConfig vad_cfg;
    vad_cfg.threshold = config.vad.options.value("threshold", vad_cfg.threshold);
    vad_cfg.hangover_ms = config.vad.options.value("hangover_ms", vad_cfg.hangover_ms);
    set.vad = std::make_shared<EnergyVadProvider>(vad_cfg);

    if (!config.turn.is_mock()) no_remote_backend(config.turn);
    set.turn = std::make_shared<MockTurnPredictor>();
    set.turn_threshold = config.turn.options.value("threshold", kDefaultTurnThreshold);
    if (set.turn_threshold < 0.0 || set.turn_threshold > 1.0) throw ConfigError("turn threshold must be in [0, 1]");

    return set;
}

}  // namespace reflectcast::providers
