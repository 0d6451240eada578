#pragma once

#include <memory>

#include "reflectcast/providers/config.hpp"
#include "reflectcast/providers/llm.hpp"
#include "reflectcast/providers/speech.hpp"

namespace reflectcast::providers {

struct ProviderSet {
    std::shared_ptr<LlmProvider> llm;
    std::shared_ptr<TtsProvider> tts;
    std::shared_ptr<SttProvider> stt;
    std::shared_ptr<VadProvider> vad;
    std::shared_ptr<TurnPredictor> turn;
    double turn_threshold = kDefaultTurnThreshold;
};

// Builds providers from config. Offline sessions use endpoint "mock" for every kind.
// Mock options:
//   llm:  {"backend": "demo" | "echo", "delay_ms": int}
//   tts:  {"ms_per_char": int, "waveform": "silence" | "tone"}
//   stt:  {"threshold": real, "endpoint_silence_ms": int}
//   vad:  {"threshold": real, "hangover_ms": int}
//   turn: {"threshold": real}
ProviderSet make_providers(const ProvidersConfig& config, std::shared_ptr<const FixtureSet> fixtures);

}  // namespace reflectcast::providers
