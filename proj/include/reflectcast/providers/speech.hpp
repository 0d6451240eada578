#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "reflectcast/audio.hpp"
#include "reflectcast/providers/config.hpp"

namespace reflectcast::providers {

// ---------------------------------------------------------------------------
// Text to speech
// ---------------------------------------------------------------------------

class TtsProvider {
public:
    virtual ~TtsProvider() = default;
    // Mono PCM16 at 24 kHz. Throws PreconditionError on empty text, ProviderError on failure.
    virtual AudioClip synthesize_speech(const std::string& text) = 0;
    // Identifies the voice/model; part of the audio cache key.
    virtual std::string voice_id() const = 0;
};

// Emits `ms_per_char` milliseconds of audio per character (bytes of UTF-8).
class MockTts final : public TtsProvider {
public:
    enum class Waveform { Silence, Tone };

    explicit MockTts(int ms_per_char = 100, Waveform waveform = Waveform::Silence)
        : ms_per_char_(ms_per_char), waveform_(waveform) {}

    AudioClip synthesize_speech(const std::string& text) override;
    std::string voice_id() const override;
    std::size_t call_count() const;

private:
    int ms_per_char_;
    Waveform waveform_;
    mutable std::mutex mu_;
    std::size_t calls_ = 0;
};

// OpenAI-compatible /v1/audio/speech with response_format=pcm (24 kHz PCM16).
class HttpTts final : public TtsProvider {
public:
    explicit HttpTts(ProviderConfig config);
    AudioClip synthesize_speech(const std::string& text) override;
    std::string voice_id() const override;

private:
    ProviderConfig config_;
};

// ---------------------------------------------------------------------------
// Utterance fixtures: labeled learner speech for offline sessions
// ---------------------------------------------------------------------------

struct UtteranceFixture {
    std::string id;
    std::string text;
    std::int64_t duration_ms = 0;
};

class FixtureSet {
public:
    FixtureSet() = default;
    explicit FixtureSet(std::vector<UtteranceFixture> fixtures);

    // confucius, patriarchal, thales, question, hesitant, ok
    static FixtureSet builtin();
    static FixtureSet from_json(const nlohmann::json& j);

    const UtteranceFixture& at(const std::string& id) const;  // throws ConfigError
    bool contains(const std::string& id) const { return by_id_.count(id) != 0; }
    const std::vector<UtteranceFixture>& all() const { return fixtures_; }

    // Deterministic speech-like audio (seeded noise), frame aligned.
    static AudioClip render(const UtteranceFixture& f);
    // Looks up a fixture by the fingerprint of its first rendered frame.
    const UtteranceFixture* match_first_frame(std::span<const std::int16_t> frame) const;

private:
    std::vector<UtteranceFixture> fixtures_;
    std::map<std::string, std::size_t> by_id_;
    std::map<std::uint64_t, std::size_t> by_fingerprint_;
};

// ---------------------------------------------------------------------------
// Voice activity detection
// ---------------------------------------------------------------------------

struct VadEvent {
    enum class Kind { SpeechStart, SpeechEnd };
    Kind kind;
    std::int64_t t_ms;
    bool operator==(const VadEvent&) const = default;
};

struct VadConfig {
    double threshold = 0.01;  // frame RMS in [0, 1]
    int hangover_ms = 300;
};

// Per-stream detector. Frames are 20 ms and `t_ms` is the frame's start time.
class VoiceActivityDetector {
public:
    virtual ~VoiceActivityDetector() = default;
    virtual std::vector<VadEvent> push(std::span<const std::int16_t> frame, std::int64_t t_ms) = 0;
    virtual std::vector<VadEvent> flush() = 0;
    virtual bool in_speech() const = 0;
};

class EnergyVad final : public VoiceActivityDetector {
public:
    explicit EnergyVad(VadConfig config = {}) : config_(config) {}
    std::vector<VadEvent> push(std::span<const std::int16_t> frame, std::int64_t t_ms) override;
    std::vector<VadEvent> flush() override;
    bool in_speech() const override { return in_speech_; }

private:
    VadConfig config_;
    bool in_speech_ = false;
    std::int64_t last_voiced_end_ms_ = 0;
};

class VadProvider {
public:
    virtual ~VadProvider() = default;
    virtual std::unique_ptr<VoiceActivityDetector> open_stream() = 0;
};

class EnergyVadProvider final : public VadProvider {
public:
    explicit EnergyVadProvider(VadConfig config = {}) : config_(config) {}
    std::unique_ptr<VoiceActivityDetector> open_stream() override { return std::make_unique<EnergyVad>(config_); }
    const VadConfig& config() const { return config_; }

private:
    VadConfig config_;
};

// Whole-buffer convenience over a fresh stream.
std::vector<VadEvent> detect_voice_activity(VadProvider& vad, std::span<const Frame> frames, std::int64_t t0_ms = 0);

// ---------------------------------------------------------------------------
// Speech to text
// ---------------------------------------------------------------------------

struct TranscriptChunk {
    std::string text;
    bool is_final = false;
    std::int64_t t_start_ms = 0;
    std::int64_t t_end_ms = 0;
    bool operator==(const TranscriptChunk&) const = default;
};

class SpeechToText {
public:
    virtual ~SpeechToText() = default;
    virtual std::vector<TranscriptChunk> push(std::span<const std::int16_t> frame, std::int64_t t_ms) = 0;
    virtual std::vector<TranscriptChunk> flush() = 0;
};

class SttProvider {
public:
    virtual ~SttProvider() = default;
    virtual std::unique_ptr<SpeechToText> open_stream() = 0;
};

struct MockSttConfig {
    double threshold = 0.01;
    int endpoint_silence_ms = 200;  // silence that closes an utterance
    int interim_every_ms = 200;
};

// Recognizes rendered fixtures by fingerprint. Interims reveal words in
// proportion to elapsed speech; the final carries the full fixture text.
// Unrecognized utterances finalize with empty text.
class MockStt final : public SttProvider {
public:
    MockStt(std::shared_ptr<const FixtureSet> fixtures, MockSttConfig config = {})
        : fixtures_(std::move(fixtures)), config_(config) {}
    std::unique_ptr<SpeechToText> open_stream() override;

private:
    std::shared_ptr<const FixtureSet> fixtures_;
    MockSttConfig config_;
};

std::vector<TranscriptChunk> transcribe_stream(SttProvider& stt, std::span<const Frame> frames,
                                               std::int64_t t0_ms = 0);

// ---------------------------------------------------------------------------
// Turn-end prediction
// ---------------------------------------------------------------------------

struct TurnEndPrediction {
    double probability_end = 0.0;
    std::int64_t t_ms = 0;
};

struct TurnContext {
    std::vector<TranscriptChunk> chunks;
    std::vector<VadEvent> vad_events;
    std::int64_t t_ms = 0;
};

class TurnPredictor {
public:
    virtual ~TurnPredictor() = default;
    // Throws PreconditionError when the context holds no transcript chunk.
    virtual TurnEndPrediction predict_turn_end(const TurnContext& context) = 0;
};

// Ends in '.', '?' or '!' -> 0.9; trailing "and" -> 0.1; otherwise 0.6.
class MockTurnPredictor final : public TurnPredictor {
public:
    TurnEndPrediction predict_turn_end(const TurnContext& context) override;
};

inline constexpr double kDefaultTurnThreshold = 0.5;

// End of turn requires a speech_end and a prediction at or above threshold.
bool is_end_of_turn(bool speech_end_seen, const TurnEndPrediction& prediction,
                    double threshold = kDefaultTurnThreshold);

}  // namespace reflectcast::providers
