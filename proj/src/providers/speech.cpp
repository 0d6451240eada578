#include "reflectcast/providers/speech.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "reflectcast/errors.hpp"
#include "reflectcast/text.hpp"

namespace reflectcast::providers {

// ---------------------------------------------------------------------------
// MockTts

AudioClip MockTts::synthesize_speech(const std::string& text) {
    if (text::is_blank(text)) throw PreconditionError("tts: text is empty");
    {
        std::lock_guard lock(mu_);
        ++calls_;
    }
    const std::int64_t duration_ms = static_cast<std::int64_t>(text.size()) * ms_per_char_;
    AudioClip clip = make_silence(duration_ms);
    if (waveform_ == Waveform::Tone) {
        // 220 Hz with a slow amplitude wobble so level meters have something to show.
        for (std::size_t i = 0; i < clip.samples.size(); ++i) {
            const double t = static_cast<double>(i) / kSampleRate;
            const double env = 0.55 + 0.45 * std::sin(2 * std::numbers::pi * 3.0 * t);
            clip.samples[i] = static_cast<std::int16_t>(std::lround(8000.0 * env * std::sin(2 * std::numbers::pi * 220.0 * t)));
        }
    }
    return clip;
}

std::string MockTts::voice_id() const {
    return "mock-" + std::to_string(ms_per_char_) + (waveform_ == Waveform::Tone ? "ms-tone" : "ms-silence");
}

std::size_t MockTts::call_count() const {
    std::lock_guard lock(mu_);
    return calls_;
}

// ---------------------------------------------------------------------------
// FixtureSet

FixtureSet::FixtureSet(std::vector<UtteranceFixture> fixtures) : fixtures_(std::move(fixtures)) {
    for (std::size_t i = 0; i < fixtures_.size(); ++i) {
        auto& f = fixtures_[i];
        if (f.id.empty()) throw ConfigError("utterance fixture with empty id");
        if (f.duration_ms <= 0) {
            f.duration_ms = std::max<std::int64_t>(400, 250 * static_cast<std::int64_t>(text::split_words(f.text).size()));
        }
        if (!by_id_.emplace(f.id, i).second) throw ConfigError("duplicate utterance fixture '" + f.id + "'");
        const auto frames = split_frames(render(f));
        const auto fp = stable_hash(std::span<const std::int16_t>(frames.front()));
        if (!by_fingerprint_.emplace(fp, i).second) throw ConfigError("fixture fingerprint collision for '" + f.id + "'");
    }
}

FixtureSet FixtureSet::builtin() {
    return FixtureSet({
        {"confucius", "Confucius", 600},
        {"patriarchal", "Confucius' teachings would be considered patriarchal by modern standards", 3600},
        {"thales", "Thales looked for natural explanations instead of myths, which feels like the start of science.",
         4200},
        {"question", "Wait, can you explain what a sage is?", 2000},
        {"hesitant", "I think it was mostly about the sages and", 2200},
        {"ok", "Okay.", 500},
    });
}

FixtureSet FixtureSet::from_json(const nlohmann::json& j) {
    const auto& list = j.is_object() && j.contains("utterances") ? j.at("utterances") : j;
    if (!list.is_array()) throw ConfigError("utterance fixtures must be a JSON array");
    std::vector<UtteranceFixture> out;
    for (const auto& item : list) {
        try {
            out.push_back({item.at("id").get<std::string>(), item.at("text").get<std::string>(),
                           item.value("duration_ms", std::int64_t{0})});
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("utterance fixture: ") + e.what());
        }
    }
    return FixtureSet(std::move(out));
}

const UtteranceFixture& FixtureSet::at(const std::string& id) const {
    auto it = by_id_.find(id);
    if (it == by_id_.end()) throw ConfigError("unknown utterance fixture '" + id + "'");
    return fixtures_[it->second];
}

AudioClip FixtureSet::render(const UtteranceFixture& f) {
    const std::int64_t frames = (f.duration_ms + kFrameMs - 1) / kFrameMs;
    AudioClip clip;
    clip.samples.resize(static_cast<std::size_t>(frames * kFrameSamples));
    std::mt19937_64 rng(stable_hash(f.id));
    std::uniform_int_distribution<int> dist(-9000, 9000);
    for (auto& s : clip.samples) s = static_cast<std::int16_t>(dist(rng));
    return clip;
}

const UtteranceFixture* FixtureSet::match_first_frame(std::span<const std::int16_t> frame) const {
    auto it = by_fingerprint_.find(stable_hash(frame));
    return it == by_fingerprint_.end() ? nullptr : &fixtures_[it->second];
}

// ---------------------------------------------------------------------------
// EnergyVad

std::vector<VadEvent> EnergyVad::push(std::span<const std::int16_t> frame, std::int64_t t_ms) {
    std::vector<VadEvent> out;
    const std::int64_t frame_end = t_ms + kFrameMs;
    if (frame_rms(frame) >= config_.threshold) {
        if (!in_speech_) {
            in_speech_ = true;
            out.push_back({VadEvent::Kind::SpeechStart, t_ms});
        }
        last_voiced_end_ms_ = frame_end;
    } else if (in_speech_ && frame_end - last_voiced_end_ms_ >= config_.hangover_ms) {
        in_speech_ = false;
        out.push_back({VadEvent::Kind::SpeechEnd, last_voiced_end_ms_ + config_.hangover_ms});
    }
    return out;
}

std::vector<VadEvent> EnergyVad::flush() {
    if (!in_speech_) return {};
    in_speech_ = false;
    return {{VadEvent::Kind::SpeechEnd, last_voiced_end_ms_ + config_.hangover_ms}};
}

std::vector<VadEvent> detect_voice_activity(VadProvider& vad, std::span<const Frame> frames, std::int64_t t0_ms) {
    auto stream = vad.open_stream();
    std::vector<VadEvent> events;
    std::int64_t t = t0_ms;
    for (const auto& f : frames) {
        auto ev = stream->push(f, t);
        events.insert(events.end(), ev.begin(), ev.end());
        t += kFrameMs;
    }
    auto tail = stream->flush();
    events.insert(events.end(), tail.begin(), tail.end());
    return events;
}

// ---------------------------------------------------------------------------
// MockStt

namespace {

class MockSttStream final : public SpeechToText {
public:
    MockSttStream(std::shared_ptr<const FixtureSet> fixtures, MockSttConfig config)
        : fixtures_(std::move(fixtures)), config_(config) {}

    std::vector<TranscriptChunk> push(std::span<const std::int16_t> frame, std::int64_t t_ms) override {
        std::vector<TranscriptChunk> out;
        if (frame_rms(frame) >= config_.threshold) {
            if (!in_utterance_) {
                in_utterance_ = true;
                start_ms_ = t_ms;
                voiced_ms_ = 0;
                revealed_words_ = 0;
                fixture_ = fixtures_->match_first_frame(frame);
                words_ = fixture_ ? text::split_words(fixture_->text) : std::vector<std::string>{};
            }
            voiced_ms_ += kFrameMs;
            last_voiced_end_ms_ = t_ms + kFrameMs;
            silence_ms_ = 0;
            if (fixture_ && voiced_ms_ % config_.interim_every_ms == 0) {
                const auto target = static_cast<std::size_t>(
                    static_cast<double>(words_.size()) * static_cast<double>(voiced_ms_) /
                    static_cast<double>(std::max<std::int64_t>(fixture_->duration_ms, 1)));
                const auto reveal = std::min(target, words_.empty() ? std::size_t{0} : words_.size() - 1);
                if (reveal > revealed_words_) {
                    revealed_words_ = reveal;
                    std::vector<std::string> prefix(words_.begin(), words_.begin() + static_cast<std::ptrdiff_t>(reveal));
                    out.push_back({text::join(prefix, " "), false, start_ms_, last_voiced_end_ms_});
                }
            }
        } else if (in_utterance_) {
            silence_ms_ += kFrameMs;
            if (silence_ms_ >= config_.endpoint_silence_ms) out.push_back(finalize());
        }
        return out;
    }

    std::vector<TranscriptChunk> flush() override {
        if (!in_utterance_) return {};
        return {finalize()};
    }

private:
    TranscriptChunk finalize() {
        in_utterance_ = false;
        return {fixture_ ? fixture_->text : std::string{}, true, start_ms_, last_voiced_end_ms_};
    }

    std::shared_ptr<const FixtureSet> fixtures_;
    MockSttConfig config_;
    bool in_utterance_ = false;
    std::int64_t start_ms_ = 0;
    std::int64_t last_voiced_end_ms_ = 0;
    std::int64_t voiced_ms_ = 0;
    std::int64_t silence_ms_ = 0;
    const UtteranceFixture* fixture_ = nullptr;
    std::vector<std::string> words_;
    std::size_t revealed_words_ = 0;
};

}  // namespace

std::unique_ptr<SpeechToText> MockStt::open_stream() { return std::make_unique<MockSttStream>(fixtures_, config_); }

std::vector<TranscriptChunk> transcribe_stream(SttProvider& stt, std::span<const Frame> frames, std::int64_t t0_ms) {
    auto stream = stt.open_stream();
    std::vector<TranscriptChunk> chunks;
    std::int64_t t = t0_ms;
    for (const auto& f : frames) {
        auto c = stream->push(f, t);
        chunks.insert(chunks.end(), c.begin(), c.end());
        t += kFrameMs;
    }
    auto tail = stream->flush();
    chunks.insert(chunks.end(), tail.begin(), tail.end());
    return chunks;
}

// ---------------------------------------------------------------------------
// Turn-end prediction

TurnEndPrediction MockTurnPredictor::predict_turn_end(const TurnContext& context) {
    if (context.chunks.empty()) throw PreconditionError("turn prediction needs at least one transcript chunk");
    std::vector<std::string> finals;
    for (const auto& c : context.chunks) {
        if (c.is_final && !text::is_blank(c.text)) finals.push_back(c.text);
    }
    const std::string joined = finals.empty() ? context.chunks.back().text : text::join(finals, " ");
    const auto trimmed = text::trim(joined);

    double p = 0.6;
    if (!trimmed.empty() && (trimmed.back() == '.' || trimmed.back() == '?' || trimmed.back() == '!')) {
        p = 0.9;
    } else {
        const auto words = text::split_words(trimmed);
        if (!words.empty()) {
            auto last = text::to_lower(words.back());
            while (!last.empty() && std::ispunct(static_cast<unsigned char>(last.back()))) last.pop_back();
            if (last == "and") p = 0.1;
        }
    }
    return {p, context.t_ms};
}

bool is_end_of_turn(bool speech_end_seen, const TurnEndPrediction& prediction, double threshold) {
    return speech_end_seen && prediction.probability_end >= threshold;
}

}  // namespace reflectcast::providers
