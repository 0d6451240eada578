#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace reflectcast {

// PCM16 mono at 24 kHz, 20 ms frames, on every streaming boundary.
inline constexpr int kSampleRate = 24000;
inline constexpr int kFrameMs = 20;
inline constexpr int kFrameSamples = kSampleRate * kFrameMs / 1000;  // 480
inline constexpr int kFrameBytes = kFrameSamples * 2;                // 960

using Frame = std::vector<std::int16_t>;

struct AudioClip {
    int sample_rate = kSampleRate;
    std::vector<std::int16_t> samples;

    std::int64_t duration_ms() const {
        return sample_rate > 0 ? static_cast<std::int64_t>(samples.size()) * 1000 / sample_rate : 0;
    }
    bool operator==(const AudioClip&) const = default;
};

AudioClip make_silence(std::int64_t duration_ms);

// Splits into 20 ms frames; the last frame is zero-padded.
std::vector<Frame> split_frames(const AudioClip& clip);

// Root-mean-square level normalized to [0, 1].
double frame_rms(std::span<const std::int16_t> frame);

// Little-endian frame bytes (the binary wire payload after the channel tag).
std::vector<std::uint8_t> frame_to_bytes(std::span<const std::int16_t> frame);
Frame frame_from_bytes(std::span<const std::uint8_t> bytes);

void write_wav(const std::filesystem::path& path, const AudioClip& clip);
AudioClip read_wav(const std::filesystem::path& path);

// 64-bit FNV-1a followed by a splitmix finalizer. Stable across platforms.
std::uint64_t stable_hash(std::string_view bytes);
std::uint64_t stable_hash(std::span<const std::int16_t> samples);

}  // namespace reflectcast
