#include "reflectcast/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "reflectcast/errors.hpp"

namespace reflectcast {

AudioClip make_silence(std::int64_t duration_ms) {
    AudioClip clip;
    clip.samples.assign(static_cast<std::size_t>(duration_ms * kSampleRate / 1000), 0);
    return clip;
}

std::vector<Frame> split_frames(const AudioClip& clip) {
    std::vector<Frame> frames;
    const auto& s = clip.samples;
    for (std::size_t i = 0; i < s.size(); i += kFrameSamples) {
        Frame f(kFrameSamples, 0);
        const std::size_t n = std::min<std::size_t>(kFrameSamples, s.size() - i);
        std::copy_n(s.begin() + static_cast<std::ptrdiff_t>(i), n, f.begin());
        frames.push_back(std::move(f));
    }
    return frames;
}

double frame_rms(std::span<const std::int16_t> frame) {
    if (frame.empty()) return 0.0;
    double acc = 0.0;
    for (auto v : frame) {
        const double x = v / 32768.0;
        acc += x * x;
    }
    return std::sqrt(acc / static_cast<double>(frame.size()));
}

std::vector<std::uint8_t> frame_to_bytes(std::span<const std::int16_t> frame) {
    std::vector<std::uint8_t> out(frame.size() * 2);
    for (std::size_t i = 0; i < frame.size(); ++i) {
        const auto u = static_cast<std::uint16_t>(frame[i]);
        out[2 * i] = static_cast<std::uint8_t>(u & 0xff);
        out[2 * i + 1] = static_cast<std::uint8_t>(u >> 8);
    }
    return out;
}

Frame frame_from_bytes(std::span<const std::uint8_t> bytes) {
    Frame f(bytes.size() / 2);
    for (std::size_t i = 0; i < f.size(); ++i) {
        f[i] = static_cast<std::int16_t>(bytes[2 * i] | (bytes[2 * i + 1] << 8));
    }
    return f;
}

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
    const char b[4] = {char(v & 0xff), char((v >> 8) & 0xff), char((v >> 16) & 0xff), char(v >> 24)};
    os.write(b, 4);
}

void put_u16(std::ostream& os, std::uint16_t v) {
    const char b[2] = {char(v & 0xff), char(v >> 8)};
    os.write(b, 2);
}

std::uint32_t get_u32(const unsigned char* p) {
    return p[0] | (p[1] << 8) | (p[2] << 16) | (std::uint32_t(p[3]) << 24);
}

std::uint16_t get_u16(const unsigned char* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

}  // namespace

void write_wav(const std::filesystem::path& path, const AudioClip& clip) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FormatError("cannot write " + path.string());
    const auto data_bytes = static_cast<std::uint32_t>(clip.samples.size() * 2);
    os.write("RIFF", 4);
    put_u32(os, 36 + data_bytes);
    os.write("WAVEfmt ", 8);
    put_u32(os, 16);
    put_u16(os, 1);  // PCM
    put_u16(os, 1);  // mono
    put_u32(os, static_cast<std::uint32_t>(clip.sample_rate));
    put_u32(os, static_cast<std::uint32_t>(clip.sample_rate * 2));
    put_u16(os, 2);
    put_u16(os, 16);
    os.write("data", 4);
    put_u32(os, data_bytes);
    const auto bytes = frame_to_bytes(clip.samples);
    os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

AudioClip read_wav(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot read " + path.string());
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 || std::memcmp(buf.data() + 8, "WAVE", 4) != 0) {
        throw FormatError(path.string() + ": not a RIFF/WAVE file");
    }
    AudioClip clip;
    bool have_fmt = false;
    std::size_t pos = 12;
    while (pos + 8 <= buf.size()) {
        const std::uint32_t size = get_u32(&buf[pos + 4]);
        const unsigned char* body = &buf[pos + 8];
        if (pos + 8 + size > buf.size()) throw FormatError(path.string() + ": truncated chunk");
        if (std::memcmp(&buf[pos], "fmt ", 4) == 0) {
            if (get_u16(body) != 1 || get_u16(body + 2) != 1 || get_u16(body + 14) != 16) {
                throw FormatError(path.string() + ": expected PCM16 mono");
            }
            clip.sample_rate = static_cast<int>(get_u32(body + 4));
            have_fmt = true;
        } else if (std::memcmp(&buf[pos], "data", 4) == 0) {
            if (!have_fmt) throw FormatError(path.string() + ": data before fmt");
            clip.samples = frame_from_bytes(std::span<const std::uint8_t>(body, size));
            return clip;
        }
        pos += 8 + size + (size & 1);
    }
    throw FormatError(path.string() + ": no data chunk");
}

namespace {

std::uint64_t finalize(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

std::uint64_t stable_hash(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return finalize(h);
}

std::uint64_t stable_hash(std::span<const std::int16_t> samples) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (auto v : samples) {
        const auto u = static_cast<std::uint16_t>(v);
        h ^= u & 0xff;
        h *= 0x100000001b3ULL;
        h ^= u >> 8;
        h *= 0x100000001b3ULL;
    }
    return finalize(h);
}

}  // namespace reflectcast
