#include "reflectcast/content/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <regex>
#include <thread>

#include "reflectcast/errors.hpp"
#include "reflectcast/prompts.hpp"
#include "reflectcast/text.hpp"

namespace reflectcast::content {

namespace {

std::string hex64(std::uint64_t v, int digits = 16) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return std::string(buf + (16 - digits));
}

// Runs fn(i) for i in [0, n) on up to `parallelism` threads; rethrows the first failure.
template <class Fn>
void parallel_for(std::size_t n, int parallelism, Fn&& fn) {
    if (parallelism <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mu;
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mu);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> threads;
    const auto count = std::min<std::size_t>(static_cast<std::size_t>(parallelism), n);
    for (std::size_t t = 0; t < count; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

bool is_fence(std::string_view line) {
    const auto t = text::trim(line);
    return t.starts_with("```") || t.starts_with("~~~");
}

bool is_rule(std::string_view line, char c) {
    const auto t = text::trim(line);
    if (t.size() < 3) return false;
    return std::all_of(t.begin(), t.end(), [c](char x) { return x == c || x == ' '; });
}

std::optional<std::string> atx_heading(std::string_view line) {
    const auto t = text::trim(line);
    std::size_t hashes = 0;
    while (hashes < t.size() && t[hashes] == '#') ++hashes;
    if (hashes == 0 || hashes > 6) return std::nullopt;
    if (hashes < t.size() && t[hashes] != ' ' && t[hashes] != '\t') return std::nullopt;
    auto body = text::trim(t.substr(hashes));
    while (!body.empty() && body.back() == '#') body.remove_suffix(1);
    return std::string(text::trim(body));
}

std::string strip_block_marker(std::string_view line) {
    auto t = text::trim(line);
    while (t.starts_with(">")) t = text::trim(t.substr(1));
    if (t.size() >= 2 && (t[0] == '-' || t[0] == '*' || t[0] == '+') && t[1] == ' ') return std::string(text::trim(t.substr(2)));
    std::size_t digits = 0;
    while (digits < t.size() && std::isdigit(static_cast<unsigned char>(t[digits]))) ++digits;
    if (digits > 0 && digits + 1 < t.size() && (t[digits] == '.' || t[digits] == ')') && t[digits + 1] == ' ') {
        return std::string(text::trim(t.substr(digits + 2)));
    }
    return std::string(t);
}

std::string clean_inline(std::string s) {
    static const std::regex link(R"(!?\[([^\]]*)\]\([^)]*\))");
    s = std::regex_replace(s, link, "$1");
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '`') continue;
        if ((s[i] == '*' || s[i] == '_') && i + 1 < s.size() && s[i + 1] == s[i]) {
            ++i;
            continue;
        }
        out += s[i];
    }
    return out;
}

std::string join_block(const std::vector<std::string>& lines, bool markdown, bool verbatim) {
    if (verbatim) return text::join(lines, "\n");
    std::vector<std::string> parts;
    for (const auto& l : lines) {
        auto piece = markdown ? clean_inline(strip_block_marker(l)) : std::string(text::trim(l));
        if (!piece.empty()) parts.push_back(std::move(piece));
    }
    return text::join(parts, " ");
}

}  // namespace

SourceFormat source_format_from_path(const std::filesystem::path& p) {
    const auto ext = text::to_lower(p.extension().string());
    return (ext == ".md" || ext == ".markdown") ? SourceFormat::Markdown : SourceFormat::Plain;
}

SourceDocument ingest_document(std::string_view raw_text, SourceFormat format, std::string id) {
    if (text::is_blank(raw_text)) throw EmptyDocument("document has no content");

    SourceDocument doc;
    doc.id = id.empty() ? "doc-" + hex64(stable_hash(raw_text), 12) : std::move(id);

    const bool md = format == SourceFormat::Markdown;
    std::vector<std::string> block;
    bool in_fence = false;
    std::string current_heading;

    auto add_paragraph = [&](std::string body) {
        if (text::is_blank(body)) return;
        doc.paragraphs.push_back({static_cast<int>(doc.paragraphs.size()), std::move(body), current_heading});
    };
    auto flush = [&](bool verbatim = false) {
        if (!block.empty()) add_paragraph(join_block(block, md, verbatim));
        block.clear();
    };
    auto set_heading = [&](std::string h) {
        if (doc.title.empty()) {
            doc.title = std::move(h);
        } else {
            current_heading = std::move(h);
        }
    };

    for (const auto& line : text::split_lines(raw_text)) {
        if (md && in_fence) {
            if (is_fence(line)) {
                in_fence = false;
                flush(true);
            } else {
                block.push_back(line);
            }
            continue;
        }
        if (text::is_blank(line)) {
            flush();
            continue;
        }
        if (!md) {
            block.push_back(line);
            continue;
        }
        if (is_fence(line)) {
            flush();
            in_fence = true;
            continue;
        }
        if (auto h = atx_heading(line)) {
            flush();
            set_heading(std::move(*h));
            continue;
        }
        if (block.size() == 1 && (is_rule(line, '=') || is_rule(line, '-'))) {  // setext heading
            auto h = clean_inline(std::string(text::trim(block.front())));
            block.clear();
            set_heading(std::move(h));
            continue;
        }
        if (block.empty() && (is_rule(line, '-') || is_rule(line, '*') || is_rule(line, '_'))) continue;
        block.push_back(line);
    }
    flush(in_fence);

    if (doc.paragraphs.empty()) throw EmptyDocument("document has headings but no paragraphs");
    doc.validate();
    return doc;
}

// --- structured summary --------------------------------------------------

namespace {

std::string strip_code_fence(std::string_view s) {
    auto t = text::trim(s);
    if (!t.starts_with("```")) return std::string(t);
    const auto first_nl = t.find('\n');
    if (first_nl == std::string_view::npos) return std::string(t);
    t.remove_prefix(first_nl + 1);
    t = text::trim(t);
    if (t.ends_with("```")) t.remove_suffix(3);
    return std::string(text::trim(t));
}

// Returns {heading, summary_text} or nullopt when the response violates the schema.
std::optional<std::pair<std::string, std::string>> parse_section_response(const std::string& raw) {
    const auto j = nlohmann::json::parse(strip_code_fence(raw), nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) return std::nullopt;
    const nlohmann::json* item = &j;
    if (j.is_object() && j.contains("sections")) item = &j.at("sections");
    if (item->is_array()) {
        if (item->size() != 1) return std::nullopt;
        item = &item->at(0);
    }
    if (!item->is_object()) return std::nullopt;
    const auto h = item->find("heading");
    const auto s = item->find("summary_text");
    if (h == item->end() || s == item->end() || !h->is_string() || !s->is_string()) return std::nullopt;
    auto heading = std::string(text::trim(h->get<std::string>()));
    auto summary = std::string(text::trim(s->get<std::string>()));
    if (heading.empty() || summary.empty()) return std::nullopt;
    return std::make_pair(std::move(heading), std::move(summary));
}

}  // namespace

StructuredSummary build_structured_summary(const SourceDocument& doc, providers::LlmProvider& llm,
                                           const GenerationOptions& options) {
    doc.validate();
    StructuredSummary summary;
    summary.doc_id = doc.id;
    summary.title = doc.title;
    summary.sections.resize(doc.paragraphs.size());

    parallel_for(doc.paragraphs.size(), options.parallelism, [&](std::size_t i) {
        const auto& para = doc.paragraphs[i];
        const auto request = prompts::summarize_paragraph(doc.title, para.text);
        for (int attempt = 0; attempt <= options.retry_budget; ++attempt) {
            const auto response = llm.complete_chat(request);
            if (auto parsed = parse_section_response(response.text)) {
                summary.sections[i] = {para.index, std::move(parsed->first), std::move(parsed->second), para.index};
                return;
            }
        }
        throw SchemaValidationError("paragraph " + std::to_string(para.index) + ": no schema-valid section after " +
                                    std::to_string(options.retry_budget + 1) + " attempts");
    });

    summary.validate_against(doc);
    return summary;
}

// --- segments ------------------------------------------------------------

PodcastSegment generate_segment(const SummarySection& section, const SegmentContext& context,
                                providers::LlmProvider& llm, const GenerationOptions& options) {
    if (section.section_id < 0 || text::is_blank(section.summary_text)) {
        throw PreconditionError("generate_segment: section is not part of a validated summary");
    }
    const auto request = prompts::narrate_section(context.title, context.outline_headings, section.heading,
                                                  section.summary_text);
    for (int attempt = 0; attempt <= options.retry_budget; ++attempt) {
        const auto response = llm.complete_chat(request);
        const auto script = text::trim(response.text);
        if (!script.empty()) return PodcastSegment{section.section_id, std::string(script), std::nullopt, 0, {}};
    }
    throw EmptyGeneration("section " + std::to_string(section.section_id) + ": blank narration after " +
                          std::to_string(options.retry_budget + 1) + " attempts");
}

std::vector<PodcastSegment> generate_segments(const StructuredSummary& summary, providers::LlmProvider& llm,
                                              const GenerationOptions& options, std::optional<std::vector<int>> order) {
    summary.validate();
    const auto n = summary.sections.size();
    std::vector<int> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<int>(i);
    if (order) {
        auto sorted = *order;
        std::sort(sorted.begin(), sorted.end());
        if (sorted != ids) throw PreconditionError("generation order must be a permutation of the section ids");
        ids = *order;
    }
    const SegmentContext ctx{summary.title, summary.outline_headings()};
    std::vector<PodcastSegment> out(n);
    parallel_for(n, options.parallelism, [&](std::size_t k) {
        const auto id = static_cast<std::size_t>(ids[k]);
        out[id] = generate_segment(summary.sections[id], ctx, llm, options);
    });
    return out;
}

// --- audio ---------------------------------------------------------------

AudioCache::AudioCache(std::filesystem::path dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }

std::string AudioCache::key_for(const std::string& voice_id, const std::string& script_text) const {
    return hex64(stable_hash(voice_id + '\n' + std::to_string(kSampleRate) + '\n' + script_text));
}

std::filesystem::path AudioCache::path_for(const std::string& key) const { return dir_ / (key + ".wav"); }

std::optional<AudioClip> AudioCache::get(const std::string& key) const {
    const auto p = path_for(key);
    if (!std::filesystem::exists(p)) return std::nullopt;
    return read_wav(p);
}

void AudioCache::put(const std::string& key, const AudioClip& clip) const {
    // Write then rename so concurrent readers never see a partial file.
    const auto final_path = path_for(key);
    auto tmp = final_path;
    tmp += ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
    write_wav(tmp, clip);
    std::filesystem::rename(tmp, final_path);
}

PodcastSegment synthesize_segment(PodcastSegment segment, providers::TtsProvider& tts, const AudioCache* cache) {
    if (text::is_blank(segment.script_text)) throw PreconditionError("synthesize_segment: script_text is empty");
    std::optional<AudioClip> clip;
    std::string key;
    if (cache) {
        key = cache->key_for(tts.voice_id(), segment.script_text);
        clip = cache->get(key);
    }
    if (!clip) {
        clip = tts.synthesize_speech(segment.script_text);
        if (clip->sample_rate != kSampleRate) {
            throw ProviderError(ProviderError::Kind::Status,
                                "tts returned " + std::to_string(clip->sample_rate) + " Hz, expected 24000");
        }
        if (clip->samples.empty()) throw ProviderError(ProviderError::Kind::Status, "tts returned no audio");
        if (cache) cache->put(key, *clip);
    }
    segment.duration_ms = clip->duration_ms();
    segment.audio = std::move(clip);
    return segment;
}

// --- assembly and coverage -----------------------------------------------

PodcastScript assemble_script(const StructuredSummary& summary, std::vector<PodcastSegment> segments) {
    const auto n = static_cast<int>(summary.sections.size());
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    for (const auto& s : segments) {
        if (s.section_id < 0 || s.section_id >= n) {
            throw MismatchedSummary("segment for unknown section " + std::to_string(s.section_id));
        }
        if (seen[static_cast<std::size_t>(s.section_id)]) throw DuplicateSection("duplicate section " + std::to_string(s.section_id));
        seen[static_cast<std::size_t>(s.section_id)] = true;
    }
    for (int i = 0; i < n; ++i) {
        if (!seen[static_cast<std::size_t>(i)]) throw MissingSection(i);
    }
    std::sort(segments.begin(), segments.end(), [](const auto& a, const auto& b) { return a.section_id < b.section_id; });
    return PodcastScript{summary, std::move(segments)};
}

CoverageReport coverage_report(const StructuredSummary& summary, const SessionTranscript& transcript) {
    CoverageReport r;
    r.total = summary.sections.size();
    for (const auto& e : transcript.entries()) {
        if (e.kind != entry_kind::kSegmentComplete) continue;
        const int id = e.payload.value("section_id", -1);
        if (id < 0 || static_cast<std::size_t>(id) >= r.total) {
            throw MismatchedSummary("transcript references section " + std::to_string(id) + " of a " +
                                    std::to_string(r.total) + "-section summary");
        }
        r.covered_sections.insert(id);
    }
    for (int i = 0; i < static_cast<int>(r.total); ++i) {
        if (!r.covered_sections.count(i)) r.uncovered_sections.insert(i);
    }
    r.covered = r.covered_sections.size();
    return r;
}

// --- persistence -----------------------------------------------------------

void save_script(const PodcastScript& script, const std::filesystem::path& script_json) {
    const auto base = script_json.has_parent_path() ? script_json.parent_path() : std::filesystem::path(".");
    PodcastScript out = script;
    for (auto& seg : out.segments) {
        if (!seg.audio) continue;
        const auto rel = std::filesystem::path("audio") /
                         ("seg" + std::to_string(seg.section_id) + "-" + hex64(stable_hash(std::span<const std::int16_t>(seg.audio->samples)), 12) + ".wav");
        std::filesystem::create_directories(base / "audio");
        write_wav(base / rel, *seg.audio);
        seg.audio_path = rel.generic_string();
    }
    write_json_file(script_json.string(), to_json(out));
}

PodcastScript load_script(const std::filesystem::path& script_json) {
    auto script = script_from_json(read_json_file(script_json.string()));
    const auto base = script_json.has_parent_path() ? script_json.parent_path() : std::filesystem::path(".");
    for (auto& seg : script.segments) {
        if (seg.audio_path.empty()) continue;
        seg.audio = read_wav(base / seg.audio_path);
        seg.duration_ms = seg.audio->duration_ms();
    }
    return script;
}

}  // namespace reflectcast::content
