#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "reflectcast/content/types.hpp"
#include "reflectcast/providers/llm.hpp"
#include "reflectcast/providers/speech.hpp"
#include "reflectcast/transcript.hpp"

namespace reflectcast::content {

enum class SourceFormat { Plain, Markdown };

SourceFormat source_format_from_path(const std::filesystem::path& p);

// Plain text splits on blank lines. Markdown splits on blocks; the first
// heading becomes the title and later headings annotate the paragraphs after
// them. Throws EmptyDocument.
SourceDocument ingest_document(std::string_view raw_text, SourceFormat format, std::string id = {});

struct GenerationOptions {
    int retry_budget = 2;  // extra attempts after a malformed or blank response
    int parallelism = 1;
};

// One provider request per paragraph, carrying that paragraph and the title only.
// Throws SchemaValidationError, ProviderError.
StructuredSummary build_structured_summary(const SourceDocument& doc, providers::LlmProvider& llm,
                                           const GenerationOptions& options = {});

struct SegmentContext {
    std::string title;
    std::vector<std::string> outline_headings;
};

// Throws EmptyGeneration, ProviderError, PreconditionError.
PodcastSegment generate_segment(const SummarySection& section, const SegmentContext& context,
                                providers::LlmProvider& llm, const GenerationOptions& options = {});

// Generates every section. `order` permutes the generation order (testing
// independence); results are returned in section order.
std::vector<PodcastSegment> generate_segments(const StructuredSummary& summary, providers::LlmProvider& llm,
                                              const GenerationOptions& options = {},
                                              std::optional<std::vector<int>> order = std::nullopt);

// WAV files keyed by a hash of voice id and script text.
class AudioCache {
public:
    explicit AudioCache(std::filesystem::path dir);
    std::string key_for(const std::string& voice_id, const std::string& script_text) const;
    std::filesystem::path path_for(const std::string& key) const;
    std::optional<AudioClip> get(const std::string& key) const;
    void put(const std::string& key, const AudioClip& clip) const;
    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
};

// Attaches 24 kHz mono audio. Cache hits skip the provider.
PodcastSegment synthesize_segment(PodcastSegment segment, providers::TtsProvider& tts, const AudioCache* cache = nullptr);

// Orders by section id. Throws DuplicateSection, MissingSection, MismatchedSummary.
PodcastScript assemble_script(const StructuredSummary& summary, std::vector<PodcastSegment> segments);

// A section is covered once its segment_complete entry is in the transcript.
CoverageReport coverage_report(const StructuredSummary& summary, const SessionTranscript& transcript);

// script.json plus audio/<key>.wav next to it.
void save_script(const PodcastScript& script, const std::filesystem::path& script_json);
// Loads the script and any referenced WAV files.
PodcastScript load_script(const std::filesystem::path& script_json);

}  // namespace reflectcast::content
