#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "reflectcast/audio.hpp"

namespace reflectcast::content {

struct Paragraph {
    int index = 0;
    std::string text;
    std::string heading;  // nearest preceding sub-heading (markdown); empty otherwise
    bool operator==(const Paragraph&) const = default;
};

struct SourceDocument {
    std::string id;
    std::string title;
    std::vector<Paragraph> paragraphs;

    // Indices contiguous from 0, no blank paragraph. Throws FormatError.
    void validate() const;
    bool operator==(const SourceDocument&) const = default;
};

struct SummarySection {
    int section_id = 0;
    std::string heading;
    std::string summary_text;
    int source_paragraph = 0;
    bool operator==(const SummarySection&) const = default;
};

// One section per source paragraph, in paragraph order.
struct StructuredSummary {
    std::string doc_id;
    std::string title;
    std::vector<SummarySection> sections;

    std::vector<std::string> outline_headings() const;
    const SummarySection& section(int section_id) const;  // throws MismatchedSummary
    // Throws FormatError unless sections are a bijection onto the document's paragraphs.
    void validate_against(const SourceDocument& doc) const;
    void validate() const;
    bool operator==(const StructuredSummary&) const = default;
};

struct PodcastSegment {
    int section_id = 0;
    std::string script_text;
    std::optional<AudioClip> audio;
    std::int64_t duration_ms = 0;
    std::string audio_path;  // relative to the script file when persisted

    bool operator==(const PodcastSegment&) const = default;
};

// The assembled lesson: the outline plus one narrated segment per section, ordered by section id.
struct PodcastScript {
    StructuredSummary summary;
    std::vector<PodcastSegment> segments;

    std::size_t segment_count() const { return segments.size(); }
    bool empty() const { return segments.empty(); }
    std::int64_t total_duration_ms() const;
    const SummarySection& section_for(std::size_t segment_index) const;
    bool operator==(const PodcastScript&) const = default;
};

struct CoverageReport {
    std::set<int> covered_sections;
    std::set<int> uncovered_sections;
    std::size_t covered = 0;
    std::size_t total = 0;

    double coverage_fraction() const { return total ? static_cast<double>(covered) / static_cast<double>(total) : 0.0; }
};

// JSON with field names as declared above. Audio samples are never inlined.
nlohmann::json to_json(const SourceDocument& d);
nlohmann::json to_json(const StructuredSummary& s);
nlohmann::json to_json(const PodcastSegment& s);
nlohmann::json to_json(const PodcastScript& s);
nlohmann::json to_json(const CoverageReport& r);

SourceDocument document_from_json(const nlohmann::json& j);
StructuredSummary summary_from_json(const nlohmann::json& j);
PodcastScript script_from_json(const nlohmann::json& j);

nlohmann::json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& j);

}  // namespace reflectcast::content
