#include "reflectcast/content/types.hpp"

#include <fstream>

#include "reflectcast/errors.hpp"
#include "reflectcast/text.hpp"

namespace reflectcast::content {

void SourceDocument::validate() const {
    if (paragraphs.empty()) throw FormatError("document '" + id + "' has no paragraphs");
    for (std::size_t i = 0; i < paragraphs.size(); ++i) {
        if (paragraphs[i].index != static_cast<int>(i)) {
            throw FormatError("paragraph indices must be contiguous from 0 (found " +
                              std::to_string(paragraphs[i].index) + " at position " + std::to_string(i) + ")");
        }
        if (text::is_blank(paragraphs[i].text)) throw FormatError("paragraph " + std::to_string(i) + " is blank");
    }
}

std::vector<std::string> StructuredSummary::outline_headings() const {
    std::vector<std::string> out;
    out.reserve(sections.size());
    for (const auto& s : sections) out.push_back(s.heading);
    return out;
}

const SummarySection& StructuredSummary::section(int section_id) const {
    if (section_id < 0 || static_cast<std::size_t>(section_id) >= sections.size() ||
        sections[static_cast<std::size_t>(section_id)].section_id != section_id) {
        throw MismatchedSummary("summary '" + doc_id + "' has no section " + std::to_string(section_id));
    }
    return sections[static_cast<std::size_t>(section_id)];
}

void StructuredSummary::validate() const {
    for (std::size_t i = 0; i < sections.size(); ++i) {
        const auto& s = sections[i];
        if (s.section_id != static_cast<int>(i)) throw FormatError("section ids must be 0..n-1 in order");
        if (s.source_paragraph != static_cast<int>(i)) {
            throw FormatError("section " + std::to_string(i) + " maps to paragraph " +
                              std::to_string(s.source_paragraph) + "; sections follow paragraph order");
        }
        if (text::is_blank(s.summary_text)) throw FormatError("section " + std::to_string(i) + " has a blank summary");
    }
}

void StructuredSummary::validate_against(const SourceDocument& doc) const {
    if (doc_id != doc.id) throw FormatError("summary doc_id '" + doc_id + "' does not match document '" + doc.id + "'");
    if (sections.size() != doc.paragraphs.size()) {
        throw FormatError("summary has " + std::to_string(sections.size()) + " sections for " +
                          std::to_string(doc.paragraphs.size()) + " paragraphs");
    }
    validate();
}

std::int64_t PodcastScript::total_duration_ms() const {
    std::int64_t total = 0;
    for (const auto& s : segments) total += s.duration_ms;
    return total;
}

const SummarySection& PodcastScript::section_for(std::size_t segment_index) const {
    return summary.section(segments.at(segment_index).section_id);
}

// --- JSON ---------------------------------------------------------------

nlohmann::json to_json(const SourceDocument& d) {
    nlohmann::json paras = nlohmann::json::array();
    for (const auto& p : d.paragraphs) {
        nlohmann::json jp{{"index", p.index}, {"text", p.text}};
        if (!p.heading.empty()) jp["heading"] = p.heading;
        paras.push_back(std::move(jp));
    }
    return {{"id", d.id}, {"title", d.title}, {"paragraphs", std::move(paras)}};
}

nlohmann::json to_json(const StructuredSummary& s) {
    nlohmann::json sections = nlohmann::json::array();
    for (const auto& x : s.sections) {
        sections.push_back({{"section_id", x.section_id},
                            {"heading", x.heading},
                            {"summary_text", x.summary_text},
                            {"source_paragraph", x.source_paragraph}});
    }
    return {{"doc_id", s.doc_id}, {"title", s.title}, {"sections", std::move(sections)}};
}

nlohmann::json to_json(const PodcastSegment& s) {
    nlohmann::json j{{"section_id", s.section_id}, {"script_text", s.script_text}};
    if (s.audio || s.duration_ms > 0) j["duration_ms"] = s.duration_ms;
    if (!s.audio_path.empty()) j["audio_path"] = s.audio_path;
    return j;
}

nlohmann::json to_json(const PodcastScript& s) {
    nlohmann::json segs = nlohmann::json::array();
    for (const auto& x : s.segments) segs.push_back(to_json(x));
    return {{"summary", to_json(s.summary)}, {"segments", std::move(segs)}};
}

nlohmann::json to_json(const CoverageReport& r) {
    return {{"covered_sections", r.covered_sections},
            {"uncovered_sections", r.uncovered_sections},
            {"coverage_fraction", r.coverage_fraction()}};
}

namespace {

template <class F>
auto guarded(const char* what, F&& f) {
    try {
        return f();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string(what) + ": " + e.what());
    }
}

}  // namespace

SourceDocument document_from_json(const nlohmann::json& j) {
    return guarded("document", [&] {
        SourceDocument d;
        d.id = j.at("id").get<std::string>();
        d.title = j.value("title", std::string{});
        for (const auto& p : j.at("paragraphs")) {
            d.paragraphs.push_back({p.at("index").get<int>(), p.at("text").get<std::string>(),
                                    p.value("heading", std::string{})});
        }
        d.validate();
        return d;
    });
}

StructuredSummary summary_from_json(const nlohmann::json& j) {
    return guarded("summary", [&] {
        StructuredSummary s;
        s.doc_id = j.at("doc_id").get<std::string>();
        s.title = j.value("title", std::string{});
        for (const auto& x : j.at("sections")) {
            s.sections.push_back({x.at("section_id").get<int>(), x.at("heading").get<std::string>(),
                                  x.at("summary_text").get<std::string>(), x.at("source_paragraph").get<int>()});
        }
        s.validate();
        return s;
    });
}

PodcastScript script_from_json(const nlohmann::json& j) {
    return guarded("script", [&] {
        PodcastScript s;
        s.summary = summary_from_json(j.at("summary"));
        for (const auto& x : j.at("segments")) {
            PodcastSegment seg;
            seg.section_id = x.at("section_id").get<int>();
            seg.script_text = x.at("script_text").get<std::string>();
            seg.duration_ms = x.value("duration_ms", std::int64_t{0});
            seg.audio_path = x.value("audio_path", std::string{});
            s.segments.push_back(std::move(seg));
        }
        return s;
    });
}

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw FormatError("cannot open " + path);
    try {
        return nlohmann::json::parse(is);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path + ": " + e.what());
    }
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
    std::ofstream os(path);
    if (!os) throw FormatError("cannot write " + path);
    os << j.dump(2) << '\n';
}

}  // namespace reflectcast::content
