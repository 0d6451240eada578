#include "reflectcast/analysis/study.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "reflectcast/errors.hpp"
#include "reflectcast/text.hpp"

namespace reflectcast::analysis {

std::string to_string(Condition c) { return c == Condition::Reflection ? "reflection" : "standard"; }

Condition condition_from_string(const std::string& s) {
    const auto v = text::to_lower(text::trim(s));
    if (v == "reflection") return Condition::Reflection;
    if (v == "standard") return Condition::Standard;
    throw PreconditionError("unknown condition '" + s + "'");
}

// --- scoring ---------------------------------------------------------------------

UeqScores score_ueq(std::span<const int, kUeqItems> items) {
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (items[i] < kUeqMin || items[i] > kUeqMax) {
            throw OutOfRangeItem("ueq_" + std::to_string(i + 1) + " = " + std::to_string(items[i]) + " is outside 1..7");
        }
    }
    UeqScores s;
    for (std::size_t i = 0; i < kAttractivenessItems; ++i) s.attractiveness_sum += items[i];
    for (std::size_t i = kAttractivenessItems; i < kUeqItems; ++i) s.stimulation_sum += items[i];
    s.attractiveness_mean = static_cast<double>(s.attractiveness_sum) / kAttractivenessItems;
    s.stimulation_mean = static_cast<double>(s.stimulation_sum) / kStimulationItems;
    return s;
}

UeqScores score_ueq(const ParticipantRecord& record) { return score_ueq(std::span<const int, kUeqItems>(record.ueq_items)); }

int score_learning(std::span<const std::string> answers, std::span<const std::string> key) {
    if (answers.size() != key.size()) {
        throw KeyLengthMismatch(std::to_string(answers.size()) + " answers against a key of " + std::to_string(key.size()));
    }
    int correct = 0;
    for (std::size_t i = 0; i < key.size(); ++i) correct += answers[i] == key[i];
    return correct;
}

std::vector<std::string> parse_answer_key(const std::string& content) {
    std::vector<std::string> key;
    for (const auto& line : text::split_lines(content)) {
        const auto l = text::trim(line);
        if (l.empty() || l.front() == '#') continue;
        std::stringstream ss{std::string(l)};
        std::string item;
        while (std::getline(ss, item, ',')) key.emplace_back(text::trim(item));
    }
    if (key.empty()) throw ConfigError("answer key is empty");
    return key;
}

std::vector<std::string> load_answer_key(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read answer key " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_answer_key(ss.str());
}

// --- CSV -------------------------------------------------------------------------

namespace {

// One CSV row; double quotes enclose fields and "" escapes a quote.
std::vector<std::string> split_csv_row(std::string_view row, std::size_t line) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < row.size(); ++i) {
        const char c = row[i];
        if (quoted) {
            if (c == '"' && i + 1 < row.size() && row[i + 1] == '"') {
                field += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::string(text::trim(field)));
            field.clear();
        } else {
            field += c;
        }
    }
    if (quoted) throw RecordSchemaError(line, "unterminated quote");
    out.push_back(std::string(text::trim(field)));
    return out;
}

int parse_int(const std::string& s, std::size_t line, const std::string& column) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
        throw RecordSchemaError(line, column + ": '" + s + "' is not an integer");
    }
    return v;
}

bool parse_bool(const std::string& s, std::size_t line) {
    const auto v = text::to_lower(s);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no" || v.empty()) return false;
    throw RecordSchemaError(line, "excluded: '" + s + "' is not a boolean");
}

}  // namespace

std::vector<ParticipantRecord> parse_records_csv(const std::string& content, const std::vector<std::string>* key) {
    const auto lines = text::split_lines(content);
    std::size_t header_line = 0;
    while (header_line < lines.size() && text::is_blank(lines[header_line])) ++header_line;
    if (header_line == lines.size()) throw RecordSchemaError(1, "empty file: expected a header row");

    std::map<std::string, std::size_t> col;
    const auto header = split_csv_row(lines[header_line], header_line + 1);
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (!col.emplace(text::to_lower(header[i]), i).second) {
            throw RecordSchemaError(header_line + 1, "duplicate column '" + header[i] + "'");
        }
    }
    auto require = [&](const std::string& name) {
        if (!col.count(name)) throw RecordSchemaError(header_line + 1, "missing column '" + name + "'");
    };
    require("participant_id");
    require("condition");
    require("excluded");
    for (std::size_t i = 1; i <= kUeqItems; ++i) require("ueq_" + std::to_string(i));
    const bool has_answers = col.count("answer_1") != 0;
    if (has_answers) {
        if (!key) throw RecordSchemaError(header_line + 1, "answer columns need an answer key");
        for (std::size_t i = 1; i <= key->size(); ++i) require("answer_" + std::to_string(i));
    }
    if (!has_answers) require("learning_correct");

    std::vector<ParticipantRecord> records;
    std::map<std::string, std::size_t> seen;
    for (std::size_t li = header_line + 1; li < lines.size(); ++li) {
        if (text::is_blank(lines[li])) continue;
        const std::size_t line = li + 1;
        const auto f = split_csv_row(lines[li], line);
        if (f.size() != header.size()) {
            throw RecordSchemaError(line, "expected " + std::to_string(header.size()) + " fields, got " + std::to_string(f.size()));
        }
        auto at = [&](const std::string& name) -> const std::string& { return f[col.at(name)]; };

        ParticipantRecord r;
        r.participant_id = at("participant_id");
        if (r.participant_id.empty()) throw RecordSchemaError(line, "participant_id is empty");
        if (auto [it, fresh] = seen.emplace(r.participant_id, line); !fresh) {
            throw RecordSchemaError(line, "participant '" + r.participant_id + "' repeats line " + std::to_string(it->second));
        }
        try {
            r.condition = condition_from_string(at("condition"));
        } catch (const PreconditionError& e) {
            throw RecordSchemaError(line, e.what());
        }
        r.excluded = parse_bool(at("excluded"), line);
        for (std::size_t i = 0; i < kUeqItems; ++i) {
            const auto name = "ueq_" + std::to_string(i + 1);
            r.ueq_items[i] = parse_int(at(name), line, name);
        }
        try {
            score_ueq(r);
        } catch (const OutOfRangeItem& e) {
            throw RecordSchemaError(line, e.what());
        }

        std::optional<int> stated;
        if (col.count("learning_correct") && !at("learning_correct").empty()) {
            stated = parse_int(at("learning_correct"), line, "learning_correct");
        }
        if (has_answers) {
            std::vector<std::string> answers;
            for (std::size_t i = 1; i <= key->size(); ++i) answers.push_back(at("answer_" + std::to_string(i)));
            const int scored = score_learning(answers, *key);
            if (stated && *stated != scored) {
                throw RecordSchemaError(line, "learning_correct " + std::to_string(*stated) + " disagrees with the scored answers (" +
                                                  std::to_string(scored) + ")");
            }
            stated = scored;
        }
        if (!stated) throw RecordSchemaError(line, "learning_correct is empty");
        if (*stated < 0 || *stated > kLearningQuestions) {
            throw RecordSchemaError(line, "learning_correct " + std::to_string(*stated) + " is outside 0..10");
        }
        r.learning_correct = *stated;
        records.push_back(std::move(r));
    }
    if (records.empty()) throw RecordSchemaError(header_line + 2, "no participant records");
    return records;
}

std::vector<ParticipantRecord> load_records_csv(const std::filesystem::path& path, const std::vector<std::string>* key) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read records " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_records_csv(ss.str(), key);
}

// --- analysis --------------------------------------------------------------------

AnalysisReport analyze(std::span<const ParticipantRecord> records) {
    AnalysisReport report;
    report.records = records.size();
    struct Columns {
        std::vector<double> learning, attr_sum, stim_sum, attr_mean, stim_mean;
    };
    Columns refl, stan, all;
    for (const auto& r : records) {
        if (r.excluded) {
            ++report.excluded;
            continue;
        }
        const auto u = score_ueq(r);
        for (auto* c : {r.condition == Condition::Reflection ? &refl : &stan, &all}) {
            c->learning.push_back(r.learning_correct);
            c->attr_sum.push_back(u.attractiveness_sum);
            c->stim_sum.push_back(u.stimulation_sum);
            c->attr_mean.push_back(u.attractiveness_mean);
            c->stim_mean.push_back(u.stimulation_mean);
        }
    }
    if (refl.learning.size() < 2 || stan.learning.size() < 2) {
        throw PreconditionError("each condition needs at least two included participants (reflection " +
                                std::to_string(refl.learning.size()) + ", standard " + std::to_string(stan.learning.size()) + ")");
    }

    auto compare = [&](std::string name, const std::vector<double>& r, const std::vector<double>& s) {
        VariableComparison c{std::move(name), summarize(r), summarize(s), {}};
        c.test = pooled_t_test(c.standard, c.reflection);
        report.comparisons.push_back(c);
    };
    compare("learning", refl.learning, stan.learning);
    compare("attractiveness", refl.attr_sum, stan.attr_sum);
    compare("stimulation", refl.stim_sum, stan.stim_sum);
    report.attractiveness_mean_reflection = summarize(refl.attr_mean);
    report.attractiveness_mean_standard = summarize(stan.attr_mean);
    report.stimulation_mean_reflection = summarize(refl.stim_mean);
    report.stimulation_mean_standard = summarize(stan.stim_mean);

    auto normality = [](const std::vector<double>& v) -> std::optional<NormalityResult> {
        if (v.size() < kMinNormalitySample) return std::nullopt;
        try {
            return dagostino_pearson(v);
        } catch (const DegenerateVariance&) {
            return std::nullopt;
        }
    };
    report.normality = {{"learning", normality(all.learning)},
                        {"attractiveness", normality(all.attr_sum)},
                        {"stimulation", normality(all.stim_sum)}};
    return report;
}

nlohmann::json to_json(const UeqScores& s) {
    return {{"attractiveness_sum", s.attractiveness_sum},
            {"attractiveness_mean", s.attractiveness_mean},
            {"stimulation_sum", s.stimulation_sum},
            {"stimulation_mean", s.stimulation_mean}};
}

nlohmann::json to_json(const AnalysisReport& r) {
    nlohmann::json comparisons = nlohmann::json::array();
    for (const auto& c : r.comparisons) {
        comparisons.push_back({{"variable", c.variable},
                               {"reflection", to_json(c.reflection)},
                               {"standard", to_json(c.standard)},
                               {"test", to_json(c.test)}});
    }
    nlohmann::json normality = nlohmann::json::object();
    for (const auto& [name, n] : r.normality) normality[name] = n ? to_json(*n) : nlohmann::json();
    return {{"records", r.records},
            {"excluded", r.excluded},
            {"included", r.records - r.excluded},
            {"comparisons", comparisons},
            {"subscale_means",
             {{"attractiveness", {{"reflection", to_json(r.attractiveness_mean_reflection)},
                                  {"standard", to_json(r.attractiveness_mean_standard)}}},
              {"stimulation", {{"reflection", to_json(r.stimulation_mean_reflection)},
                               {"standard", to_json(r.stimulation_mean_standard)}}}}},
            {"normality", normality}};
}

namespace {

std::string fmt(const char* pattern, double a, double b = 0) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, a, b);
    return buf;
}

std::string pad(std::string s, std::size_t width) {
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
}

}  // namespace

std::string format_table(const AnalysisReport& r, SdConvention sd) {
    constexpr std::size_t w0 = 16, w = 16;
    std::string out = pad("", w0);
    for (const auto& c : r.comparisons) {
        auto name = c.variable;
        name[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(name[0])));
        out += pad(name, w);
    }
    out += "\n";
    for (const auto cond : {Condition::Reflection, Condition::Standard}) {
        out += pad(cond == Condition::Reflection ? "Reflection" : "Standard", w0);
        for (const auto& c : r.comparisons) {
            const auto& g = cond == Condition::Reflection ? c.reflection : c.standard;
            out += pad(fmt("%.2f (%.2f)", g.mean, sd == SdConvention::Population ? g.sd_population() : g.sd), w);
        }
        out += "\n";
    }
    out += sd == SdConvention::Population ? "(sd with denominator n)\n\n" : "(sd with denominator n - 1)\n\n";
    for (const auto& c : r.comparisons) {
        const auto& t = c.test;
        out += pad(c.variable, w0);
        out += t.infinite_t ? std::string("t(") + std::to_string(t.df) + ") = inf"
                            : "t(" + std::to_string(t.df) + ") = " + fmt("%.2f", t.t);
        out += fmt(", p = %.2f", t.p_two_tailed);
        out += std::isfinite(t.cohens_d) ? fmt(", d = %.2f", t.cohens_d) : std::string(", d = inf");
        out += "\n";
    }
    out += "\nn = " + std::to_string(r.comparisons.front().reflection.n) + " reflection, " +
           std::to_string(r.comparisons.front().standard.n) + " standard; " + std::to_string(r.excluded) + " excluded\n";
    for (const auto& [name, n] : r.normality) {
        out += pad("normality " + name, w0 + 10) + (n ? fmt("K2 = %.2f, p = %.2f", n->k2, n->p) : std::string("n/a (n < 20)")) + "\n";
    }
    return out;
}

}  // namespace reflectcast::analysis
