#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "reflectcast/analysis/stats.hpp"

namespace reflectcast::analysis {

enum class Condition { Reflection, Standard };

std::string to_string(Condition c);
// Case-insensitive. Throws PreconditionError.
Condition condition_from_string(const std::string& s);

inline constexpr std::size_t kUeqItems = 10;
inline constexpr std::size_t kAttractivenessItems = 6;  // ueq_1..ueq_6
inline constexpr std::size_t kStimulationItems = 4;     // ueq_7..ueq_10
inline constexpr int kUeqMin = 1;
inline constexpr int kUeqMax = 7;
inline constexpr int kLearningQuestions = 10;

struct ParticipantRecord {
    std::string participant_id;
    Condition condition = Condition::Standard;
    bool excluded = false;
    int learning_correct = 0;
    std::array<int, kUeqItems> ueq_items{};
};

// Subscale sums and means; every item is scored with the positive pole high.
struct UeqScores {
    int attractiveness_sum = 0;
    double attractiveness_mean = 0;
    int stimulation_sum = 0;
    double stimulation_mean = 0;
};

// Throws OutOfRangeItem.
UeqScores score_ueq(std::span<const int, kUeqItems> items);
UeqScores score_ueq(const ParticipantRecord& record);

// Number of exact matches. Throws KeyLengthMismatch.
int score_learning(std::span<const std::string> answers, std::span<const std::string> key);

// Answer key: one answer per line, or comma separated; blank lines and lines
// starting with '#' are skipped. Throws ConfigError.
std::vector<std::string> parse_answer_key(const std::string& text);
std::vector<std::string> load_answer_key(const std::filesystem::path& path);

// Header: participant_id,condition,excluded,learning_correct,ueq_1..ueq_10.
// With an answer key, columns answer_1..answer_10 may replace (or must agree
// with) learning_correct. Column order is free. Throws RecordSchemaError with
// the 1-based line number.
std::vector<ParticipantRecord> parse_records_csv(const std::string& text, const std::vector<std::string>* key = nullptr);
std::vector<ParticipantRecord> load_records_csv(const std::filesystem::path& path, const std::vector<std::string>* key = nullptr);

struct VariableComparison {
    std::string variable;  // learning, attractiveness, stimulation
    GroupSummary reflection;
    GroupSummary standard;
    TestResult test;       // standard vs reflection, so a Standard advantage is positive
};

struct AnalysisReport {
    std::size_t records = 0;
    std::size_t excluded = 0;
    std::vector<VariableComparison> comparisons;
    // Subscale means per condition (the comparisons use sums).
    GroupSummary attractiveness_mean_reflection, attractiveness_mean_standard;
    GroupSummary stimulation_mean_reflection, stimulation_mean_standard;
    // Normality per variable over all included participants; absent below 20.
    std::vector<std::pair<std::string, std::optional<NormalityResult>>> normality;
};

// Drops excluded participants first. Throws PreconditionError when a
// condition has fewer than two included participants.
AnalysisReport analyze(std::span<const ParticipantRecord> records);

nlohmann::json to_json(const UeqScores& s);
nlohmann::json to_json(const AnalysisReport& r);
// Which denominator the printed standard deviations use. Tests always use n - 1.
enum class SdConvention { Sample, Population };

// Plain-text table laid out like the study's descriptive table.
std::string format_table(const AnalysisReport& r, SdConvention sd = SdConvention::Sample);

}  // namespace reflectcast::analysis
