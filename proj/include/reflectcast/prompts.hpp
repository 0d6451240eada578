#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "reflectcast/providers/llm.hpp"

// Request builders for every LLM call the system makes. Variable content is
// wrapped in <tag>...</tag> blocks so prompts stay unambiguous for remote
// models and parseable for the offline backends.
namespace reflectcast::prompts {

inline constexpr std::string_view kTaskSummarize = "summarize";
inline constexpr std::string_view kTaskSegment = "segment";
inline constexpr std::string_view kTaskEvaluateReflection = "evaluate_reflection";
inline constexpr std::string_view kTaskInterruptReply = "interrupt_reply";

// The criterion a reflection must meet to open the gate.
inline constexpr std::string_view kReflectionCriterion = "demonstrates awareness of their own knowledge";

std::string tagged(std::string_view tag, std::string_view body);
// Contents of the first <tag>...</tag> block, if any.
std::optional<std::string> extract_tagged(std::string_view text, std::string_view tag);

providers::ChatRequest summarize_paragraph(const std::string& title, const std::string& paragraph);

providers::ChatRequest narrate_section(const std::string& title, const std::vector<std::string>& outline_headings,
                                       const std::string& heading, const std::string& summary_text);

providers::ChatRequest evaluate_reflection(const std::string& section_heading, const std::string& section_summary,
                                           const std::string& response_text);

providers::ChatRequest interrupt_reply(const std::vector<std::string>& outline_headings,
                                       const std::string& section_heading, const std::string& section_summary,
                                       const std::string& learner_text);

}  // namespace reflectcast::prompts
