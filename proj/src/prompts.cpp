#include "reflectcast/prompts.hpp"

namespace reflectcast::prompts {

std::string tagged(std::string_view tag, std::string_view body) {
    std::string out;
    out.reserve(body.size() + 2 * tag.size() + 8);
    out.append("<").append(tag).append(">\n").append(body).append("\n</").append(tag).append(">\n");
    return out;
}

std::optional<std::string> extract_tagged(std::string_view text, std::string_view tag) {
    const std::string open = "<" + std::string(tag) + ">\n";
    const std::string close = "\n</" + std::string(tag) + ">";
    const auto b = text.find(open);
    if (b == std::string_view::npos) return std::nullopt;
    const auto start = b + open.size();
    const auto e = text.find(close, start);
    if (e == std::string_view::npos) return std::nullopt;
    return std::string(text.substr(start, e - start));
}

namespace {

std::string join_lines(const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += '\n';
        out += std::to_string(i + 1) + ". " + items[i];
    }
    return out;
}

providers::ChatRequest make(std::string_view task, std::string system, std::string user, int max_tokens) {
    providers::ChatRequest r;
    r.task = std::string(task);
    r.system_text = std::move(system);
    r.messages.push_back({"user", std::move(user)});
    r.max_tokens = max_tokens;
    return r;
}

}  // namespace

providers::ChatRequest summarize_paragraph(const std::string& title, const std::string& paragraph) {
    std::string system =
        "You condense instructional text into one section of a lecture outline.\n"
        "You receive exactly one paragraph of a document. Use only that paragraph.\n"
        "Reply with a single JSON object and nothing else:\n"
        "{\"heading\": <short heading, at most eight words>, "
        "\"summary_text\": <two to four sentences keeping every key concept and term>}";
    std::string user = tagged("title", title) + tagged("paragraph", paragraph);
    return make(kTaskSummarize, std::move(system), std::move(user), 400);
}

providers::ChatRequest narrate_section(const std::string& title, const std::vector<std::string>& outline_headings,
                                       const std::string& heading, const std::string& summary_text) {
    std::string system =
        "You are the single host of an educational audio lesson. Write the spoken narration for ONE "
        "section of the lesson. Cover every concept in the section summary, in plain conversational "
        "English suited to listening. Do not introduce material from other sections; the outline is "
        "given only so you can refer to where the lesson is going. No stage directions, no markup.";
    std::string user = tagged("title", title) + tagged("outline", join_lines(outline_headings)) +
                       tagged("section_heading", heading) + tagged("section_summary", summary_text);
    return make(kTaskSegment, std::move(system), std::move(user), 900);
}

providers::ChatRequest evaluate_reflection(const std::string& section_heading, const std::string& section_summary,
                                           const std::string& response_text) {
    std::string system =
        "You judge a learner's spoken reflection during an audio lesson. The learner was asked: "
        "\"So, what is the most important thing you've learned so far?\"\n"
        "The reflection is satisfactory only if it " + std::string(kReflectionCriterion) +
        ": the learner connects something from the lesson to a wider context, an opinion, an implication, "
        "or their own understanding. Restating a name or keyword from the lesson is NOT enough, even when "
        "it is correct. This is not a quiz; the learner does not need to cover everything.\n\n"
        "Examples, for a lesson about Confucius:\n"
        "Response: \"Confucius\"\n"
        "Verdict: 0\n"
        "Reason: a bare keyword restated from the lesson; no synthesis.\n\n"
        "Response: \"Confucius' teachings would be considered patriarchal by modern standards\"\n"
        "Verdict: 1\n"
        "Reason: combines a facet of the content with how the learner places it in the present day.\n\n"
        "Answer with the digit 1 (demonstrates understanding) or 0 (does not demonstrate understanding) "
        "on the first line, then one sentence of rationale on the second line.";
    std::string user = tagged("section_heading", section_heading) + tagged("section_summary", section_summary) +
                       tagged("response", response_text);
    return make(kTaskEvaluateReflection, std::move(system), std::move(user), 120);
}

providers::ChatRequest interrupt_reply(const std::vector<std::string>& outline_headings,
                                       const std::string& section_heading, const std::string& section_summary,
                                       const std::string& learner_text) {
    std::string system =
        "You are the host of an educational audio lesson and the learner just interrupted you. Reply in "
        "at most three spoken sentences. Ground the answer in the current section summary; if the "
        "question is about a later part of the outline, say it is coming up. Then you will resume the lesson.";
    std::string user = tagged("outline", join_lines(outline_headings)) + tagged("section_heading", section_heading) +
                       tagged("section_summary", section_summary) + tagged("learner", learner_text);
    return make(kTaskInterruptReply, std::move(system), std::move(user), 200);
}

}  // namespace reflectcast::prompts
