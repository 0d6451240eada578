#include "reflectcast/providers/llm.hpp"

#include <cctype>
#include <thread>

#include <json.hpp>

#include "reflectcast/prompts.hpp"
#include "reflectcast/text.hpp"

namespace reflectcast::providers {

const std::string& ChatRequest::last_user_text() const {
    static const std::string empty;
    for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
        if (it->role == "user") return it->content;
    }
    return empty;
}

RetryingLlm::RetryingLlm(std::shared_ptr<LlmBackend> backend, RetryPolicy policy)
    : backend_(std::move(backend)), policy_(policy) {}

ChatResponse RetryingLlm::complete_chat(const ChatRequest& request) {
    if (request.messages.empty()) throw PreconditionError("chat request has no messages");
    return with_retries(policy_, [&](std::chrono::milliseconds timeout) {
        return ChatResponse{backend_->attempt(request, timeout)};
    });
}

std::shared_ptr<LlmProvider> make_llm(std::shared_ptr<LlmBackend> backend, RetryPolicy policy) {
    return std::make_shared<RetryingLlm>(std::move(backend), policy);
}

std::string MockLlmBackend::attempt(const ChatRequest& request, std::chrono::milliseconds timeout) {
    std::chrono::milliseconds delay;
    {
        std::lock_guard lock(mu_);
        requests_.push_back(request);
        delay = delay_;
    }
    if (delay > timeout) {
        std::this_thread::sleep_for(timeout);
        throw ProviderError(ProviderError::Kind::Timeout, "mock llm timed out");
    }
    if (delay.count() > 0) std::this_thread::sleep_for(delay);
    return respond(request);
}

void MockLlmBackend::set_delay(std::chrono::milliseconds delay) {
    std::lock_guard lock(mu_);
    delay_ = delay;
}

std::vector<ChatRequest> MockLlmBackend::requests() const {
    std::lock_guard lock(mu_);
    return requests_;
}

std::size_t MockLlmBackend::request_count() const {
    std::lock_guard lock(mu_);
    return requests_.size();
}

std::string EchoLlm::respond(const ChatRequest& request) { return request.last_user_text(); }

ScriptedLlm::ScriptedLlm(std::vector<std::optional<std::string>> queue) : queue_(queue.begin(), queue.end()) {}

std::string ScriptedLlm::respond(const ChatRequest&) {
    std::lock_guard lock(queue_mu_);
    if (queue_.empty()) throw ProviderError(ProviderError::Kind::Transport, "scripted llm: queue exhausted");
    auto next = std::move(queue_.front());
    queue_.pop_front();
    if (!next) throw ProviderError(ProviderError::Kind::Transport, "scripted llm: injected failure");
    return *next;
}

namespace {

std::string heading_from(std::string_view paragraph) {
    auto words = text::split_words(text::first_sentence(paragraph));
    if (words.size() > 6) words.resize(6);
    auto heading = text::join(words, " ");
    while (!heading.empty() && std::ispunct(static_cast<unsigned char>(heading.back()))) heading.pop_back();
    return heading;
}

}  // namespace

std::string DemoLlm::respond(const ChatRequest& request) {
    const auto& user = request.last_user_text();
    auto field = [&](std::string_view tag) { return prompts::extract_tagged(user, tag).value_or(""); };

    if (request.task == prompts::kTaskSummarize) {
        const auto paragraph = field("paragraph");
        nlohmann::json j{{"heading", heading_from(paragraph)}, {"summary_text", text::first_sentence(paragraph)}};
        return j.dump();
    }
    if (request.task == prompts::kTaskSegment) {
        return "Next up: " + field("section_heading") + ". " + field("section_summary");
    }
    if (request.task == prompts::kTaskEvaluateReflection) {
        if (text::split_words(field("response")).size() >= 5) {
            return "1\nThe learner connects the lesson content to a broader point.";
        }
        return "0\nThe learner only restates a keyword from the lesson.";
    }
    if (request.task == prompts::kTaskInterruptReply) {
        return "Good question. Here is how it fits what we are covering in " + field("section_heading") + ": " +
               field("section_summary");
    }
    return user;
}

}  // namespace reflectcast::providers
