#pragma once

#include <chrono>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "reflectcast/errors.hpp"
#include "reflectcast/providers/config.hpp"

namespace reflectcast::providers {

struct ChatMessage {
    std::string role;  // "user" | "assistant"
    std::string content;
};

struct ChatRequest {
    // Routing label for logs and mocks ("summarize", "segment", ...). Not sent to remote backends.
    std::string task;
    std::string system_text;
    std::vector<ChatMessage> messages;
    int max_tokens = 512;

    const std::string& last_user_text() const;
};

struct ChatResponse {
    std::string text;
};

// Chat-completion client. Implementations are safe to share across threads.
class LlmProvider {
public:
    virtual ~LlmProvider() = default;
    // Throws ProviderError (RetryExhausted once the retry budget is spent).
    virtual ChatResponse complete_chat(const ChatRequest& request) = 0;
};

// One attempt against a backend, bounded by `timeout`.
class LlmBackend {
public:
    virtual ~LlmBackend() = default;
    virtual std::string attempt(const ChatRequest& request, std::chrono::milliseconds timeout) = 0;
};

class RetryingLlm final : public LlmProvider {
public:
    RetryingLlm(std::shared_ptr<LlmBackend> backend, RetryPolicy policy);
    ChatResponse complete_chat(const ChatRequest& request) override;
    LlmBackend& backend() { return *backend_; }

private:
    std::shared_ptr<LlmBackend> backend_;
    RetryPolicy policy_;
};

// Runs `fn(timeout)` up to retries + 1 times; rethrows the last failure as RetryExhausted.
template <class Fn>
auto with_retries(const RetryPolicy& policy, Fn&& fn) -> decltype(fn(std::chrono::milliseconds{})) {
    std::string last;
    ProviderError::Kind last_kind = ProviderError::Kind::Transport;
    for (int i = 0; i <= policy.retries; ++i) {
        try {
            return fn(std::chrono::milliseconds(policy.timeout_ms));
        } catch (const ProviderError& e) {
            last = e.what();
            last_kind = e.kind();
        }
    }
    throw RetryExhausted(last_kind, "retry budget exhausted after " + std::to_string(policy.retries + 1) +
                                        " attempts: " + last);
}

// Shared behaviour of the offline backends: request capture and injected latency.
class MockLlmBackend : public LlmBackend {
public:
    std::string attempt(const ChatRequest& request, std::chrono::milliseconds timeout) final;

    void set_delay(std::chrono::milliseconds delay);
    std::vector<ChatRequest> requests() const;
    std::size_t request_count() const;

protected:
    virtual std::string respond(const ChatRequest& request) = 0;

private:
    mutable std::mutex mu_;
    std::vector<ChatRequest> requests_;
    std::chrono::milliseconds delay_{0};
};

// Returns the last user message verbatim.
class EchoLlm final : public MockLlmBackend {
protected:
    std::string respond(const ChatRequest& request) override;
};

class FixedLlm final : public MockLlmBackend {
public:
    explicit FixedLlm(std::string text) : text_(std::move(text)) {}

protected:
    std::string respond(const ChatRequest&) override { return text_; }

private:
    std::string text_;
};

// Plays back a queue of outcomes; std::nullopt entries fail with a transport error.
class ScriptedLlm final : public MockLlmBackend {
public:
    explicit ScriptedLlm(std::vector<std::optional<std::string>> queue);

protected:
    std::string respond(const ChatRequest& request) override;

private:
    std::mutex queue_mu_;
    std::deque<std::optional<std::string>> queue_;
};

class FunctionLlm final : public MockLlmBackend {
public:
    explicit FunctionLlm(std::function<std::string(const ChatRequest&)> fn) : fn_(std::move(fn)) {}

protected:
    std::string respond(const ChatRequest& request) override { return fn_(request); }

private:
    std::function<std::string(const ChatRequest&)> fn_;
};

// The default offline backend behind endpoint "mock". Deterministic per task:
//   summarize            -> {"heading": first words, "summary_text": first sentence}
//   segment              -> narration built from heading + summary
//   evaluate_reflection  -> "1" when the response has at least five words, else "0"
//   interrupt_reply      -> reply quoting the current section summary
//   anything else        -> echo
class DemoLlm final : public MockLlmBackend {
protected:
    std::string respond(const ChatRequest& request) override;
};

// OpenAI-compatible /v1/chat/completions over HTTP(S).
class HttpChatLlm final : public LlmBackend {
public:
    explicit HttpChatLlm(ProviderConfig config);
    std::string attempt(const ChatRequest& request, std::chrono::milliseconds timeout) override;

private:
    ProviderConfig config_;
};

std::shared_ptr<LlmProvider> make_llm(std::shared_ptr<LlmBackend> backend, RetryPolicy policy = {});

}  // namespace reflectcast::providers
