// Remote backends speaking the OpenAI-compatible HTTP API. Integration-only:
// the test suite exercises them against an in-process fake server.
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>

#include <json.hpp>

#include "reflectcast/errors.hpp"
#include "reflectcast/providers/llm.hpp"
#include "reflectcast/providers/speech.hpp"
#include "reflectcast/text.hpp"

namespace reflectcast::providers {

namespace {

struct Endpoint {
    std::string origin;     // scheme://host[:port]
    std::string base_path;  // e.g. /v1
};

Endpoint parse_endpoint(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("endpoint must be a URL or \"mock\": " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    Endpoint e;
    e.origin = url.substr(0, path_start);
    e.base_path = path_start == std::string::npos ? "/v1" : url.substr(path_start);
    while (!e.base_path.empty() && e.base_path.back() == '/') e.base_path.pop_back();
    return e;
}

httplib::Headers auth_headers(const ProviderConfig& config) {
    httplib::Headers headers;
    if (!config.api_key_env.empty()) {
        const char* key = std::getenv(config.api_key_env.c_str());
        if (key && *key) headers.emplace("Authorization", std::string("Bearer ") + key);
    }
    return headers;
}

httplib::Result post_json(const ProviderConfig& config, const std::string& path, const nlohmann::json& body,
                          std::chrono::milliseconds timeout) {
    const auto ep = parse_endpoint(config.endpoint);
    httplib::Client client(ep.origin);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    auto res = client.Post(ep.base_path + path, auth_headers(config), body.dump(), "application/json");
    if (!res) {
        const auto err = res.error();
        const auto kind = (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout)
                              ? ProviderError::Kind::Timeout
                              : ProviderError::Kind::Transport;
        throw ProviderError(kind, config.endpoint + ": " + httplib::to_string(err));
    }
    if (res->status != 200) {
        throw ProviderError(ProviderError::Kind::Status, config.endpoint + ": HTTP " + std::to_string(res->status));
    }
    return res;
}

}  // namespace

HttpChatLlm::HttpChatLlm(ProviderConfig config) : config_(std::move(config)) { parse_endpoint(config_.endpoint); }

std::string HttpChatLlm::attempt(const ChatRequest& request, std::chrono::milliseconds timeout) {
    nlohmann::json messages = nlohmann::json::array();
    if (!request.system_text.empty()) messages.push_back({{"role", "system"}, {"content", request.system_text}});
    for (const auto& m : request.messages) messages.push_back({{"role", m.role}, {"content", m.content}});
    const nlohmann::json body{{"model", config_.model_name}, {"messages", messages}, {"max_tokens", request.max_tokens}};

    auto res = post_json(config_, "/chat/completions", body, timeout);
    try {
        const auto j = nlohmann::json::parse(res->body);
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ProviderError(ProviderError::Kind::Status, std::string("malformed chat completion: ") + e.what());
    }
}

HttpTts::HttpTts(ProviderConfig config) : config_(std::move(config)) { parse_endpoint(config_.endpoint); }

AudioClip HttpTts::synthesize_speech(const std::string& text) {
    if (text::is_blank(text)) throw PreconditionError("tts: text is empty");
    const nlohmann::json body{{"model", config_.model_name},
                              {"input", text},
                              {"voice", config_.options.value("voice", std::string("alloy"))},
                              {"response_format", "pcm"}};
    return with_retries(config_.retry_policy(), [&](std::chrono::milliseconds timeout) {
        auto res = post_json(config_, "/audio/speech", body, timeout);
        AudioClip clip;
        clip.samples = frame_from_bytes(std::span<const std::uint8_t>(
            reinterpret_cast<const std::uint8_t*>(res->body.data()), res->body.size()));
        return clip;
    });
}

std::string HttpTts::voice_id() const {
    return config_.model_name + "/" + config_.options.value("voice", std::string("alloy"));
}

}  // namespace reflectcast::providers
