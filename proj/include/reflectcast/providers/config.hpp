#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

namespace reflectcast::providers {

enum class ProviderKind { Llm, Tts, Stt, Vad, Turn };

std::string to_string(ProviderKind kind);
ProviderKind provider_kind_from_string(const std::string& s);

struct RetryPolicy {
    int timeout_ms = 10000;
    int retries = 2;
};

struct ProviderConfig {
    ProviderKind kind = ProviderKind::Llm;
    std::string endpoint = "mock";
    std::string model_name = "mock";
    std::string api_key_env;  // name of the variable, never its value
    int timeout_ms = 10000;
    int retries = 2;
    nlohmann::json options = nlohmann::json::object();  // backend-specific knobs

    bool is_mock() const { return endpoint == "mock"; }
    RetryPolicy retry_policy() const { return {timeout_ms, retries}; }

    // Throws ConfigError.
    void validate() const;
};

inline ProviderConfig mock_config(ProviderKind kind) {
    ProviderConfig c;
    c.kind = kind;
    return c;
}

struct ProvidersConfig {
    ProviderConfig llm = mock_config(ProviderKind::Llm);
    ProviderConfig tts = mock_config(ProviderKind::Tts);
    ProviderConfig stt = mock_config(ProviderKind::Stt);
    ProviderConfig vad = mock_config(ProviderKind::Vad);
    ProviderConfig turn = mock_config(ProviderKind::Turn);

    static ProvidersConfig all_mock();
    void validate() const;
};

// {"llm": {...}, "tts": {...}, ...}; missing kinds default to mock.
ProvidersConfig providers_config_from_json(const nlohmann::json& j);
ProvidersConfig load_providers_config(const std::filesystem::path& path);
nlohmann::json to_json(const ProviderConfig& c);

}  // namespace reflectcast::providers
