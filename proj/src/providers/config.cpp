#include "reflectcast/providers/config.hpp"

#include <fstream>

#include "reflectcast/errors.hpp"

namespace reflectcast::providers {

std::string to_string(ProviderKind kind) {
    switch (kind) {
        case ProviderKind::Llm: return "llm";
        case ProviderKind::Tts: return "tts";
        case ProviderKind::Stt: return "stt";
        case ProviderKind::Vad: return "vad";
        case ProviderKind::Turn: return "turn";
    }
    return "?";
}

ProviderKind provider_kind_from_string(const std::string& s) {
    if (s == "llm") return ProviderKind::Llm;
    if (s == "tts") return ProviderKind::Tts;
    if (s == "stt") return ProviderKind::Stt;
    if (s == "vad") return ProviderKind::Vad;
    if (s == "turn") return ProviderKind::Turn;
    throw ConfigError("unknown provider kind '" + s + "'");
}

void ProviderConfig::validate() const {
    const auto who = to_string(kind) + " provider: ";
    if (endpoint.empty()) throw ConfigError(who + "endpoint is empty");
    if (timeout_ms < 100) throw ConfigError(who + "timeout_ms must be >= 100");
    if (retries < 0) throw ConfigError(who + "retries must be >= 0");
    if (!options.is_object()) throw ConfigError(who + "options must be an object");
}

ProvidersConfig ProvidersConfig::all_mock() { return ProvidersConfig{}; }

void ProvidersConfig::validate() const {
    for (const auto* c : {&llm, &tts, &stt, &vad, &turn}) c->validate();
}

namespace {

ProviderConfig parse_one(ProviderKind kind, const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError(to_string(kind) + " provider config must be an object");
    ProviderConfig c;
    c.kind = kind;
    c.endpoint = j.value("endpoint", c.endpoint);
    c.model_name = j.value("model_name", c.model_name);
    c.api_key_env = j.value("api_key_env", c.api_key_env);
    c.timeout_ms = j.value("timeout_ms", c.timeout_ms);
    c.retries = j.value("retries", c.retries);
    if (j.contains("options")) c.options = j.at("options");
    if (j.contains("kind") && provider_kind_from_string(j.at("kind").get<std::string>()) != kind) {
        throw ConfigError("provider config under '" + to_string(kind) + "' declares a different kind");
    }
    c.validate();
    return c;
}

}  // namespace

ProvidersConfig providers_config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("provider config must be a JSON object");
    ProvidersConfig cfg;
    try {
        for (const auto& [key, value] : j.items()) {
            const auto kind = provider_kind_from_string(key);
            auto parsed = parse_one(kind, value);
            switch (kind) {
                case ProviderKind::Llm: cfg.llm = std::move(parsed); break;
                case ProviderKind::Tts: cfg.tts = std::move(parsed); break;
                case ProviderKind::Stt: cfg.stt = std::move(parsed); break;
                case ProviderKind::Vad: cfg.vad = std::move(parsed); break;
                case ProviderKind::Turn: cfg.turn = std::move(parsed); break;
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("provider config: ") + e.what());
    }
    return cfg;
}

ProvidersConfig load_providers_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open provider config " + path.string());
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return providers_config_from_json(j);
}

nlohmann::json to_json(const ProviderConfig& c) {
    return {{"kind", to_string(c.kind)},         {"endpoint", c.endpoint},
            {"model_name", c.model_name},        {"api_key_env", c.api_key_env},
            {"timeout_ms", c.timeout_ms},        {"retries", c.retries},
            {"options", c.options}};
}

}  // namespace reflectcast::providers
