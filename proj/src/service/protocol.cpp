#include "reflectcast/service/protocol.hpp"

#include <algorithm>

#include "reflectcast/errors.hpp"

namespace reflectcast::service {

const std::vector<std::string_view>& known_message_types() {
    static const std::vector<std::string_view> types = {
        msg::kSessionStart,     msg::kClientReady,     msg::kAgentSpeechStart, msg::kAgentSpeechPause,
        msg::kAgentSpeechResume, msg::kAgentSpeechEnd, msg::kUserSpeechStart,  msg::kUserTranscript,
        msg::kReflectionPrompt, msg::kReflectionVerdict, msg::kAgentReply,     msg::kSessionEnd,
        msg::kError,
    };
    return types;
}

bool is_known_type(std::string_view type) {
    const auto& t = known_message_types();
    return std::find(t.begin(), t.end(), type) != t.end();
}

bool is_client_type(std::string_view type) {
    return type == msg::kSessionStart || type == msg::kClientReady || type == msg::kUserSpeechStart ||
           type == msg::kUserTranscript;
}

nlohmann::json to_json(const WireMessage& m) {
    return {{"type", m.type}, {"session_id", m.session_id}, {"seq", m.seq}, {"payload", m.payload}};
}

WireMessage wire_message_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ProtocolViolation("message must be a JSON object");
    WireMessage m;
    try {
        m.type = j.at("type").get<std::string>();
        if (j.contains("session_id") && !j.at("session_id").is_null()) m.session_id = j.at("session_id").get<std::string>();
        m.seq = j.at("seq").get<std::int64_t>();
        if (j.contains("payload") && !j.at("payload").is_null()) m.payload = j.at("payload");
    } catch (const nlohmann::json::exception& e) {
        throw ProtocolViolation(std::string("malformed message envelope: ") + e.what());
    }
    if (m.seq < 0) throw ProtocolViolation("seq must be non-negative");
    if (!m.payload.is_object()) throw ProtocolViolation("payload must be an object");
    if (!is_known_type(m.type)) throw ProtocolViolation("unknown message type '" + m.type + "'");
    return m;
}

std::string encode(const WireMessage& m) { return to_json(m).dump(); }

WireMessage decode(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ProtocolViolation(std::string("message is not JSON: ") + e.what());
    }
    return wire_message_from_json(j);
}

std::vector<std::uint8_t> encode_audio(std::uint8_t channel, std::span<const std::int16_t> frame) {
    std::vector<std::uint8_t> out;
    out.reserve(1 + frame.size() * 2);
    out.push_back(channel);
    const auto body = frame_to_bytes(frame);
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

AudioPacket decode_audio(std::span<const std::uint8_t> bytes) {
    if (bytes.size() != 1 + static_cast<std::size_t>(kFrameBytes)) {
        throw ProtocolViolation("audio frame must be 1 + " + std::to_string(kFrameBytes) + " bytes, got " +
                                std::to_string(bytes.size()));
    }
    const auto channel = bytes[0];
    if (channel != kAgentChannel && channel != kLearnerChannel) {
        throw ProtocolViolation("unknown audio channel " + std::to_string(channel));
    }
    return {channel, frame_from_bytes(bytes.subspan(1))};
}

}  // namespace reflectcast::service
