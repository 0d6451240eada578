#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "reflectcast/audio.hpp"

namespace reflectcast::service {

// Control message exchanged as one JSON text frame:
//   {"type": "...", "session_id": "...", "seq": n, "payload": {...}}
struct WireMessage {
    std::string type;
    std::string session_id;
    std::int64_t seq = 0;
    nlohmann::json payload = nlohmann::json::object();

    bool operator==(const WireMessage&) const = default;
};

namespace msg {
inline constexpr std::string_view kSessionStart = "session.start";
inline constexpr std::string_view kClientReady = "client.ready";
inline constexpr std::string_view kAgentSpeechStart = "agent.speech.start";
inline constexpr std::string_view kAgentSpeechPause = "agent.speech.pause";
inline constexpr std::string_view kAgentSpeechResume = "agent.speech.resume";
inline constexpr std::string_view kAgentSpeechEnd = "agent.speech.end";
inline constexpr std::string_view kUserSpeechStart = "user.speech.start";
inline constexpr std::string_view kUserTranscript = "user.transcript";
inline constexpr std::string_view kReflectionPrompt = "reflection.prompt";
inline constexpr std::string_view kReflectionVerdict = "reflection.verdict";
inline constexpr std::string_view kAgentReply = "agent.reply";
inline constexpr std::string_view kSessionEnd = "session.end";
inline constexpr std::string_view kError = "error";
}  // namespace msg

// Every tag the protocol knows, in either direction.
const std::vector<std::string_view>& known_message_types();
bool is_known_type(std::string_view type);
// Types a client may send.
bool is_client_type(std::string_view type);

nlohmann::json to_json(const WireMessage& m);
// Throws ProtocolViolation on malformed envelopes or unknown types.
WireMessage wire_message_from_json(const nlohmann::json& j);
std::string encode(const WireMessage& m);
WireMessage decode(std::string_view text);

// Binary frames: one channel byte followed by one 20 ms PCM16 frame.
inline constexpr std::uint8_t kAgentChannel = 0x01;
inline constexpr std::uint8_t kLearnerChannel = 0x02;

std::vector<std::uint8_t> encode_audio(std::uint8_t channel, std::span<const std::int16_t> frame);
struct AudioPacket {
    std::uint8_t channel = 0;
    Frame frame;
};
// Throws ProtocolViolation on a wrong size or unknown channel.
AudioPacket decode_audio(std::span<const std::uint8_t> bytes);

// Error codes carried by error{code, message}.
namespace error_code {
inline constexpr std::string_view kUnknownContent = "unknown_content";
inline constexpr std::string_view kUnknownSession = "unknown_session";
inline constexpr std::string_view kProtocolViolation = "protocol_violation";
inline constexpr std::string_view kBadRequest = "bad_request";
inline constexpr std::string_view kInternal = "internal";
}  // namespace error_code

}  // namespace reflectcast::service
