#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace qrp {

enum class Role { system, user, assistant };

[[nodiscard]] std::string_view to_string(Role role) noexcept;
/// Throws DataError for anything but "system", "user" or "assistant".
[[nodiscard]] Role parse_role(std::string_view text);

struct ChatMessage {
    Role role = Role::user;
    std::string content;

    friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

/// Generation defaults: 512 new tokens at temperature 1.0.
inline constexpr int kDefaultMaxTokens = 512;
inline constexpr double kDefaultTemperature = 1.0;

struct ChatRequest {
    std::string model;
    std::vector<ChatMessage> messages;
    int max_tokens = kDefaultMaxTokens;
    double temperature = kDefaultTemperature;
    std::optional<std::int64_t> seed;

    /// Throws DataError when there are no messages or max_tokens < 1.
    void validate() const;

    friend bool operator==(const ChatRequest&, const ChatRequest&) = default;
};

struct TokenUsage {
    int prompt_tokens = 0;
    int completion_tokens = 0;
    friend bool operator==(const TokenUsage&, const TokenUsage&) = default;
};

struct ChatResponse {
    std::string content;
    std::string finish_reason = "stop";
    TokenUsage usage;
    friend bool operator==(const ChatResponse&, const ChatResponse&) = default;
};

/// OpenAI chat-completions request body.
[[nodiscard]] nlohmann::json to_json(const ChatRequest& request);
/// Inverse of to_json. Throws DataError on a malformed body.
[[nodiscard]] ChatRequest chat_request_from_json(const nlohmann::json& body);

/// Parses an OpenAI chat-completions response body. Throws ProtocolError
/// when the shape is wrong.
[[nodiscard]] ChatResponse chat_response_from_json(const nlohmann::json& body);
[[nodiscard]] nlohmann::json to_json(const ChatResponse& response);

/// Stable hash of the ordered role/content pairs, excluding model and
/// sampling parameters. 16 lowercase hex characters.
[[nodiscard]] std::string fingerprint(const ChatRequest& request);

}  // namespace qrp
