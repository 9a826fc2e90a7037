#include "qrp/chat.hpp"

#include "qrp/error.hpp"
#include "qrp/hash.hpp"

namespace qrp {

using nlohmann::json;

std::string_view to_string(Role role) noexcept {
    switch (role) {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
    }
    return "user";
}

Role parse_role(std::string_view text) {
    if (text == "system") return Role::system;
    if (text == "user") return Role::user;
    if (text == "assistant") return Role::assistant;
    throw DataError("unknown chat role '" + std::string(text) + "'");
}

void ChatRequest::validate() const {
    if (messages.empty()) throw DataError("chat request needs at least one message");
    if (max_tokens < 1) throw DataError("max_tokens must be >= 1");
}

json to_json(const ChatRequest& request) {
    json messages = json::array();
    for (const auto& m : request.messages) {
        messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
    }
    json body = {{"model", request.model},
                 {"messages", std::move(messages)},
                 {"max_tokens", request.max_tokens},
                 {"temperature", request.temperature}};
    if (request.seed) body["seed"] = *request.seed;
    return body;
}

ChatRequest chat_request_from_json(const json& body) {
    try {
        ChatRequest request;
        request.model = body.value("model", std::string{});
        for (const auto& m : body.at("messages")) {
            request.messages.push_back(
                {parse_role(m.at("role").get<std::string>()), m.at("content").get<std::string>()});
        }
        request.max_tokens = body.value("max_tokens", kDefaultMaxTokens);
        request.temperature = body.value("temperature", kDefaultTemperature);
        if (body.contains("seed") && !body["seed"].is_null()) {
            request.seed = body["seed"].get<std::int64_t>();
        }
        request.validate();
        return request;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed chat request: ") + e.what());
    }
}

ChatResponse chat_response_from_json(const json& body) {
    try {
        const auto& choices = body.at("choices");
        if (!choices.is_array() || choices.empty()) throw ProtocolError("response has no choices");
        const auto& choice = choices.at(0);
        ChatResponse response;
        const auto& content = choice.at("message").at("content");
        response.content = content.is_null() ? std::string{} : content.get<std::string>();
        if (choice.contains("finish_reason") && choice["finish_reason"].is_string()) {
            response.finish_reason = choice["finish_reason"].get<std::string>();
        }
        if (body.contains("usage") && body["usage"].is_object()) {
            response.usage.prompt_tokens = body["usage"].value("prompt_tokens", 0);
            response.usage.completion_tokens = body["usage"].value("completion_tokens", 0);
        }
        return response;
    } catch (const json::exception& e) {
        throw ProtocolError(std::string("malformed chat completion body: ") + e.what());
    }
}

json to_json(const ChatResponse& response) {
    return {{"object", "chat.completion"},
            {"choices",
             json::array({{{"index", 0},
                           {"message", {{"role", "assistant"}, {"content", response.content}}},
                           {"finish_reason", response.finish_reason}}})},
            {"usage",
             {{"prompt_tokens", response.usage.prompt_tokens},
              {"completion_tokens", response.usage.completion_tokens},
              {"total_tokens", response.usage.prompt_tokens + response.usage.completion_tokens}}}};
}

std::string fingerprint(const ChatRequest& request) {
    StableHasher hasher;
    for (const auto& m : request.messages) {
        // Unit/record separators keep ("a:b", "c") distinct from ("a", "b:c").
        hasher.update(to_string(m.role)).update("\x1f").update(m.content).update("\x1e");
    }
    return to_hex(hasher.digest());
}

}  // namespace qrp
