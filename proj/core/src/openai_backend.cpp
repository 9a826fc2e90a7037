#include <httplib.h>

#include <fmt/format.h>

#include "qrp/error.hpp"
#include "qrp/gateway.hpp"

namespace qrp {

struct OpenAiBackend::Impl {
    std::string origin;  // scheme://host[:port]
    std::string path;    // .../v1/chat/completions
    HttpBackendConfig config;
};

OpenAiBackend::OpenAiBackend(HttpBackendConfig config) : impl_(std::make_unique<Impl>()) {
    const auto& url = config.base_url;
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("LLM endpoint must start with http:// or https://: " + url);
    }
    const auto scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") {
        throw ConfigError("unsupported LLM endpoint scheme: " + scheme);
    }
    const auto path_start = url.find('/', scheme_end + 3);
    impl_->origin = url.substr(0, path_start);
    std::string prefix = path_start == std::string::npos ? std::string{} : url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    if (prefix.ends_with("/chat/completions")) {
        impl_->path = prefix;
    } else if (prefix.ends_with("/v1")) {
        impl_->path = prefix + "/chat/completions";
    } else {
        impl_->path = prefix + "/v1/chat/completions";
    }
    impl_->config = std::move(config);
}

OpenAiBackend::~OpenAiBackend() = default;

std::string OpenAiBackend::describe() const { return impl_->origin + impl_->path; }

ChatResponse OpenAiBackend::complete(const ChatRequest& request) {
    httplib::Client client(impl_->origin);
    const auto timeout = impl_->config.timeout;
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    httplib::Headers headers;
    if (!impl_->config.api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + impl_->config.api_key);
    }
    const auto result =
        client.Post(impl_->path, headers, to_json(request).dump(), "application/json");
    if (!result) {
        throw TransientError(fmt::format("POST {}: {}", describe(), httplib::to_string(result.error())));
    }
    const int status = result->status;
    if (status == 408 || status == 429 || status >= 500) {
        throw TransientError(fmt::format("POST {}: HTTP {}", describe(), status));
    }
    if (status != 200) {
        throw GatewayError(fmt::format("POST {}: HTTP {}: {}", describe(), status,
                                       result->body.substr(0, 500)));
    }
    nlohmann::json body;
    try {
        body = nlohmann::json::parse(result->body);
    } catch (const nlohmann::json::parse_error& e) {
        throw ProtocolError(fmt::format("POST {}: response is not JSON: {}", describe(), e.what()));
    }
    return chat_response_from_json(body);
}

}  // namespace qrp
