#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>

#include "qrp/chat.hpp"

namespace qrp {

/// One chat-completion service. Implementations throw TransientError for
/// failures worth retrying and any other GatewayError otherwise.
class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual ChatResponse complete(const ChatRequest& request) = 0;
    [[nodiscard]] virtual std::string describe() const = 0;
};

/// Canned responses keyed by request fingerprint.
///
/// File format: {"entries": {"<fingerprint>": "<content>"}, "fallback": null | "<template>"}.
/// The fallback template may reference `{{user}}` (last user message),
/// `{{fingerprint}}`, and `{{field:Label}}`, which expands to the trimmed
/// text after "Label:" on the first line of the last user message that
/// starts with it.
struct MockScript {
    std::map<std::string, std::string> entries;
    std::optional<std::string> fallback;

    /// Throws ScriptGapError when the fingerprint is unknown and there is
    /// no fallback.
    [[nodiscard]] std::string lookup(const ChatRequest& request) const;

    [[nodiscard]] nlohmann::json to_json() const;
    [[nodiscard]] static MockScript from_json(const nlohmann::json& body);
    [[nodiscard]] static MockScript load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
};

[[nodiscard]] std::string render_fallback(const std::string& tmpl, const ChatRequest& request);

/// Deterministic offline backend.
class MockBackend final : public ChatBackend {
public:
    explicit MockBackend(MockScript script) : script_(std::move(script)) {}
    ChatResponse complete(const ChatRequest& request) override;
    [[nodiscard]] std::string describe() const override { return "mock"; }
    [[nodiscard]] const MockScript& script() const noexcept { return script_; }

private:
    MockScript script_;
};

struct HttpBackendConfig {
    /// Server root such as "http://localhost:8000" or "https://api.example.com/v1".
    std::string base_url;
    std::string api_key;
    std::chrono::seconds timeout{120};
};

/// OpenAI-compatible `POST .../v1/chat/completions` over HTTP(S).
/// Connection failures, 408, 429 and 5xx are transient; other non-200
/// statuses and malformed bodies are not.
class OpenAiBackend final : public ChatBackend {
public:
    explicit OpenAiBackend(HttpBackendConfig config);
    ~OpenAiBackend() override;
    ChatResponse complete(const ChatRequest& request) override;
    [[nodiscard]] std::string describe() const override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

struct RetryPolicy {
    int max_retries = 3;
    std::chrono::milliseconds base_delay{500};
    std::chrono::milliseconds max_delay{8000};
    std::uint64_t jitter_seed = 0;
};

inline constexpr std::size_t kDefaultMaxInFlight = 4;

/// Retrying, concurrency-capped front door to a backend. Thread-safe.
class Gateway {
public:
    using Sleeper = std::function<void(std::chrono::milliseconds)>;

    explicit Gateway(std::shared_ptr<ChatBackend> backend, RetryPolicy retry = {},
                     std::size_t max_in_flight = kDefaultMaxInFlight, std::string default_model = {});

    /// Sends `request`, filling in the default model when the request has
    /// none. Retries TransientError with jittered exponential backoff;
    /// throws TransportError carrying the attempt log once retries are
    /// exhausted. Other errors propagate on the first occurrence.
    ChatResponse complete(const ChatRequest& request);

    /// Replaces the backoff sleep (tests use this to avoid real waits).
    void set_sleeper(Sleeper sleeper) { sleeper_ = std::move(sleeper); }

    [[nodiscard]] std::size_t max_in_flight() const noexcept { return max_in_flight_; }
    [[nodiscard]] std::size_t peak_in_flight() const;
    [[nodiscard]] const std::string& default_model() const noexcept { return default_model_; }
    [[nodiscard]] const ChatBackend& backend() const noexcept { return *backend_; }

private:
    std::chrono::milliseconds backoff(int attempt);

    std::shared_ptr<ChatBackend> backend_;
    RetryPolicy retry_;
    std::size_t max_in_flight_;
    std::string default_model_;
    Sleeper sleeper_;

    mutable std::mutex mu_;
    std::condition_variable slot_free_;
    std::size_t in_flight_ = 0;
    std::size_t peak_ = 0;
    std::mt19937_64 jitter_rng_;
};

/// Convenience wrapper matching the single-call interface.
inline ChatResponse complete_chat(Gateway& gateway, const ChatRequest& request) {
    return gateway.complete(request);
}

/// Everything needed to construct a Gateway from the CLI or a config file.
struct GatewayConfig {
    std::optional<std::filesystem::path> mock_script;  // takes precedence over HTTP
    std::string endpoint;
    std::string api_key;
    std::string model;
    std::size_t max_in_flight = kDefaultMaxInFlight;
    int max_retries = 3;

    /// Overwrites endpoint, api_key and model with QRP_LLM_ENDPOINT,
    /// QRP_LLM_API_KEY and QRP_LLM_MODEL where those are set.
    void apply_environment();
};

/// Throws ConfigError when neither a mock script nor an endpoint is set.
[[nodiscard]] std::unique_ptr<Gateway> make_gateway(const GatewayConfig& config);

}  // namespace qrp
