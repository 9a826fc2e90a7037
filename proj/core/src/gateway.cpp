#include "qrp/gateway.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <fmt/format.h>

#include "qrp/error.hpp"

namespace qrp {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

const ChatMessage* last_user_message(const ChatRequest& request) {
    for (auto it = request.messages.rbegin(); it != request.messages.rend(); ++it) {
        if (it->role == Role::user) return &*it;
    }
    return nullptr;
}

std::string field_value(const std::string& content, std::string_view label) {
    std::size_t pos = 0;
    while (pos <= content.size()) {
        const auto end = std::min(content.find('\n', pos), content.size());
        const std::string_view line(content.data() + pos, end - pos);
        if (line.size() > label.size() && line.substr(0, label.size()) == label &&
            line[label.size()] == ':') {
            return trim(line.substr(label.size() + 1));
        }
        pos = end + 1;
    }
    return {};
}

int count_words(std::string_view text) {
    int n = 0;
    bool in_word = false;
    for (char c : text) {
        const bool space = c == ' ' || c == '\n' || c == '\t' || c == '\r';
        if (!space && !in_word) ++n;
        in_word = !space;
    }
    return n;
}

}  // namespace

std::string render_fallback(const std::string& tmpl, const ChatRequest& request) {
    const auto* user = last_user_message(request);
    const std::string user_text = user ? user->content : std::string{};
    std::string out;
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        const auto open = tmpl.find("{{", pos);
        if (open == std::string::npos) break;
        const auto close = tmpl.find("}}", open + 2);
        if (close == std::string::npos) break;
        out.append(tmpl, pos, open - pos);
        const std::string key = tmpl.substr(open + 2, close - open - 2);
        if (key == "user") {
            out += user_text;
        } else if (key == "fingerprint") {
            out += fingerprint(request);
        } else if (key.starts_with("field:")) {
            out += field_value(user_text, key.substr(6));
        } else {
            out.append(tmpl, open, close + 2 - open);
        }
        pos = close + 2;
    }
    out.append(tmpl, pos, std::string::npos);
    return out;
}

std::string MockScript::lookup(const ChatRequest& request) const {
    const auto fp = fingerprint(request);
    if (const auto it = entries.find(fp); it != entries.end()) return it->second;
    if (fallback) return render_fallback(*fallback, request);
    throw ScriptGapError(fp);
}

json MockScript::to_json() const {
    return {{"entries", entries}, {"fallback", fallback ? json(*fallback) : json(nullptr)}};
}

MockScript MockScript::from_json(const json& body) {
    try {
        MockScript script;
        if (body.contains("entries")) {
            for (const auto& [fp, content] : body.at("entries").items()) {
                script.entries.emplace(fp, content.get<std::string>());
            }
        }
        if (body.contains("fallback") && !body["fallback"].is_null()) {
            script.fallback = body["fallback"].get<std::string>();
        }
        return script;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed mock script: ") + e.what());
    }
}

MockScript MockScript::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open mock script " + path.string());
    try {
        return from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

void MockScript::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write mock script " + path.string());
    out << to_json().dump(2) << '\n';
}

ChatResponse MockBackend::complete(const ChatRequest& request) {
    request.validate();
    ChatResponse response;
    response.content = script_.lookup(request);
    response.finish_reason = "stop";
    for (const auto& m : request.messages) response.usage.prompt_tokens += count_words(m.content);
    response.usage.completion_tokens = count_words(response.content);
    return response;
}

Gateway::Gateway(std::shared_ptr<ChatBackend> backend, RetryPolicy retry, std::size_t max_in_flight,
                 std::string default_model)
    : backend_(std::move(backend)),
      retry_(retry),
      max_in_flight_(std::max<std::size_t>(1, max_in_flight)),
      default_model_(std::move(default_model)),
      sleeper_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }),
      jitter_rng_(retry.jitter_seed) {
    if (!backend_) throw ConfigError("gateway needs a backend");
}

std::size_t Gateway::peak_in_flight() const {
    std::lock_guard lock(mu_);
    return peak_;
}

std::chrono::milliseconds Gateway::backoff(int attempt) {
    const auto base = retry_.base_delay.count();
    const auto cap = retry_.max_delay.count();
    const auto exp = std::min<long long>(cap, base << std::min(attempt, 20));
    double u;
    {
        std::lock_guard lock(mu_);
        u = static_cast<double>(jitter_rng_() >> 11) * 0x1.0p-53;
    }
    // Full range [exp/2, exp).
    return std::chrono::milliseconds(static_cast<long long>(static_cast<double>(exp) * (0.5 + 0.5 * u)));
}

ChatResponse Gateway::complete(const ChatRequest& request) {
    ChatRequest req = request;
    if (req.model.empty()) req.model = default_model_;
    req.validate();

    {
        std::unique_lock lock(mu_);
        slot_free_.wait(lock, [&] { return in_flight_ < max_in_flight_; });
        ++in_flight_;
        peak_ = std::max(peak_, in_flight_);
    }
    struct SlotRelease {
        Gateway& g;
        ~SlotRelease() {
            {
                std::lock_guard lock(g.mu_);
                --g.in_flight_;
            }
            g.slot_free_.notify_one();
        }
    } release{*this};

    std::vector<std::string> attempts;
    for (int attempt = 0;; ++attempt) {
        try {
            return backend_->complete(req);
        } catch (const TransientError& e) {
            attempts.push_back(fmt::format("attempt {}: {}", attempt + 1, e.what()));
            if (attempt >= retry_.max_retries) {
                throw TransportError(fmt::format("{} failed after {} attempts",
                                                 backend_->describe(), attempt + 1),
                                     std::move(attempts));
            }
            sleeper_(backoff(attempt));
        }
    }
}

void GatewayConfig::apply_environment() {
    const auto env = [](const char* name) -> std::string {
        const char* v = std::getenv(name);
        return v ? std::string(v) : std::string{};
    };
    if (auto v = env("QRP_LLM_ENDPOINT"); !v.empty()) endpoint = std::move(v);
    if (auto v = env("QRP_LLM_API_KEY"); !v.empty()) api_key = std::move(v);
    if (auto v = env("QRP_LLM_MODEL"); !v.empty()) model = std::move(v);
}

std::unique_ptr<Gateway> make_gateway(const GatewayConfig& config) {
    std::shared_ptr<ChatBackend> backend;
    if (config.mock_script) {
        backend = std::make_shared<MockBackend>(MockScript::load(*config.mock_script));
    } else if (!config.endpoint.empty()) {
        backend = std::make_shared<OpenAiBackend>(HttpBackendConfig{config.endpoint, config.api_key});
    } else {
        throw ConfigError(
            "no LLM backend configured: pass --mock-script or set --llm-endpoint / QRP_LLM_ENDPOINT");
    }
    RetryPolicy retry;
    retry.max_retries = config.max_retries;
    return std::make_unique<Gateway>(std::move(backend), retry, config.max_in_flight, config.model);
}

}  // namespace qrp
