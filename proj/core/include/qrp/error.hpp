#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qrp {

/// Base class for every error raised by the library. Each subclass maps to
/// one process exit code in the CLI.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad or missing configuration (exit code 2).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed or inconsistent input data (exit code 3). Carries the 1-based
/// source line when the error came from a line-oriented file.
class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(what) {}
    DataError(const std::string& source, std::size_t line, const std::string& what);

    [[nodiscard]] std::optional<std::size_t> line() const noexcept { return line_; }

private:
    std::optional<std::size_t> line_;
};

/// Any failure talking to the chat-completion service (exit code 4).
class GatewayError : public Error {
public:
    using Error::Error;
};

/// A failure that may succeed when retried (connection reset, 429, 5xx).
class TransientError : public GatewayError {
public:
    using GatewayError::GatewayError;
};

/// Retries exhausted. `attempts()` holds one line per failed attempt.
class TransportError : public GatewayError {
public:
    TransportError(const std::string& what, std::vector<std::string> attempts);

    [[nodiscard]] const std::vector<std::string>& attempts() const noexcept { return attempts_; }

private:
    std::vector<std::string> attempts_;
};

/// The service answered but the body was not a chat completion.
class ProtocolError : public GatewayError {
public:
    using GatewayError::GatewayError;
};

/// The mock script has no entry (and no fallback) for a request.
class ScriptGapError : public GatewayError {
public:
    explicit ScriptGapError(std::string fingerprint);

    [[nodiscard]] const std::string& fingerprint() const noexcept { return fingerprint_; }

private:
    std::string fingerprint_;
};

/// The LLM output could not be turned into the structure we asked for.
class ModelOutputError : public DataError {
public:
    ModelOutputError(const std::string& what, std::string raw);

    [[nodiscard]] const std::string& raw() const noexcept { return raw_; }

private:
    std::string raw_;
};

}  // namespace qrp
