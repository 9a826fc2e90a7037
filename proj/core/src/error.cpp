#include "qrp/error.hpp"

#include <utility>

#include <fmt/format.h>

namespace qrp {

DataError::DataError(const std::string& source, std::size_t line, const std::string& what)
    : Error(fmt::format("{}:{}: {}", source, line, what)), line_(line) {}

TransportError::TransportError(const std::string& what, std::vector<std::string> attempts)
    : GatewayError([&] {
          std::string msg = what;
          for (const auto& a : attempts) {
              msg += "\n  ";
              msg += a;
          }
          return msg;
      }()),
      attempts_(std::move(attempts)) {}

ScriptGapError::ScriptGapError(std::string fingerprint)
    : GatewayError("mock script has no entry for request fingerprint " + fingerprint),
      fingerprint_(std::move(fingerprint)) {}

ModelOutputError::ModelOutputError(const std::string& what, std::string raw)
    : DataError(what + "\n--- raw model output ---\n" + raw), raw_(std::move(raw)) {}

}  // namespace qrp
