#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "sms/core/validation.hpp"

namespace sms {

enum class ErrorCode {
  bad_request,
  unauthorized,
  forbidden,
  not_found,
  version_conflict,
  conflict,
  validation_failed,
  invalid_state,
  duplicate_term,
  already_minted,
  too_large,
  inconsistent_state,
  not_mounted,
  handle_service_unavailable,
  internal,
};

std::string_view to_string(ErrorCode code);
int http_status(ErrorCode code);

// Every failure the library reports is an sms::Error. `detail` carries
// machine-readable context (e.g. the conflicting mount) for the wire layer.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message, nlohmann::json detail = nullptr)
      : std::runtime_error(std::move(message)), code_(code), detail_(std::move(detail)) {}

  ErrorCode code() const { return code_; }
  const nlohmann::json& detail() const { return detail_; }

 private:
  ErrorCode code_;
  nlohmann::json detail_;
};

class ValidationFailed : public Error {
 public:
  explicit ValidationFailed(ValidationReport report);

  const ValidationReport& report() const { return report_; }

 private:
  ValidationReport report_;
};

}  // namespace sms
