#include "sms/core/errors.hpp"

namespace sms {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::bad_request: return "bad_request";
    case ErrorCode::unauthorized: return "unauthorized";
    case ErrorCode::forbidden: return "forbidden";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::version_conflict: return "version_conflict";
    case ErrorCode::conflict: return "conflict";
    case ErrorCode::validation_failed: return "validation_failed";
    case ErrorCode::invalid_state: return "invalid_state";
    case ErrorCode::duplicate_term: return "duplicate_term";
    case ErrorCode::already_minted: return "already_minted";
    case ErrorCode::too_large: return "too_large";
    case ErrorCode::inconsistent_state: return "inconsistent_state";
    case ErrorCode::not_mounted: return "not_mounted";
    case ErrorCode::handle_service_unavailable: return "handle_service_unavailable";
    case ErrorCode::internal: return "internal";
  }
  return "internal";
}

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::bad_request: return 400;
    case ErrorCode::unauthorized: return 401;
    case ErrorCode::forbidden: return 403;
    case ErrorCode::not_found: return 404;
    case ErrorCode::version_conflict:
    case ErrorCode::conflict:
    case ErrorCode::invalid_state:
    case ErrorCode::duplicate_term:
    case ErrorCode::already_minted:
    case ErrorCode::inconsistent_state: return 409;
    case ErrorCode::validation_failed: return 422;
    case ErrorCode::too_large: return 413;
    case ErrorCode::not_mounted: return 404;
    case ErrorCode::handle_service_unavailable: return 502;
    case ErrorCode::internal: return 500;
  }
  return 500;
}

std::string ValidationReport::summary() const {
  std::string out;
  for (const auto& v : violations) {
    if (!out.empty()) out += "; ";
    out += (v.warning ? "warning " : "") + v.path + ": " + v.message;
  }
  return out;
}

ValidationFailed::ValidationFailed(ValidationReport report)
    : Error(ErrorCode::validation_failed, "validation failed: " + report.summary()),
      report_(std::move(report)) {}

}  // namespace sms
