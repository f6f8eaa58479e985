#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace sms::api {

inline constexpr const char* kJsonApiType = "application/vnd.api+json";

// One part of a multipart/form-data body. Plain form fields have an empty
// filename.
struct FormPart {
  std::string name;
  std::string filename;
  std::string content_type;
  std::string content;
};

// Transport-neutral request; the HTTP adapter and in-process tests both
// build these.
struct HttpRequest {
  std::string method = "GET";
  std::string path = "/";
  std::multimap<std::string, std::string> query;
  std::map<std::string, std::string> headers;  // lower-case names
  std::string body;
  std::vector<FormPart> parts;

  std::optional<std::string> header(const std::string& name) const;
  std::optional<std::string> param(const std::string& name) const;
  const FormPart* part(const std::string& name) const;

  // Helpers for tests and the CLI.
  static HttpRequest get(std::string path);
  static HttpRequest with_json(std::string method, std::string path, const nlohmann::json& body);
  HttpRequest& set_header(std::string name, std::string value);
  HttpRequest& set_param(std::string name, std::string value);
};

struct HttpResponse {
  int status = 200;
  std::string content_type = kJsonApiType;
  std::string body;
  std::map<std::string, std::string> headers;

  // Parses the body; null for an empty body.
  nlohmann::json json() const;
};

// Splits "a=1&b=x%20y" into decoded pairs.
std::multimap<std::string, std::string> parse_query(std::string_view query);
std::string url_decode(std::string_view text);

}  // namespace sms::api
