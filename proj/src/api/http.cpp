#include "sms/api/http.hpp"

#include <cctype>

namespace sms::api {

namespace {

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

std::optional<std::string> HttpRequest::header(const std::string& name) const {
  auto it = headers.find(lower(name));
  if (it == headers.end()) return std::nullopt;
  return it->second;
}

std::optional<std::string> HttpRequest::param(const std::string& name) const {
  auto it = query.find(name);
  if (it == query.end()) return std::nullopt;
  return it->second;
}

const FormPart* HttpRequest::part(const std::string& name) const {
  for (const auto& p : parts) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

HttpRequest HttpRequest::get(std::string path) {
  HttpRequest r;
  auto q = path.find('?');
  if (q != std::string::npos) {
    r.query = parse_query(std::string_view(path).substr(q + 1));
    path.resize(q);
  }
  r.path = std::move(path);
  return r;
}

HttpRequest HttpRequest::with_json(std::string method, std::string path, const nlohmann::json& body) {
  auto r = get(std::move(path));
  r.method = std::move(method);
  if (!body.is_null()) {
    r.body = body.dump();
    r.headers["content-type"] = kJsonApiType;
  }
  return r;
}

HttpRequest& HttpRequest::set_header(std::string name, std::string value) {
  headers[lower(std::move(name))] = std::move(value);
  return *this;
}

HttpRequest& HttpRequest::set_param(std::string name, std::string value) {
  query.emplace(std::move(name), std::move(value));
  return *this;
}

nlohmann::json HttpResponse::json() const {
  if (body.empty()) return nullptr;
  return nlohmann::json::parse(body);
}

std::string url_decode(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c == '+') {
      out += ' ';
    } else if (c == '%' && i + 2 < text.size() && hex_value(text[i + 1]) >= 0 && hex_value(text[i + 2]) >= 0) {
      out += static_cast<char>(hex_value(text[i + 1]) * 16 + hex_value(text[i + 2]));
      i += 2;
    } else {
      out += c;
    }
  }
  return out;
}

std::multimap<std::string, std::string> parse_query(std::string_view query) {
  std::multimap<std::string, std::string> out;
  while (!query.empty()) {
    auto amp = query.find('&');
    auto pair = query.substr(0, amp);
    query = amp == std::string_view::npos ? std::string_view{} : query.substr(amp + 1);
    if (pair.empty()) continue;
    auto eq = pair.find('=');
    if (eq == std::string_view::npos) {
      out.emplace(url_decode(pair), "");
    } else {
      out.emplace(url_decode(pair.substr(0, eq)), url_decode(pair.substr(eq + 1)));
    }
  }
  return out;
}

}  // namespace sms::api
