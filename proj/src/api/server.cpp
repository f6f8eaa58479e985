#include "sms/api/server.hpp"

#include <httplib.h>

#include <cctype>

#include "sms/core/errors.hpp"

namespace sms::api {

namespace {

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

HttpRequest convert(const httplib::Request& in) {
  HttpRequest r;
  r.method = in.method;
  r.path = in.path;
  for (const auto& [k, v] : in.params) r.query.emplace(k, v);
  for (const auto& [k, v] : in.headers) r.headers[lower(k)] = v;
  r.body = in.body;
  for (const auto& [name, f] : in.files) r.parts.push_back({name, f.filename, f.content_type, f.content});
  return r;
}

void cors(httplib::Response& res) {
  res.set_header("Access-Control-Allow-Origin", "*");
  res.set_header("Access-Control-Allow-Headers", "Authorization, Content-Type, If-Match, X-APIKEY");
  res.set_header("Access-Control-Allow-Methods", "GET, POST, PATCH, DELETE, OPTIONS");
  res.set_header("Access-Control-Expose-Headers", "ETag, Location");
}

}  // namespace

HttpServer::HttpServer(ApiService& service, std::size_t max_body)
    : service_(service), server_(std::make_unique<httplib::Server>()) {
  server_->set_payload_max_length(max_body);
  // The library default adds SO_REUSEPORT, which lets a second server bind an
  // occupied port.
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    auto out = service_.handle(convert(req));
    res.status = out.status;
    for (const auto& [k, v] : out.headers) res.set_header(k, v);
    cors(res);
    if (!out.body.empty() || out.status != 204) res.set_content(out.body, out.content_type);
  };
  server_->Get(".*", handler);
  server_->Post(".*", handler);
  server_->Patch(".*", handler);
  server_->Delete(".*", handler);
  server_->Put(".*", handler);
  server_->Options(".*", [](const httplib::Request&, httplib::Response& res) {
    cors(res);
    res.status = 204;
  });
  server_->set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return;
    nlohmann::json doc{{"errors",
                        {{{"status", std::to_string(res.status)},
                          {"code", res.status == 413 ? "too_large" : "bad_request"},
                          {"title", httplib::status_message(res.status)},
                          {"detail", httplib::status_message(res.status)}}}}};
    res.set_content(doc.dump(), kJsonApiType);
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  host_ = host;
  if (port == 0) {
    port_ = server_->bind_to_any_port(host);
  } else {
    port_ = server_->bind_to_port(host, port) ? port : -1;
  }
  if (port_ < 0) throw Error(ErrorCode::conflict, "cannot bind " + host + ":" + std::to_string(port));
  return port_;
}

void HttpServer::run() { server_->listen_after_bind(); }

void HttpServer::start() {
  thread_ = std::thread([this] { run(); });
  server_->wait_until_ready();
}

void HttpServer::stop() {
  server_->stop();
  if (thread_.joinable()) thread_.join();
}

std::string HttpServer::url() const { return "http://" + host_ + ":" + std::to_string(port_); }

}  // namespace sms::api
