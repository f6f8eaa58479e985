#include "sms/pid/mock_handle_server.hpp"

#include <httplib.h>

#include <cstdio>

namespace sms::pid {

using nlohmann::json;

MockHandleServer::MockHandleServer(std::string prefix, std::string token)
    : prefix_(std::move(prefix)), token_(std::move(token)), server_(std::make_unique<httplib::Server>()) {
  auto authorized = [this](const httplib::Request& req, httplib::Response& res) {
    if (token_.empty() || req.get_header_value("Authorization") == "Bearer " + token_) return true;
    res.status = 401;
    return false;
  };
  auto parse = [](const httplib::Request& req, json& out) {
    try {
      out = json::parse(req.body);
      return out.is_object() && out.contains("target_url") && out.contains("payload");
    } catch (const std::exception&) {
      return false;
    }
  };

  server_->Post("/api/handles", [=, this](const httplib::Request& req, httplib::Response& res) {
    if (!authorized(req, res) || inject_fault(res.status)) return;
    json body;
    if (!parse(req, body)) {
      res.status = 400;
      return;
    }
    std::string handle;
    {
      std::lock_guard lock(mutex_);
      char suffix[32];
      std::snprintf(suffix, sizeof suffix, "SMS-%06llu", static_cast<unsigned long long>(++next_));
      handle = prefix_ + "/" + suffix;
      handles_[handle] = json{{"handle", handle}, {"target_url", body["target_url"]}, {"payload", body["payload"]}};
    }
    ++registrations_;
    res.status = 201;
    res.set_content(json{{"handle", handle}}.dump(), "application/json");
  });

  server_->Put(R"(/api/handles/(.+))", [=, this](const httplib::Request& req, httplib::Response& res) {
    if (!authorized(req, res) || inject_fault(res.status)) return;
    json body;
    if (!parse(req, body)) {
      res.status = 400;
      return;
    }
    std::lock_guard lock(mutex_);
    auto it = handles_.find(req.matches[1]);
    if (it == handles_.end()) {
      res.status = 404;
      return;
    }
    it->second["target_url"] = body["target_url"];
    it->second["payload"] = body["payload"];
    ++updates_;
    res.status = 204;
  });

  server_->Get(R"(/api/handles/(.+))", [=, this](const httplib::Request& req, httplib::Response& res) {
    if (!authorized(req, res) || inject_fault(res.status)) return;
    std::lock_guard lock(mutex_);
    auto it = handles_.find(req.matches[1]);
    ++resolves_;
    if (it == handles_.end()) {
      res.status = 404;
      return;
    }
    res.set_content(it->second.dump(), "application/json");
  });
}

MockHandleServer::~MockHandleServer() { stop(); }

int MockHandleServer::start(int port) {
  if (port == 0)
    port_ = server_->bind_to_any_port("127.0.0.1");
  else
    port_ = server_->bind_to_port("127.0.0.1", port) ? port : -1;
  if (port_ <= 0) throw std::runtime_error("mock handle server: cannot bind");
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port_;
}

void MockHandleServer::stop() {
  if (thread_.joinable()) {
    server_->stop();
    thread_.join();
  }
}

std::string MockHandleServer::endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }

void MockHandleServer::fail_next(int count, int status) {
  fault_status_ = status;
  faults_ = count;
}

bool MockHandleServer::inject_fault(int& status) {
  int n = faults_.load();
  while (n > 0) {
    if (faults_.compare_exchange_weak(n, n - 1)) {
      status = fault_status_;
      return true;
    }
  }
  return false;
}

std::optional<json> MockHandleServer::record(const std::string& handle) const {
  std::lock_guard lock(mutex_);
  auto it = handles_.find(handle);
  if (it == handles_.end()) return std::nullopt;
  return it->second;
}

std::size_t MockHandleServer::size() const {
  std::lock_guard lock(mutex_);
  return handles_.size();
}

}  // namespace sms::pid
