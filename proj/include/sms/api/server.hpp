#pragma once

#include <memory>
#include <string>
#include <thread>

#include "sms/api/service.hpp"

namespace httplib {
class Server;
}

namespace sms::api {

// Serves an ApiService over HTTP. Request bodies above `max_body` bytes are
// refused with 413 before reaching the service.
class HttpServer {
 public:
  HttpServer(ApiService& service, std::size_t max_body);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Port 0 picks a free port. Throws Error(conflict) if the address is taken.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void run();
  // run() on a background thread.
  void start();
  void stop();
  int port() const { return port_; }
  std::string url() const;

 private:
  ApiService& service_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  std::string host_;
  int port_ = -1;
};

}  // namespace sms::api
