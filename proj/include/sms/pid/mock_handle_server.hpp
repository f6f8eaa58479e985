#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

namespace httplib {
class Server;
}

namespace sms::pid {

// In-process handle service speaking the HandleService wire format, with
// call counters and fault injection.
class MockHandleServer {
 public:
  explicit MockHandleServer(std::string prefix = "21.T11998", std::string token = {});
  ~MockHandleServer();
  MockHandleServer(const MockHandleServer&) = delete;
  MockHandleServer& operator=(const MockHandleServer&) = delete;

  // Binds 127.0.0.1 on `port` (0 = any free port) and serves on a thread.
  int start(int port = 0);
  void stop();
  std::string endpoint() const;

  // The next `count` requests answer with `status` and change nothing.
  void fail_next(int count, int status = 500);

  int registrations() const { return registrations_; }
  int updates() const { return updates_; }
  int resolves() const { return resolves_; }
  std::optional<nlohmann::json> record(const std::string& handle) const;
  std::size_t size() const;

 private:
  bool inject_fault(int& status);

  std::string prefix_;
  std::string token_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> registrations_{0}, updates_{0}, resolves_{0};
  std::atomic<int> faults_{0};
  std::atomic<int> fault_status_{500};
  mutable std::mutex mutex_;
  std::map<std::string, nlohmann::json> handles_;
  std::uint64_t next_ = 0;
};

}  // namespace sms::pid
