#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "sms/api/auth.hpp"
#include "sms/api/http.hpp"
#include "sms/pid/pid.hpp"
#include "sms/storage/store.hpp"

namespace sms::api {

struct ApiConfig {
  std::string base_url = "http://localhost:8080";
  // Secret of the bundled token issuer; empty disables password login and
  // bearer tokens unless a verifier is supplied.
  std::string token_secret;
  std::chrono::seconds token_ttl = std::chrono::hours(8);
  std::size_t default_page_size = 25;
  std::size_t max_page_size = 1000;
};

// The mount tree of `configuration` at `at` with resolved positions; names of
// entities failing `readable` are withheld.
nlohmann::json state_document(const storage::Store& store, const Configuration& configuration, TimeInstant at,
                              const std::function<bool(const Entity&)>& readable);

// Request dispatcher for every resource endpoint. Thread-safe: requests share
// nothing but the store, which does its own locking.
class ApiService {
 public:
  // `handles` may be null; PID endpoints then answer 502.
  ApiService(storage::Store& store, ApiConfig config, pid::HandleService* handles = nullptr,
             std::shared_ptr<const TokenVerifier> verifier = nullptr);
  ~ApiService();

  HttpResponse handle(const HttpRequest& request);

  // Bundled issuer, if a token secret was configured.
  const LocalTokenIssuer* issuer() const { return issuer_.get(); }
  const ApiConfig& config() const { return config_; }
  storage::Store& store() { return store_; }

  Principal authenticate(const HttpRequest& request) const;
  // The contact linked to the principal's account, created from the account
  // profile on first use.
  std::optional<EntityId> contact_for(const Principal& principal);

 private:
  struct Context;
  HttpResponse route(Context& cx);

  storage::Store& store_;
  ApiConfig config_;
  std::shared_ptr<const LocalTokenIssuer> issuer_;
  std::shared_ptr<const TokenVerifier> verifier_;
  std::unique_ptr<Authenticator> authenticator_;
  std::unique_ptr<pid::PidService> pids_;

  std::mutex contacts_mutex_;
  std::map<AccountId, EntityId> contacts_;
};

}  // namespace sms::api
