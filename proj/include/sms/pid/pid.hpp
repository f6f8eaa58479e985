#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "sms/core/model.hpp"
#include "sms/storage/store.hpp"

namespace sms::pid {

// Minimal handle-service API:
//   POST /api/handles            {"target_url", "payload"} -> 201 {"handle"}
//   PUT  /api/handles/{handle}   {"target_url", "payload"} -> 204
//   GET  /api/handles/{handle}                             -> 200 {"handle", "target_url", "payload"}
// Transport failures and 5xx answers raise Error(handle_service_unavailable).
class HandleService {
 public:
  virtual ~HandleService() = default;
  virtual std::string register_handle(const std::string& target_url, const nlohmann::json& payload) = 0;
  virtual void update_handle(const std::string& handle, const std::string& target_url,
                             const nlohmann::json& payload) = 0;
  virtual std::optional<nlohmann::json> resolve(const std::string& handle) = 0;
};

struct HandleServiceConfig {
  std::string endpoint;  // scheme://host[:port]
  std::string token;     // sent as a bearer token when non-empty
  std::chrono::milliseconds timeout{5000};
};

class HttpHandleService : public HandleService {
 public:
  explicit HttpHandleService(HandleServiceConfig config);
  std::string register_handle(const std::string& target_url, const nlohmann::json& payload) override;
  void update_handle(const std::string& handle, const std::string& target_url,
                     const nlohmann::json& payload) override;
  std::optional<nlohmann::json> resolve(const std::string& handle) override;

 private:
  HandleServiceConfig config_;
};

// Lookups the payload builder needs beyond the record itself.
struct PayloadContext {
  std::function<std::optional<std::string>(const TermRef&)> term_label;
  std::function<std::optional<Contact>(const EntityId&)> contact;
};

// Instrument-schema metadata of a device, platform or configuration. Empty
// fields are left out. Depends only on descriptive fields, so neither the
// version bump nor the pid written by minting changes it.
nlohmann::json schema_payload(const Entity& entity, const std::string& landing_page, const PayloadContext& ctx);

bool can_have_pid(EntityKind kind);

struct MintResult {
  storage::PidRecord record;
  bool already_minted = false;
};

class PidService {
 public:
  PidService(storage::Store& store, HandleService& service, std::string base_url);

  // Idempotent: a second call returns the stored record without contacting
  // the service. Concurrent calls for one entity are serialized.
  MintResult mint(const EntityId& entity, const storage::WriteContext& ctx = {});
  // Pushes the payload again if it changed. On service failure the record is
  // marked stale and the error rethrown.
  storage::PidRecord sync(const EntityId& entity, TimeInstant now = TimeInstant::now());

  nlohmann::json payload_for(const Entity& entity) const;

 private:
  std::shared_ptr<std::mutex> lock_for(const EntityId& id);

  storage::Store& store_;
  HandleService& service_;
  std::string base_url_;
  std::mutex locks_mutex_;
  std::map<EntityId, std::shared_ptr<std::mutex>> locks_;
};

}  // namespace sms::pid
