#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "sms/storage/store.hpp"
#include "sms/vocabulary/vocabulary.hpp"

// Operations behind the smsctl subcommands, kept out of main() so tests can
// drive them directly.
namespace sms::cli {

// A seed bundle is a JSON object with optional sections
//   groups, accounts, terms, contacts, sites, platforms, devices,
//   configurations
// Records use the canonical field names without id or audit fields. Any
// string "@<category>/<term>" or "@<kind>/<natural key>" is replaced by the
// id of that vocabulary term or entity, e.g. "@manufacturer/Campbell
// Scientific" or "@device/ClimaVUE50-001".
struct SeedSummary {
  std::map<std::string, std::size_t> created;
  std::map<std::string, std::size_t> skipped;

  std::size_t total_created() const;
  nlohmann::json to_json() const;
};

// All or nothing: the whole bundle is committed as one journal line, or a
// ValidationFailed / Error propagates and the store is unchanged. Records
// whose natural key already exists are skipped.
SeedSummary seed(storage::Store& store, const nlohmann::json& bundle);

nlohmann::json read_json_file(const std::filesystem::path& path);

// Configuration by id or by label.
std::shared_ptr<const Entity> find_configuration(const storage::Store& store, const std::string& ref);

// Indented tree with one line per mounted node and its resolved position.
std::string render_state(const nlohmann::json& state);

// Accepted-term import; the format follows the extension (.ttl SKOS, anything
// else JSON lines).
vocabulary::ImportSummary import_vocabulary(storage::Store& store, const std::filesystem::path& path);

struct Settings {
  std::filesystem::path data_dir = "sms-data";
  std::string bind = "127.0.0.1";
  int port = 8080;
  std::string base_url;  // empty: derived from bind and port
  std::size_t blob_limit = storage::kDefaultBlobLimit;
  std::string handle_endpoint;
  std::string handle_token;
  std::string token_secret;

  std::string effective_base_url() const;
};

using EnvLookup = std::function<const char*(const char*)>;

// Defaults, then the JSON config file (same member names), then SMS_*
// environment variables. Command-line flags are applied by the caller.
Settings load_settings(const std::optional<std::filesystem::path>& config_file, const EnvLookup& env);

// The configured secret, or one kept in <data_dir>/token_secret (created on
// first use, mode 0600).
std::string token_secret_for(const Settings& settings);

}  // namespace sms::cli
