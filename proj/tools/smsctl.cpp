#include <CLI11.hpp>

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>

#include "sms/api/auth.hpp"
#include "sms/api/server.hpp"
#include "sms/api/service.hpp"
#include "sms/cli/admin.hpp"
#include "sms/core/errors.hpp"
#include "sms/pid/pid.hpp"

namespace {

using nlohmann::json;
using namespace sms;

constexpr int kFailure = 1;
constexpr int kUsage = 2;

// Thrown for bad arguments that CLI11 cannot see (timestamps, refs).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::string data_dir;
  std::string config;
  std::string output = "human";

  bool structured() const { return output == "structured"; }
};

cli::Settings settings_from(const Globals& g) {
  std::optional<std::filesystem::path> file;
  if (!g.config.empty()) file = g.config;
  auto s = cli::load_settings(file, [](const char* name) { return std::getenv(name); });
  if (!g.data_dir.empty()) s.data_dir = g.data_dir;
  return s;
}

std::unique_ptr<storage::Store> open_store(const cli::Settings& s, bool create) {
  if (!create && !std::filesystem::is_directory(s.data_dir))
    throw Error(ErrorCode::not_found, "no store at " + s.data_dir.string() + " (run smsctl init)");
  storage::StoreOptions o;
  o.data_dir = s.data_dir;
  o.blob_limit = s.blob_limit;
  return std::make_unique<storage::Store>(o);
}

void print_report(const ValidationReport& report) {
  for (const auto& v : report.violations)
    std::cerr << (v.warning ? "warning " : "error ") << v.path << " [" << v.code << "] " << v.message << "\n";
}

int cmd_init(const Globals& g) {
  auto s = settings_from(g);
  std::filesystem::create_directories(s.data_dir);
  auto store = open_store(s, true);
  cli::token_secret_for(s);
  if (g.structured()) {
    std::cout << json{{"data_dir", s.data_dir.string()}, {"journal_lines", store->journal_lines()}}.dump() << "\n";
  } else {
    std::cout << "store ready at " << s.data_dir.string() << "\n";
  }
  return 0;
}

int cmd_serve(const Globals& g, const std::string& bind, int port) {
  auto s = settings_from(g);
  if (!bind.empty()) s.bind = bind;
  if (port >= 0) s.port = port;

  // Block before any thread starts so only sigwait sees the signals.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  std::filesystem::create_directories(s.data_dir);
  auto store = open_store(s, true);
  std::unique_ptr<pid::HttpHandleService> handles;
  if (!s.handle_endpoint.empty()) handles = std::make_unique<pid::HttpHandleService>(
      pid::HandleServiceConfig{s.handle_endpoint, s.handle_token});

  api::ApiConfig config;
  config.base_url = s.effective_base_url();
  config.token_secret = cli::token_secret_for(s);
  api::ApiService service(*store, config, handles.get());
  // Multipart framing on top of the largest blob.
  api::HttpServer server(service, s.blob_limit + 64 * 1024);
  server.bind(s.bind, s.port);
  server.start();
  if (g.structured()) {
    std::cout << json{{"listening", server.url()}}.dump() << std::endl;
  } else {
    std::cout << "listening on " << server.url() << std::endl;
  }

  int sig = 0;
  sigwait(&signals, &sig);
  std::cerr << "signal " << sig << ", shutting down\n";
  server.stop();
  store->flush();
  return 0;
}

int cmd_seed(const Globals& g, const std::string& path) {
  auto s = settings_from(g);
  auto store = open_store(s, false);
  auto bundle = cli::read_json_file(path);
  auto counts_doc = cli::seed(*store, bundle).to_json();
  if (g.structured()) {
    std::cout << counts_doc.dump() << "\n";
  } else {
    for (const auto& [section, counts] : counts_doc.items())
      std::cout << section << ": " << counts["created"] << " created, " << counts["skipped"] << " skipped\n";
  }
  return 0;
}

int cmd_state(const Globals& g, const std::string& ref, const std::string& at_text) {
  auto at = at_text.empty() ? std::optional(TimeInstant::now()) : TimeInstant::try_parse(at_text);
  if (!at) throw UsageError("malformed timestamp '" + at_text + "'");
  auto s = settings_from(g);
  auto store = open_store(s, false);
  auto entity = cli::find_configuration(*store, ref);
  if (!entity) throw Error(ErrorCode::not_found, "no configuration " + ref);
  auto doc = api::state_document(*store, std::get<Configuration>(*entity), *at, [](const Entity&) { return true; });
  if (g.structured()) {
    std::cout << doc.dump(2) << "\n";
  } else {
    std::cout << cli::render_state(doc);
  }
  return 0;
}

int cmd_validate(const Globals& g) {
  auto s = settings_from(g);
  auto store = open_store(s, false);
  auto findings = store->validate_all();
  std::size_t errors = 0;
  json out = json::array();
  for (const auto& f : findings) {
    if (!f.violation.warning) ++errors;
    out.push_back({{"entity", f.entity.id.str()},
                   {"kind", to_string(f.entity.kind)},
                   {"path", f.violation.path},
                   {"code", f.violation.code},
                   {"message", f.violation.message},
                   {"severity", f.violation.warning ? "warning" : "error"}});
  }
  if (g.structured()) {
    std::cout << json{{"errors", errors}, {"warnings", findings.size() - errors}, {"findings", out}}.dump(2) << "\n";
  } else {
    for (const auto& f : out)
      std::cout << f["severity"].get<std::string>() << " " << f["kind"].get<std::string>() << " "
                << f["entity"].get<std::string>() << " " << f["path"].get<std::string>() << " ["
                << f["code"].get<std::string>() << "] " << f["message"].get<std::string>() << "\n";
    std::cout << errors << " error(s), " << findings.size() - errors << " warning(s)\n";
  }
  return errors == 0 ? 0 : kFailure;
}

int cmd_cv_import(const Globals& g, const std::string& path) {
  auto s = settings_from(g);
  auto store = open_store(s, false);
  auto summary = cli::import_vocabulary(*store, path);
  for (const auto& w : summary.warnings) std::cerr << "warning: " << w << "\n";
  json out{{"created", summary.created},
           {"updated", summary.updated},
           {"unchanged", summary.unchanged},
           {"skipped", summary.skipped}};
  if (g.structured()) {
    std::cout << out.dump() << "\n";
  } else {
    std::cout << summary.created << " created, " << summary.updated << " updated, " << summary.unchanged
              << " unchanged, " << summary.skipped << " skipped\n";
  }
  return 0;
}

int cmd_cv_export(const Globals& g, const std::string& path) {
  auto s = settings_from(g);
  auto store = open_store(s, false);
  auto ttl = store->vocabulary().export_skos(s.effective_base_url());
  if (path.empty() || path == "-") {
    std::cout << ttl;
    return 0;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::internal, "cannot write " + path);
  out << ttl;
  if (!out) throw Error(ErrorCode::internal, "cannot write " + path);
  if (!g.structured()) std::cerr << "wrote " << path << "\n";
  return 0;
}

struct AccountArgs {
  std::string username, password, email, given_name, family_name, organization;
  std::vector<std::string> groups, roles;
};

int cmd_account_create(const Globals& g, const AccountArgs& a) {
  auto s = settings_from(g);
  auto store = open_store(s, false);
  if (store->account_by_username(a.username)) throw Error(ErrorCode::conflict, "account " + a.username + " exists");
  storage::Account acc;
  acc.id = AccountId("u-" + a.username);
  acc.username = a.username;
  acc.email = a.email;
  acc.given_name = a.given_name;
  acc.family_name = a.family_name;
  acc.organization = a.organization;
  if (!a.password.empty()) acc.password_hash = api::hash_password(a.password);
  for (const auto& grp : a.groups) {
    if (!store->group(GroupId(grp))) throw Error(ErrorCode::not_found, "no group " + grp);
    acc.groups.insert(GroupId(grp));
  }
  for (const auto& r : a.roles) {
    auto role = storage::role_from_string(r);
    if (!role) throw UsageError("unknown role " + r);
    acc.roles.insert(*role);
  }
  acc.created_at = TimeInstant::now();
  store->put_account(acc);
  if (g.structured()) {
    std::cout << json{{"id", acc.id.str()}, {"username", acc.username}}.dump() << "\n";
  } else {
    std::cout << "created account " << acc.username << " (" << acc.id.str() << ")\n";
  }
  return 0;
}

int cmd_apikey_issue(const Globals& g, const std::string& username, const std::string& label) {
  auto s = settings_from(g);
  auto store = open_store(s, false);
  auto acc = store->account_by_username(username);
  if (!acc) throw Error(ErrorCode::not_found, "no account " + username);
  auto issued = api::issue_api_key(*store, acc->id, label);
  if (g.structured()) {
    std::cout << json{{"key_id", issued.key.key_id}, {"token", issued.token}}.dump() << "\n";
  } else {
    std::cout << issued.token << "\n";
  }
  return 0;
}

int cmd_group_create(const Globals& g, const std::string& id, const std::string& name) {
  auto s = settings_from(g);
  auto store = open_store(s, false);
  if (store->group(GroupId(id))) throw Error(ErrorCode::conflict, "group " + id + " exists");
  store->put_group({GroupId(id), name.empty() ? id : name});
  if (g.structured()) {
    std::cout << json{{"id", id}}.dump() << "\n";
  } else {
    std::cout << "created group " << id << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sensor metadata registry administration"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--data-dir", g.data_dir, "Store directory (default: SMS_DATA_DIR or ./sms-data)");
  app.add_option("--config", g.config, "JSON settings file")->check(CLI::ExistingFile);
  app.add_option("--output", g.output, "Output format")->check(CLI::IsMember({"human", "structured"}));

  std::function<int()> run;

  auto* init = app.add_subcommand("init", "Create or open the store");
  init->callback([&] { run = [&] { return cmd_init(g); }; });

  std::string bind;
  int port = -1;
  auto* serve = app.add_subcommand("serve", "Run the HTTP service until SIGINT/SIGTERM");
  serve->add_option("--bind", bind, "Listen address");
  serve->add_option("--port", port, "Listen port (0 picks a free one)")->check(CLI::Range(0, 65535));
  serve->callback([&] { run = [&] { return cmd_serve(g, bind, port); }; });

  std::string seed_path;
  auto* seed = app.add_subcommand("seed", "Load a seed bundle; existing records are skipped");
  seed->add_option("bundle", seed_path, "Seed bundle (JSON)")->required()->check(CLI::ExistingFile);
  seed->callback([&] { run = [&] { return cmd_seed(g, seed_path); }; });

  std::string state_ref, state_at;
  auto* state = app.add_subcommand("state", "Mount tree of a configuration at an instant");
  state->add_option("configuration", state_ref, "Configuration id or label")->required();
  state->add_option("--at", state_at, "RFC 3339 instant (default: now)");
  state->callback([&] { run = [&] { return cmd_state(g, state_ref, state_at); }; });

  auto* validate = app.add_subcommand("validate", "Re-check every record; exit 1 on errors");
  validate->callback([&] { run = [&] { return cmd_validate(g); }; });

  std::string cv_path;
  auto* cv = app.add_subcommand("cv", "Controlled vocabulary");
  cv->require_subcommand(1);
  auto* cv_import = cv->add_subcommand("import", "Upsert accepted terms from .ttl (SKOS) or .jsonl");
  cv_import->add_option("file", cv_path, "Input file")->required()->check(CLI::ExistingFile);
  cv_import->callback([&] { run = [&] { return cmd_cv_import(g, cv_path); }; });
  auto* cv_export = cv->add_subcommand("export", "Write the SKOS Turtle document");
  cv_export->add_option("file", cv_path, "Output file, - for stdout");
  cv_export->callback([&] { run = [&] { return cmd_cv_export(g, cv_path); }; });

  AccountArgs account_args;
  auto* account = app.add_subcommand("account", "Accounts");
  account->require_subcommand(1);
  auto* account_create = account->add_subcommand("create", "Create an account");
  account_create->add_option("username", account_args.username)->required();
  account_create->add_option("--password", account_args.password, "Password for token login");
  account_create->add_option("--email", account_args.email);
  account_create->add_option("--given-name", account_args.given_name);
  account_create->add_option("--family-name", account_args.family_name);
  account_create->add_option("--organization", account_args.organization);
  account_create->add_option("--group", account_args.groups, "Group membership (repeatable)");
  account_create->add_option("--role", account_args.roles, "member, curator or admin (repeatable)");
  account_create->callback([&] { run = [&] { return cmd_account_create(g, account_args); }; });

  std::string key_user, key_label;
  auto* apikey = app.add_subcommand("apikey", "API keys");
  apikey->require_subcommand(1);
  auto* apikey_issue = apikey->add_subcommand("issue", "Issue a key; the token is printed once");
  apikey_issue->add_option("username", key_user)->required();
  apikey_issue->add_option("--label", key_label);
  apikey_issue->callback([&] { run = [&] { return cmd_apikey_issue(g, key_user, key_label); }; });

  std::string group_id, group_name;
  auto* group = app.add_subcommand("group", "Groups");
  group->require_subcommand(1);
  auto* group_create = group->add_subcommand("create", "Create a group");
  group_create->add_option("id", group_id)->required();
  group_create->add_option("--name", group_name, "Display name");
  group_create->callback([&] { run = [&] { return cmd_group_create(g, group_id, group_name); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  try {
    return run();
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ValidationFailed& e) {
    std::cerr << "error: " << e.what() << "\n";
    print_report(e.report());
    return kFailure;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what();
    if (!e.detail().is_null()) std::cerr << " " << e.detail().dump();
    std::cerr << "\n";
    return kFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
}
