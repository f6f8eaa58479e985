#include <doctest.h>
#include <httplib.h>

#include <fcntl.h>
#include <signal.h>
#include <spawn.h>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "sms/api/service.hpp"
#include "sms/cli/admin.hpp"
#include "sms/core/errors.hpp"
#include "sms/vocabulary/turtle.hpp"
#include "support/oracles.hpp"
#include "support/records.hpp"

extern char** environ;

using namespace sms;
using namespace sms::testing;
using nlohmann::json;

namespace {

const std::filesystem::path kBundle = SMS_DEMO_BUNDLE;
const std::string kSmsctl = SMSCTL_PATH;

json demo_bundle() { return cli::read_json_file(kBundle); }

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

// Runs smsctl with stdout/stderr captured to files in `dir`.
Run smsctl(const std::filesystem::path& dir, std::vector<std::string> args) {
  auto out_path = dir / "stdout.txt";
  auto err_path = dir / "stderr.txt";
  posix_spawn_file_actions_t fa;
  posix_spawn_file_actions_init(&fa);
  posix_spawn_file_actions_addopen(&fa, 1, out_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  posix_spawn_file_actions_addopen(&fa, 2, err_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  std::vector<char*> argv{const_cast<char*>(kSmsctl.c_str())};
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);
  pid_t pid = 0;
  REQUIRE(posix_spawn(&pid, kSmsctl.c_str(), &fa, nullptr, argv.data(), environ) == 0);
  posix_spawn_file_actions_destroy(&fa);
  int status = 0;
  waitpid(pid, &status, 0);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status), slurp(out_path), slurp(err_path)};
}

std::map<std::string, std::size_t> census(const json& bundle) {
  std::map<std::string, std::size_t> n;
  for (const auto& [k, v] : bundle.items()) n[k] = v.size();
  return n;
}

// child id -> parent id ("" for the root) from a state document.
void edges_of(const json& nodes, const std::string& parent, std::map<std::string, std::string>& out) {
  for (const auto& n : nodes) {
    out[n["id"].get<std::string>()] = parent;
    edges_of(n["children"], n["id"].get<std::string>(), out);
  }
}

std::size_t depth_of(const json& nodes) {
  std::size_t d = 0;
  for (const auto& n : nodes) d = std::max(d, 1 + depth_of(n["children"]));
  return d;
}

Configuration demo_station(const storage::Store& s) {
  auto e = cli::find_configuration(s, "Meadow climate station");
  REQUIRE(e);
  return std::get<Configuration>(*e);
}

std::set<std::tuple<std::string, std::string, std::string>> accepted_terms(const storage::Store& s) {
  std::set<std::tuple<std::string, std::string, std::string>> out;
  for (const auto& t : s.vocabulary().all_terms())
    if (t.status == vocabulary::TermStatus::accepted)
      out.insert({std::string(vocabulary::to_string(t.category)), t.term, t.definition});
  return out;
}

}  // namespace

TEST_CASE("seed loads the demo bundle and reruns as a no-op") {
  TempDir dir;
  auto bundle = demo_bundle();
  auto expected = census(bundle);
  {
    storage::Store s(dir.options());
    auto first = cli::seed(s, bundle);
    CHECK(first.created == expected);
    for (const auto& [_, n] : first.skipped) CHECK(n == 0);
    CHECK(s.count(EntityKind::device) == expected["devices"]);
    CHECK(s.count(EntityKind::platform) == expected["platforms"]);
    CHECK(s.count(EntityKind::configuration) == expected["configurations"]);
    CHECK(s.count(EntityKind::site) == expected["sites"]);
    // Seeding does not add contacts beyond the bundle's own.
    CHECK(s.count(EntityKind::contact) == expected["contacts"]);
    CHECK(s.accounts().size() == expected["accounts"]);
    CHECK(s.vocabulary().size() == expected["terms"]);
    CHECK(s.validate_all().empty());

    auto device = s.find_by_natural_key(EntityKind::device, "ClimaVUE50-001");
    REQUIRE(device);
    const auto& mq = std::get<Device>(*device).measured_quantities.at(0);
    CHECK(*mq.range_min == -50.0);
    CHECK(*mq.range_max == 60.0);
    CHECK(*mq.accuracy == 0.6);
    CHECK(*mq.resolution == 0.1);
    CHECK(s.vocabulary().get_term(mq.unit)->term == "°C");
    CHECK(s.vocabulary().get_term(*std::get<Device>(*device).manufacturer)->term == "Campbell Scientific");

    auto lines = s.journal_lines();
    auto second = cli::seed(s, bundle);
    CHECK(second.total_created() == 0);
    CHECK(second.skipped == expected);
    CHECK(s.journal_lines() == lines);
  }
  // Survives a reopen.
  storage::Store r(dir.options());
  CHECK(r.count(EntityKind::device) == expected["devices"]);
  CHECK(cli::seed(r, bundle).total_created() == 0);
}

TEST_CASE("a bundle with overlapping mounts loads nothing") {
  auto base = demo_bundle();

  SUBCASE("across configurations") {
    json second = base["configurations"][0];
    second["label"] = "Second station";
    second["location_actions"] = json::array();
    second["mount_actions"] = json::array({base["configurations"][0]["mount_actions"][1]});
    second["mount_actions"][0].erase("parent");
    second["mount_actions"][0]["interval"] = {{"begin", "2023-05-01T00:00:00Z"}, {"end", "2023-05-02T00:00:00Z"}};
    base["configurations"].push_back(second);
  }
  SUBCASE("within one configuration") {
    auto dup = base["configurations"][0]["mount_actions"][3];
    dup["interval"] = {{"begin", "2023-09-30T00:00:00Z"}};
    base["configurations"][0]["mount_actions"].push_back(dup);
  }

  TempDir dir;
  storage::Store s(dir.options());
  auto lines = s.journal_lines();
  CHECK_THROWS_AS(cli::seed(s, base), Error);
  CHECK(s.journal_lines() == lines);
  CHECK(s.vocabulary().size() == 0);
  CHECK(s.accounts().empty());
  CHECK(s.groups().empty());
  for (auto k : {EntityKind::device, EntityKind::platform, EntityKind::configuration, EntityKind::contact,
                 EntityKind::site})
    CHECK(s.count(k, true) == 0);
}

TEST_CASE("seed rejects malformed bundles with a pointer") {
  storage::Store s(memory_store(false));
  auto code_and_pointer = [&](const json& b) {
    try {
      cli::seed(s, b);
    } catch (const Error& e) {
      return std::pair(e.code(), e.detail().value("pointer", std::string()));
    }
    return std::pair(ErrorCode::internal, std::string("no error"));
  };
  CHECK(code_and_pointer(json{{"widgets", json::array()}}) == std::pair(ErrorCode::bad_request, std::string("/widgets")));
  CHECK(code_and_pointer(json{{"devices", json::array({json{{"short_name", "X"}, {"manufacturer", "@manufacturer/Nobody"}}})}}) ==
        std::pair(ErrorCode::bad_request, std::string("/devices/0/manufacturer")));
  CHECK(code_and_pointer(json{{"devices", json::array({json{{"description", "no key"}}})}}) ==
        std::pair(ErrorCode::bad_request, std::string("/devices/0/short_name")));
  CHECK(s.journal_lines() == 0);
}

TEST_CASE("state of the demo station agrees with event replay") {
  storage::Store s(memory_store(false));
  cli::seed(s, demo_bundle());
  auto cfg = demo_station(s);
  auto all = [](const Entity&) { return true; };

  std::vector<std::string> probes{"2023-01-01T00:00:00Z", "2023-04-01T08:00:00Z", "2023-04-01T08:59:59Z",
                                  "2023-04-01T09:00:00Z", "2023-06-01T00:00:00Z", "2023-09-30T23:59:59Z",
                                  "2023-10-01T00:00:00Z", "2030-01-01T00:00:00Z"};
  for (const auto& p : probes) {
    auto at = TimeInstant::parse(p);
    auto doc = api::state_document(s, cfg, at, all);
    std::map<std::string, std::string> got;
    edges_of(doc["tree"], "", got);
    std::map<std::string, std::string> want;
    for (const auto& [child, edge] : replay_state(cfg.mount_actions, at))
      want[child.str()] = edge.parent ? edge.parent->str() : "";
    CHECK_MESSAGE(got == want, p);
  }

  auto inside = api::state_document(s, cfg, TimeInstant::parse("2023-06-01T00:00:00Z"), all);
  CHECK(depth_of(inside["tree"]) == 2);
  auto text = cli::render_state(inside);
  CHECK(text.find("- Tripod-01 [platforms") != std::string::npos);
  CHECK(text.find("  - ClimaVUE50-001 [devices") != std::string::npos);
  CHECK(text.find("lat 51.3515 lon 12.432 h 118 + (0, 0, 2) m") != std::string::npos);

  auto before = api::state_document(s, cfg, TimeInstant::parse("2023-01-01T00:00:00Z"), all);
  CHECK(before["tree"].empty());
  CHECK(cli::render_state(before).find("(nothing mounted)") != std::string::npos);
}

TEST_CASE("cv export and import round trip") {
  storage::Store src(memory_store(false));
  cli::seed(src, demo_bundle());
  TempDir dir;
  auto ttl = dir.path() / "cv.ttl";
  write_file(ttl, src.vocabulary().export_skos("https://sms.example"));

  storage::Store dst(memory_store(false));
  auto summary = cli::import_vocabulary(dst, ttl);
  CHECK(summary.created == src.vocabulary().size());
  CHECK(accepted_terms(dst) == accepted_terms(src));
  // Importing again changes nothing.
  auto again = cli::import_vocabulary(dst, ttl);
  CHECK(again.created == 0);
  CHECK(again.unchanged == src.vocabulary().size());

  // Empty vocabulary: schemes only.
  storage::Store empty(memory_store(false));
  std::size_t concepts = 0, schemes = 0;
  for (const auto& t : vocabulary::parse_turtle(empty.vocabulary().export_skos("https://sms.example"))) {
    if (t.predicate.value != vocabulary::kRdfType) continue;
    concepts += t.object.value == std::string(vocabulary::kSkos) + "Concept";
    schemes += t.object.value == std::string(vocabulary::kSkos) + "ConceptScheme";
  }
  CHECK(concepts == 0);
  CHECK(schemes == 10);

  // Duplicate rows in JSON lines: the second is skipped with a warning.
  auto jsonl = dir.path() / "terms.jsonl";
  write_file(jsonl,
             "# units\n"
             "{\"category\":\"unit\",\"term\":\"K\",\"definition\":\"kelvin\"}\n"
             "\n"
             "{\"category\":\"unit\",\"term\":\"k\",\"definition\":\"again\"}\n");
  storage::Store fresh(memory_store(false));
  auto dup = cli::import_vocabulary(fresh, jsonl);
  CHECK(dup.created == 1);
  CHECK(dup.skipped == 1);
  REQUIRE(dup.warnings.size() == 1);
  CHECK(dup.warnings[0].find("line 4") != std::string::npos);

  write_file(jsonl, "{\"category\":\"unit\",\"term\":\"K\"}\n{\"category\":\"nonsense\",\"term\":\"x\"}\n");
  try {
    cli::import_vocabulary(fresh, jsonl);
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("settings come from defaults, file, then environment") {
  TempDir dir;
  std::map<std::string, std::string> env;
  auto lookup = [&](const char* name) -> const char* {
    auto it = env.find(name);
    return it == env.end() ? nullptr : it->second.c_str();
  };
  auto d = cli::load_settings(std::nullopt, lookup);
  CHECK(d.port == 8080);
  CHECK(d.bind == "127.0.0.1");
  CHECK(d.effective_base_url() == "http://127.0.0.1:8080");
  CHECK(d.blob_limit == storage::kDefaultBlobLimit);

  auto file = dir.path() / "sms.json";
  write_file(file, R"({"port": 9000, "data_dir": "/srv/sms", "base_url": "https://sms.example", "blob_limit": 1024})");
  auto f = cli::load_settings(file, lookup);
  CHECK(f.port == 9000);
  CHECK(f.data_dir == "/srv/sms");
  CHECK(f.effective_base_url() == "https://sms.example");
  CHECK(f.blob_limit == 1024);

  env["SMS_PORT"] = "9100";
  env["SMS_HANDLE_ENDPOINT"] = "http://127.0.0.1:1";
  auto e = cli::load_settings(file, lookup);
  CHECK(e.port == 9100);
  CHECK(e.data_dir == "/srv/sms");
  CHECK(e.handle_endpoint == "http://127.0.0.1:1");

  env["SMS_PORT"] = "eighty";
  CHECK_THROWS_AS(cli::load_settings(file, lookup), Error);
  env.erase("SMS_PORT");
  write_file(file, R"({"prot": 1})");
  CHECK_THROWS_AS(cli::load_settings(file, lookup), Error);

  cli::Settings s;
  s.data_dir = dir.path() / "data";
  auto secret = cli::token_secret_for(s);
  CHECK(secret.size() == 64);
  CHECK(cli::token_secret_for(s) == secret);
  struct stat st {};
  REQUIRE(::stat((s.data_dir / "token_secret").c_str(), &st) == 0);
  CHECK((st.st_mode & 0777) == 0600);
  s.token_secret = "configured";
  CHECK(cli::token_secret_for(s) == "configured");
}

TEST_CASE("smsctl exit codes") {
  TempDir dir;
  auto data = (dir.path() / "data").string();
  auto base = std::vector<std::string>{"--data-dir", data};
  auto with = [&](std::vector<std::string> more) {
    auto v = base;
    v.insert(v.end(), more.begin(), more.end());
    return v;
  };

  CHECK(smsctl(dir.path(), with({"validate"})).code == 1);  // not initialized
  CHECK(smsctl(dir.path(), with({"init"})).code == 0);
  auto empty = smsctl(dir.path(), with({"validate"}));
  CHECK(empty.code == 0);
  CHECK(empty.out.find("0 error(s)") != std::string::npos);

  auto seeded = smsctl(dir.path(), with({"--output", "structured", "seed", kBundle.string()}));
  REQUIRE(seeded.code == 0);
  auto counts = json::parse(seeded.out);
  for (const auto& [k, n] : census(demo_bundle())) CHECK(counts[k]["created"] == n);
  CHECK(smsctl(dir.path(), with({"seed", kBundle.string()})).out.find("devices: 0 created, 3 skipped") !=
        std::string::npos);

  auto tree = smsctl(dir.path(), with({"state", "Meadow climate station", "--at", "2023-06-01T00:00:00Z"}));
  CHECK(tree.code == 0);
  CHECK(tree.out.find("  - ClimaVUE50-001") != std::string::npos);
  auto structured = smsctl(dir.path(), with({"--output", "structured", "state", "Meadow climate station", "--at",
                                              "2023-06-01T00:00:00Z"}));
  CHECK(depth_of(json::parse(structured.out)["tree"]) == 2);

  auto bad_time = smsctl(dir.path(), with({"state", "Meadow climate station", "--at", "June 1st"}));
  CHECK(bad_time.code == 2);
  CHECK(bad_time.out.empty());
  CHECK(bad_time.err.find("malformed timestamp") != std::string::npos);
  CHECK(smsctl(dir.path(), with({"state", "No such station"})).code == 1);
  CHECK(smsctl(dir.path(), with({"frobnicate"})).code == 2);
  CHECK(smsctl(dir.path(), with({"--output", "xml", "validate"})).code == 2);
  CHECK(smsctl(dir.path(), with({"seed"})).code == 2);

  auto broken = dir.path() / "broken.json";
  write_file(broken, R"({"devices": [{"short_name": "X", "manufacturer": "@manufacturer/Nobody"}]})");
  auto rejected = smsctl(dir.path(), with({"seed", broken.string()}));
  CHECK(rejected.code == 1);
  CHECK(rejected.err.find("/devices/0/manufacturer") != std::string::npos);

  CHECK(smsctl(dir.path(), with({"group", "create", "g-extra", "--name", "Extra"})).code == 0);
  CHECK(smsctl(dir.path(), with({"group", "create", "g-extra"})).code == 1);
  CHECK(smsctl(dir.path(), with({"account", "create", "erin", "--password", "pw", "--group", "g-extra", "--role",
                                 "curator"}))
            .code == 0);
  CHECK(smsctl(dir.path(), with({"account", "create", "fred", "--group", "g-missing"})).code == 1);
  CHECK(smsctl(dir.path(), with({"account", "create", "gina", "--role", "overlord"})).code == 2);
  auto key = smsctl(dir.path(), with({"apikey", "issue", "erin", "--label", "ci"}));
  CHECK(key.code == 0);
  CHECK(key.out.find('.') != std::string::npos);
  CHECK(smsctl(dir.path(), with({"apikey", "issue", "nobody"})).code == 1);

  auto ttl = (dir.path() / "cv.ttl").string();
  CHECK(smsctl(dir.path(), with({"cv", "export", ttl})).code == 0);
  auto fresh = (dir.path() / "fresh").string();
  CHECK(smsctl(dir.path(), {"--data-dir", fresh, "init"}).code == 0);
  auto imported = smsctl(dir.path(), {"--data-dir", fresh, "--output", "structured", "cv", "import", ttl});
  CHECK(imported.code == 0);
  CHECK(json::parse(imported.out)["created"] == census(demo_bundle())["terms"]);

  CHECK(smsctl(dir.path(), with({"validate"})).code == 0);
}

TEST_CASE("smsctl validate reports injected overlapping mounts") {
  TempDir dir;
  auto data = dir.path() / "data";
  std::string second_id;
  {
    storage::StoreOptions o;
    o.data_dir = data;
    storage::Store s(o);
    cli::seed(s, demo_bundle());
    json cfg = json::parse(R"({"label": "Shadow station", "visibility": "public", "owner_group": "g-climate"})");
    auto bundle = json{{"configurations", json::array({cfg})}};
    cli::seed(s, bundle);
    second_id = info_of(*s.find_by_natural_key(EntityKind::configuration, "Shadow station")).id.str();
  }
  // Hand-edit the journal: mount the station's tripod in the second
  // configuration while it is still on the first.
  std::vector<json> lines;
  {
    std::ifstream in(data / "journal.jsonl");
    for (std::string l; std::getline(in, l);) lines.push_back(json::parse(l));
  }
  json shadow, mount;
  for (const auto& line : lines)
    for (const auto& rec : line["records"]) {
      if (rec.value("t", "") != "entity") continue;
      const auto& e = rec["entity"];
      if (e["id"] == second_id) shadow = e;
      if (e.value("label", "") == "Meadow climate station") mount = e["mount_actions"][0];
    }
  REQUIRE(shadow.is_object());
  REQUIRE(mount.is_object());
  mount["id"] = "m999";
  mount["interval"] = {{"begin", "2023-05-01T00:00:00Z"}, {"end", "2023-05-02T00:00:00Z"}};
  shadow["mount_actions"].push_back(mount);
  shadow["version"] = shadow["version"].get<int>() + 1;
  {
    std::ofstream out(data / "journal.jsonl", std::ios::app);
    out << json{{"records", {{{"t", "entity"}, {"entity", shadow}}}}, {"seq", 9999}}.dump() << "\n";
  }

  auto r = smsctl(dir.path(), {"--data-dir", data.string(), "validate"});
  CHECK(r.code == 1);
  CHECK(r.out.find("error configuration " + second_id) != std::string::npos);
  CHECK(r.out.find("[availability]") != std::string::npos);
  auto structured = smsctl(dir.path(), {"--data-dir", data.string(), "--output", "structured", "validate"});
  CHECK(structured.code == 1);
  CHECK(json::parse(structured.out)["errors"].get<int>() >= 1);
}

TEST_CASE("smsctl serve lifecycle") {
  TempDir dir;
  auto data = (dir.path() / "data").string();
  REQUIRE(smsctl(dir.path(), {"--data-dir", data, "init"}).code == 0);
  REQUIRE(smsctl(dir.path(), {"--data-dir", data, "seed", kBundle.string()}).code == 0);

  int out_pipe[2];
  REQUIRE(pipe(out_pipe) == 0);
  posix_spawn_file_actions_t fa;
  posix_spawn_file_actions_init(&fa);
  posix_spawn_file_actions_adddup2(&fa, out_pipe[1], 1);
  posix_spawn_file_actions_addclose(&fa, out_pipe[0]);
  auto err_path = dir.path() / "serve.err";
  posix_spawn_file_actions_addopen(&fa, 2, err_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  std::vector<std::string> args{kSmsctl, "--data-dir", data, "serve", "--port", "0"};
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);
  pid_t pid = 0;
  REQUIRE(posix_spawn(&pid, kSmsctl.c_str(), &fa, nullptr, argv.data(), environ) == 0);
  posix_spawn_file_actions_destroy(&fa);
  close(out_pipe[1]);

  std::string line;
  char c = 0;
  while (read(out_pipe[0], &c, 1) == 1 && c != '\n') line += c;
  close(out_pipe[0]);
  const std::string prefix = "listening on http://127.0.0.1:";
  REQUIRE_MESSAGE(line.rfind(prefix, 0) == 0, line);
  int port = std::stoi(line.substr(prefix.size()));

  httplib::Client client("127.0.0.1", port);
  auto health = client.Get("/healthz");
  REQUIRE(health);
  CHECK(health->status == 200);
  auto devices = client.Get("/devices?filter[short_name]=ClimaVUE50-001");
  REQUIRE(devices);
  CHECK(json::parse(devices->body)["data"].size() == 1);

  // Same port while it is held: startup fails.
  auto other = (dir.path() / "other").string();
  auto busy = smsctl(dir.path(), {"--data-dir", other, "serve", "--port", std::to_string(port)});
  CHECK(busy.code != 0);
  CHECK(busy.err.find("cannot bind") != std::string::npos);

  kill(pid, SIGTERM);
  int status = 0;
  waitpid(pid, &status, 0);
  CHECK(WIFEXITED(status));
  CHECK(WEXITSTATUS(status) == 0);

  // The store is released and intact after shutdown.
  CHECK(smsctl(dir.path(), {"--data-dir", data, "validate"}).code == 0);
}
