#include "sms/storage/store.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "sms/core/codec.hpp"
#include "sms/core/errors.hpp"
#include "sms/core/validate.hpp"

namespace sms::storage {

using nlohmann::json;
using vocabulary::Category;
using vocabulary::RefState;

namespace {

constexpr const char* kFormat = "sms-store 1";

struct EntitySlot {
  std::shared_ptr<const Entity> current;
  // Shared between state copies; replaced, never mutated in place.
  std::shared_ptr<const std::vector<StoredRevision>> history;
};

struct TermUse {
  std::string path;
  TermRef id;
  Category category;
};

void uses_of(const std::vector<ContactRole>& cs, std::vector<TermUse>& out) {
  for (std::size_t i = 0; i < cs.size(); ++i)
    out.push_back({"/contacts/" + std::to_string(i) + "/role", cs[i].role, Category::contact_role});
}

void uses_of(const std::vector<Parameter>& ps, std::vector<TermUse>& out) {
  for (std::size_t i = 0; i < ps.size(); ++i)
    if (ps[i].unit) out.push_back({"/parameters/" + std::to_string(i) + "/unit", *ps[i].unit, Category::unit});
}

void uses_of(const std::vector<GenericAction>& as, std::vector<TermUse>& out) {
  for (std::size_t i = 0; i < as.size(); ++i)
    out.push_back({"/actions/" + std::to_string(i) + "/kind", as[i].kind, Category::action_type});
}

void opt_use(const std::optional<TermRef>& t, std::string path, Category c, std::vector<TermUse>& out) {
  if (t) out.push_back({std::move(path), *t, c});
}

// Every vocabulary reference of a record with the category it must belong to.
std::vector<TermUse> term_uses(const Entity& e) {
  std::vector<TermUse> out;
  if (const auto* d = std::get_if<Device>(&e)) {
    opt_use(d->device_type, "/device_type", Category::equipment_type, out);
    opt_use(d->manufacturer, "/manufacturer", Category::manufacturer, out);
    for (std::size_t i = 0; i < d->measured_quantities.size(); ++i) {
      const auto& q = d->measured_quantities[i];
      auto p = "/measured_quantities/" + std::to_string(i);
      out.push_back({p + "/compartment", q.compartment, Category::compartment});
      out.push_back({p + "/sampling_media", q.sampling_media, Category::sampling_media});
      out.push_back({p + "/quantity", q.quantity, Category::measured_quantity});
      out.push_back({p + "/unit", q.unit, Category::unit});
      opt_use(q.accuracy_unit, p + "/accuracy_unit", Category::unit, out);
      opt_use(q.resolution_unit, p + "/resolution_unit", Category::unit, out);
    }
  } else if (const auto* p = std::get_if<Platform>(&e)) {
    opt_use(p->platform_type, "/platform_type", Category::platform_type, out);
    opt_use(p->manufacturer, "/manufacturer", Category::manufacturer, out);
  } else if (const auto* s = std::get_if<Site>(&e)) {
    opt_use(s->usage, "/usage", Category::site_usage, out);
  }
  if (const auto* cs = contacts_of(e)) uses_of(*cs, out);
  if (const auto* ps = parameters_of(e)) uses_of(*ps, out);
  if (const auto* as = actions_of(e)) uses_of(*as, out);
  // Empty refs are reported by record validation.
  std::erase_if(out, [](const TermUse& u) { return u.id.empty(); });
  return out;
}

std::string natural_key_path(EntityKind k) {
  switch (k) {
    case EntityKind::device:
    case EntityKind::platform:
      return "/short_name";
    case EntityKind::configuration:
    case EntityKind::site:
      return "/label";
    case EntityKind::contact:
      return "/email";
  }
  return "";
}

void fill_id(EntityId& id, Transaction& tx, char prefix) {
  if (id.empty()) id = tx.next_id(prefix);
}

void assign_nested_ids(Entity& e, Transaction& tx) {
  if (auto* d = std::get_if<Device>(&e))
    for (auto& q : d->measured_quantities) fill_id(q.id, tx, 'q');
  if (auto* c = std::get_if<Configuration>(&e)) {
    for (auto& m : c->mount_actions) fill_id(m.id, tx, 'm');
    for (auto& l : c->location_actions) fill_id(l.id, tx, 'l');
  }
  if (auto* ps = parameters_of(e))
    for (auto& p : *ps) fill_id(p.id, tx, 'r');
  if (auto* as = attachments_of(e))
    for (auto& a : *as) fill_id(a.id, tx, 'a');
  if (auto* as = actions_of(e))
    for (auto& a : *as) fill_id(a.id, tx, 'g');
}

std::uint64_t numeric_suffix(const std::string& id) {
  if (id.size() < 2) return 0;
  std::uint64_t n = 0;
  for (std::size_t i = 1; i < id.size(); ++i) {
    if (id[i] < '0' || id[i] > '9') return 0;
    n = n * 10 + static_cast<std::uint64_t>(id[i] - '0');
  }
  return n;
}

struct TemporalProblem {
  std::string path;
  std::string message;
  json detail;
};

}  // namespace

struct Transaction::State {
  std::map<EntityId, EntitySlot> entities;
  std::map<std::pair<EntityKind, std::string>, EntityId> natural;  // live records only
  std::map<EntityId, std::vector<temporal::PlacedMount>> mounts_by_child;
  std::map<GroupId, Group> groups;
  std::map<AccountId, Account> accounts;
  std::map<std::string, ApiKey, std::less<>> api_keys;
  std::map<EntityId, PidRecord> pids;

  // Staged transactions only.
  std::vector<json> pending;
  std::vector<json> vocab_records;
  std::map<EntityId, vocabulary::VocabularyTerm> staged_terms;
  std::set<EntityId> touched;

  const Entity* find(const EntityId& id) const {
    auto it = entities.find(id);
    return it == entities.end() ? nullptr : it->second.current.get();
  }

  void apply_entity(std::shared_ptr<const Entity> e, StoredRevision rev) {
    const auto& info = info_of(*e);
    auto& slot = entities[info.id];
    if (slot.current) {
      const auto& old = *slot.current;
      auto key = std::pair{kind_of(old), natural_key(old)};
      if (auto it = natural.find(key); it != natural.end() && it->second == info.id) natural.erase(it);
      if (const auto* c = std::get_if<Configuration>(&old)) {
        for (const auto& m : c->mount_actions) {
          auto it = mounts_by_child.find(m.child.id);
          if (it == mounts_by_child.end()) continue;
          std::erase_if(it->second, [&](const auto& pm) { return pm.configuration == info.id; });
          if (it->second.empty()) mounts_by_child.erase(it);
        }
      }
    }
    if (!info.archived) natural[{kind_of(*e), natural_key(*e)}] = info.id;
    if (const auto* c = std::get_if<Configuration>(e.get())) {
      for (const auto& m : c->mount_actions) mounts_by_child[m.child.id].push_back({info.id, m});
    }
    auto hist = slot.history ? std::make_shared<std::vector<StoredRevision>>(*slot.history)
                             : std::make_shared<std::vector<StoredRevision>>();
    rev.warnings.clear();
    hist->push_back(std::move(rev));
    slot.history = std::move(hist);
    slot.current = std::move(e);
  }

  void apply_aux(const json& rec) {
    const auto& t = rec.at("t").get_ref<const std::string&>();
    if (t == "group") {
      auto g = decode_group(rec.at("group"));
      groups[g.id] = g;
    } else if (t == "account") {
      auto a = decode_account(rec.at("account"));
      accounts[a.id] = a;
    } else if (t == "apikey") {
      auto k = decode_api_key(rec.at("apikey"));
      api_keys[k.key_id] = k;
    } else if (t == "pid") {
      auto p = decode_pid(rec.at("pid"));
      pids[p.entity.id] = p;
    } else {
      throw Error(ErrorCode::inconsistent_state, "unknown journal record type '" + t + "'");
    }
  }
};

namespace {

StoredRevision revision_of(const Entity& e, std::string payload) {
  const auto& info = info_of(e);
  return StoredRevision{info.id, kind_of(e), info.version, std::move(payload), info.updated_at, info.updated_by, {}};
}

// Availability, containment and cycle checks for a configuration.
std::vector<TemporalProblem> temporal_problems(const Transaction::State& s, const Configuration& c, bool first_only) {
  std::vector<TemporalProblem> out;
  const auto& ms = c.mount_actions;
  for (std::size_t i = 0; i < ms.size(); ++i) {
    const auto& m = ms[i];
    auto path = "/mount_actions/" + std::to_string(i);
    std::vector<temporal::PlacedMount> others;
    if (auto it = s.mounts_by_child.find(m.child.id); it != s.mounts_by_child.end()) {
      for (const auto& pm : it->second)
        if (pm.configuration != c.info.id) others.push_back(pm);
    }
    for (std::size_t j = 0; j < ms.size(); ++j)
      if (j != i && ms[j].child.id == m.child.id) others.push_back({c.info.id, ms[j]});
    auto avail = temporal::check_device_availability(m.child.id, m.interval, others);
    if (const auto* hit = std::get_if<temporal::MountConflict>(&avail)) {
      out.push_back({path,
                     to_string(m.child) + " is already mounted in " + hit->configuration.str() + " from " +
                         hit->mount.interval.begin.to_string(),
                     json{{"kind", "availability"},
                          {"child", encode(m.child)},
                          {"configuration", hit->configuration.str()},
                          {"mount", encode(hit->mount)}}});
      if (first_only) return out;
    }
    if (m.parent) {
      std::vector<MountAction> parent_mounts;
      for (const auto& pm : ms)
        if (pm.child.id == m.parent->id) parent_mounts.push_back(pm);
      auto cont = temporal::check_parent_containment(m.interval, parent_mounts);
      if (const auto* v = std::get_if<temporal::ContainmentViolation>(&cont)) {
        out.push_back({path,
                       "parent " + to_string(*m.parent) + " is not mounted at " + v->first_uncovered.to_string(),
                       json{{"kind", "containment"},
                            {"parent", encode(*m.parent)},
                            {"first_uncovered", v->first_uncovered.to_string()}}});
        if (first_only) return out;
      }
    }
  }
  if (!ms.empty()) {
    auto begin = ms.front().interval.begin;
    for (const auto& m : ms) begin = std::min(begin, m.interval.begin);
    auto r = temporal::detect_cycle_in(ms, TimeInterval{begin, std::nullopt});
    if (const auto* cy = std::get_if<temporal::Cycle>(&r)) {
      json path = json::array();
      std::string text;
      for (const auto& n : cy->path) {
        path.push_back(encode(n));
        text += (text.empty() ? "" : " -> ") + to_string(n);
      }
      out.push_back({"/mount_actions", "mount cycle " + text, json{{"kind", "cycle"}, {"path", path}}});
    } else if (const auto* mp = std::get_if<temporal::MultipleParents>(&r)) {
      json ids = json::array();
      for (const auto& id : mp->mounts) ids.push_back(id.str());
      out.push_back({"/mount_actions",
                     to_string(mp->node) + " has more than one parent at " + mp->at.to_string(),
                     json{{"kind", "multiple_parents"}, {"node", encode(mp->node)}, {"mounts", ids},
                          {"at", mp->at.to_string()}}});
    }
  }
  return out;
}

// Reference checks that need the rest of the store.
void check_cross(const Store& store, const Transaction::State& s, const Entity& e, const Entity* previous,
                 ValidationReport& report) {
  const auto& info = info_of(e);
  const auto kind = kind_of(e);

  if (!info.archived) {
    auto it = s.natural.find({kind, natural_key(e)});
    if (it != s.natural.end() && it->second != info.id)
      report.add(natural_key_path(kind), "unique",
                 std::string(to_string(kind)) + " '" + natural_key(e) + "' already exists as " + it->second.str());
  }

  auto expect = [&](const std::string& path, const EntityId& id, EntityKind k) {
    if (id.empty()) return;
    const auto* target = s.find(id);
    if (!target || kind_of(*target) != k)
      report.add(path, "reference", "no " + std::string(to_string(k)) + " with id " + id.str());
  };

  if (const auto* cs = contacts_of(e)) {
    for (std::size_t i = 0; i < cs->size(); ++i)
      expect("/contacts/" + std::to_string(i) + "/contact", (*cs)[i].contact, EntityKind::contact);
  }

  if (const auto* c = std::get_if<Configuration>(&e)) {
    if (c->site) expect("/site", *c->site, EntityKind::site);
    const auto* old = previous ? std::get_if<Configuration>(previous) : nullptr;
    for (std::size_t i = 0; i < c->mount_actions.size(); ++i) {
      const auto& m = c->mount_actions[i];
      // Mounts carried over unchanged may refer to archived equipment.
      if (old && std::find(old->mount_actions.begin(), old->mount_actions.end(), m) != old->mount_actions.end())
        continue;
      auto p = "/mount_actions/" + std::to_string(i);
      expect(p + "/child", m.child.id, m.child.kind);
      if (const auto* child = s.find(m.child.id); child && info_of(*child).archived)
        report.add(p + "/child", "reference", m.child.id.str() + " is archived");
      if (m.parent) expect(p + "/parent", m.parent->id, m.parent->kind);
    }
    for (std::size_t i = 0; i < c->location_actions.size(); ++i) {
      const auto* dyn = std::get_if<DynamicLocation>(&c->location_actions[i].location);
      if (!dyn) continue;
      auto p = "/location_actions/" + std::to_string(i);
      auto source = [&](const char* axis, const QuantityRef& q) {
        const auto* dev = s.find(q.device);
        const auto* d = dev ? std::get_if<Device>(dev) : nullptr;
        bool found = d && std::any_of(d->measured_quantities.begin(), d->measured_quantities.end(),
                                      [&](const auto& mq) { return mq.id == q.measured_quantity; });
        if (!found)
          report.add(p + "/" + axis, "reference",
                     "no measured quantity " + q.measured_quantity.str() + " on device " + q.device.str());
      };
      source("x_source", dyn->x_source);
      source("y_source", dyn->y_source);
      source("z_source", dyn->z_source);
    }
  }

  if (const auto* site = std::get_if<Site>(&e); site && site->parent_site) {
    expect("/parent_site", *site->parent_site, EntityKind::site);
    std::set<EntityId> seen{info.id};
    auto cur = site->parent_site;
    while (cur) {
      if (!seen.insert(*cur).second) {
        report.add("/parent_site", "cycle", "site hierarchy would contain a cycle through " + cur->str());
        break;
      }
      const auto* p = s.find(*cur);
      const auto* ps = p ? std::get_if<Site>(p) : nullptr;
      cur = ps ? ps->parent_site : std::nullopt;
    }
  }

  if (!store.options().check_vocabulary) return;
  std::set<EntityId> before;
  if (previous)
    for (const auto& u : term_uses(*previous)) before.insert(u.id);
  for (const auto& u : term_uses(e)) {
    RefState st;
    if (auto it = s.staged_terms.find(u.id); it != s.staged_terms.end())
      st = it->second.category == u.category ? RefState::ok : RefState::wrong_category;
    else
      st = store.vocabulary().check_reference(u.id, u.category);
    auto cat = std::string(vocabulary::to_string(u.category));
    switch (st) {
      case RefState::ok:
        break;
      case RefState::unconfirmed:
        report.warn(u.path, "unconfirmed_term", "term " + u.id.str() + " is awaiting curation");
        break;
      case RefState::deprecated:
        report.warn(u.path, "deprecated_term", "term " + u.id.str() + " is deprecated");
        break;
      case RefState::rejected:
        if (before.count(u.id))
          report.warn(u.path, "rejected_term", "term " + u.id.str() + " was rejected");
        else
          report.add(u.path, "rejected_term", "term " + u.id.str() + " was rejected");
        break;
      case RefState::unknown:
        report.add(u.path, "unknown_term", "no vocabulary term " + u.id.str());
        break;
      case RefState::wrong_category:
        report.add(u.path, "term_category", "term " + u.id.str() + " is not a " + cat);
        break;
    }
  }
}

std::vector<Violation> warnings_of(const ValidationReport& r) {
  std::vector<Violation> out;
  for (const auto& v : r.violations)
    if (v.warning) out.push_back(v);
  return out;
}

}  // namespace

// ---- Transaction

Transaction::Transaction(Store& store, State& state, bool staged) : store_(store), state_(state), staged_(staged) {}

EntityId Transaction::next_id(char prefix) { return store_.next_id(prefix); }

std::shared_ptr<const Entity> Transaction::get(const EntityId& id) const {
  auto it = state_.entities.find(id);
  return it == state_.entities.end() ? nullptr : it->second.current;
}

std::shared_ptr<const Entity> Transaction::find_by_natural_key(EntityKind kind, std::string_view key) const {
  auto it = state_.natural.find({kind, std::string(key)});
  return it == state_.natural.end() ? nullptr : get(it->second);
}

std::optional<vocabulary::VocabularyTerm> Transaction::find_term(Category c, std::string_view term) const {
  auto folded = vocabulary::fold_case(term);
  for (const auto& [id, t] : state_.staged_terms)
    if (t.category == c && vocabulary::fold_case(t.term) == folded) return t;
  return store_.vocabulary().find(c, term);
}

StoredRevision Transaction::commit_entity(std::shared_ptr<const Entity> e, std::vector<Violation> warnings) {
  json rec{{"t", "entity"}, {"entity", encode(*e)}};
  auto rev = revision_of(*e, rec["entity"].dump());
  if (staged_)
    state_.pending.push_back(std::move(rec));
  else
    store_.write_line({rec});
  state_.apply_entity(e, rev);
  state_.touched.insert(info_of(*e).id);
  if (!staged_) store_.reindex(*e);
  rev.warnings = std::move(warnings);
  return rev;
}

void Transaction::commit_aux(json record) {
  if (staged_)
    state_.pending.push_back(record);
  else
    store_.write_line({record});
  state_.apply_aux(record);
}

StoredRevision Transaction::put_entity(Entity e, std::optional<std::int64_t> expected, const WriteContext& ctx) {
  const auto now = ctx.now.value_or(TimeInstant::now());
  auto& info = info_of(e);
  const auto kind = kind_of(e);
  std::shared_ptr<const Entity> previous;
  if (!info.id.empty()) previous = get(info.id);

  if (previous) {
    const auto& cur = info_of(*previous);
    if (kind_of(*previous) != kind)
      throw Error(ErrorCode::bad_request, info.id.str() + " is a " + std::string(to_string(kind_of(*previous))));
    if (cur.archived) throw Error(ErrorCode::invalid_state, info.id.str() + " is archived");
    if (!expected) throw Error(ErrorCode::bad_request, "updates must state the expected version");
    if (*expected != cur.version)
      throw Error(ErrorCode::version_conflict,
                  "expected version " + std::to_string(*expected) + " but " + info.id.str() + " is at version " +
                      std::to_string(cur.version),
                  json{{"current_version", cur.version}});
    info.created_at = cur.created_at;
    info.created_by = cur.created_by;
    info.version = cur.version + 1;
    info.updated_at = std::max(now, cur.updated_at.plus_micros(1));
    info.updated_by = ctx.actor;
  } else {
    if (expected && *expected != 0) throw Error(ErrorCode::not_found, "no " + std::string(to_string(kind)) + " " + info.id.str());
    const char prefix = id_prefix(kind);
    if (info.id.empty()) {
      info.id = next_id(prefix);
    } else {
      auto n = numeric_suffix(info.id.str());
      if (info.id.str()[0] != prefix || n == 0)
        throw Error(ErrorCode::bad_request, "malformed " + std::string(to_string(kind)) + " id " + info.id.str());
      auto& seq = store_.seq_;
      auto cur = seq.load();
      while (cur < n && !seq.compare_exchange_weak(cur, n)) {
      }
    }
    info.version = 1;
    info.created_at = now;
    info.updated_at = now;
    info.created_by = ctx.actor;
    info.updated_by = ctx.actor;
  }
  info.archived = false;
  assign_nested_ids(e, *this);

  auto report = validate_record(e);
  check_cross(store_, state_, e, previous.get(), report);
  if (!report.ok()) throw ValidationFailed(report);
  if (const auto* c = std::get_if<Configuration>(&e)) {
    auto problems = temporal_problems(state_, *c, true);
    if (!problems.empty()) {
      auto& p = problems.front();
      p.detail["path"] = p.path;
      throw Error(ErrorCode::conflict, p.message, p.detail);
    }
  }
  return commit_entity(std::make_shared<const Entity>(std::move(e)), warnings_of(report));
}

StoredRevision Transaction::modify(const EntityId& id, const std::function<void(Entity&)>& change,
                                   std::optional<std::int64_t> expected, const WriteContext& ctx) {
  auto cur = get(id);
  if (!cur) throw Error(ErrorCode::not_found, "no record " + id.str());
  Entity copy = *cur;
  change(copy);
  info_of(copy) = info_of(*cur);
  return put_entity(std::move(copy), expected.value_or(info_of(*cur).version), ctx);
}

StoredRevision Transaction::add_mount(const EntityId& configuration, MountAction mount, const WriteContext& ctx) {
  auto cur = get(configuration);
  if (!cur || !std::holds_alternative<Configuration>(*cur))
    throw Error(ErrorCode::not_found, "no configuration " + configuration.str());
  if (!get(mount.child.id)) throw Error(ErrorCode::not_found, "no " + to_string(mount.child));
  if (mount.id.empty()) mount.id = next_id('m');
  return modify(
      configuration, [&](Entity& e) { std::get<Configuration>(e).mount_actions.push_back(mount); }, std::nullopt,
      ctx);
}

StoredRevision Transaction::archive(const EntityId& id, std::optional<std::int64_t> expected, const WriteContext& ctx) {
  auto cur = get(id);
  if (!cur) throw Error(ErrorCode::not_found, "no record " + id.str());
  const auto& info = info_of(*cur);
  if (info.archived) throw Error(ErrorCode::invalid_state, id.str() + " is already archived");
  if (expected && *expected != info.version)
    throw Error(ErrorCode::version_conflict,
                "expected version " + std::to_string(*expected) + " but " + id.str() + " is at version " +
                    std::to_string(info.version),
                json{{"current_version", info.version}});
  auto kind = kind_of(*cur);
  if (kind == EntityKind::device || kind == EntityKind::platform) {
    auto it = state_.mounts_by_child.find(id);
    if (it != state_.mounts_by_child.end() && !it->second.empty())
      throw Error(ErrorCode::conflict, id.str() + " has mount history and cannot be deleted",
                  json{{"kind", "mount_history"}, {"configuration", it->second.front().configuration.str()}});
  }
  Entity copy = *cur;
  auto& ni = info_of(copy);
  const auto now = ctx.now.value_or(TimeInstant::now());
  ni.version = info.version + 1;
  ni.updated_at = std::max(now, info.updated_at.plus_micros(1));
  ni.updated_by = ctx.actor;
  ni.archived = true;
  return commit_entity(std::make_shared<const Entity>(std::move(copy)), {});
}

std::pair<vocabulary::VocabularyTerm, vocabulary::Vocabulary::UpsertOutcome> Transaction::upsert_term(
    const vocabulary::TermDraft& draft) {
  if (!staged_) return store_.vocabulary().upsert_accepted(draft);
  auto folded = vocabulary::fold_case(draft.term);
  for (const auto& [id, t] : state_.staged_terms)
    if (t.category == draft.category && vocabulary::fold_case(t.term) == folded)
      return {t, vocabulary::Vocabulary::UpsertOutcome::unchanged};
  auto p = store_.vocabulary().prepare_upsert(draft);
  if (!p.records.empty()) {
    state_.staged_terms[p.term.id] = p.term;
    for (auto& r : p.records) state_.vocab_records.push_back(std::move(r));
  }
  return {p.term, p.outcome};
}

void Transaction::put_group(const Group& g) {
  if (g.id.empty()) throw Error(ErrorCode::bad_request, "group id is required");
  commit_aux(json{{"t", "group"}, {"group", encode(g)}});
}

void Transaction::put_account(const Account& a) {
  if (a.id.empty() || a.username.empty()) throw Error(ErrorCode::bad_request, "account id and username are required");
  for (const auto& [id, other] : state_.accounts)
    if (id != a.id && other.username == a.username)
      throw Error(ErrorCode::conflict, "username '" + a.username + "' is taken");
  commit_aux(json{{"t", "account"}, {"account", encode(a)}});
}

void Transaction::put_api_key(const ApiKey& k) {
  if (k.key_id.empty()) throw Error(ErrorCode::bad_request, "api key id is required");
  if (!state_.accounts.count(k.account)) throw Error(ErrorCode::not_found, "no account " + k.account.str());
  commit_aux(json{{"t", "apikey"}, {"apikey", encode(k)}});
}

void Transaction::put_pid(const PidRecord& p) { commit_aux(json{{"t", "pid"}, {"pid", encode(p)}}); }

// ---- Store

Store::Store(StoreOptions options) : options_(std::move(options)), state_(std::make_unique<State>()) {
  if (options_.data_dir) {
    namespace fs = std::filesystem;
    const auto& dir = *options_.data_dir;
    fs::create_directories(dir);
    lock_fd_ = ::open((dir / "LOCK").c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (lock_fd_ < 0) throw Error(ErrorCode::internal, "cannot open lock file in " + dir.string());
    if (::flock(lock_fd_, LOCK_EX | LOCK_NB) != 0) {
      ::close(lock_fd_);
      lock_fd_ = -1;
      throw Error(ErrorCode::conflict, "store " + dir.string() + " is in use by another process");
    }
    auto format = dir / "FORMAT";
    if (fs::exists(format)) {
      std::ifstream in(format);
      std::string line;
      std::getline(in, line);
      if (line != kFormat) throw Error(ErrorCode::inconsistent_state, "unsupported store format '" + line + "'");
    } else {
      std::ofstream(format) << kFormat << "\n";
    }
    blobs_ = std::make_unique<BlobStore>(dir / "blobs", options_.blob_limit);
    journal_.open(
        dir / "journal.jsonl", [this](const json& line, std::size_t no) { replay_line(line, no); }, options_.sync);
  } else {
    blobs_ = std::make_unique<BlobStore>(std::nullopt, options_.blob_limit);
  }
  vocabulary_.set_id_source([this](char p) { return next_id(p); });
  vocabulary_.set_sink([this](const std::vector<json>& recs) { write_line(recs); });
  vocabulary_.set_reference_finder([this](const EntityId& t) { return entities_referencing(t); });
  flush();
}

Store::~Store() {
  if (lock_fd_ >= 0) {
    ::flock(lock_fd_, LOCK_UN);
    ::close(lock_fd_);
  }
}

EntityId Store::next_id(char prefix) { return EntityId{std::string(1, prefix) + std::to_string(++seq_)}; }

void Store::write_line(const std::vector<json>& records) {
  journal_.append(json{{"records", records}, {"seq", seq_.load()}});
}

void Store::replay_line(const json& line, std::size_t line_no) {
  try {
    auto seq = line.at("seq").get<std::uint64_t>();
    if (seq > seq_) seq_ = seq;
    for (const auto& rec : line.at("records")) {
      const auto& t = rec.at("t").get_ref<const std::string&>();
      if (t == "term" || t == "ticket") {
        vocabulary_.apply(rec);
      } else if (t == "entity") {
        auto e = std::make_shared<const Entity>(decode_entity(rec.at("entity")));
        auto rev = revision_of(*e, rec.at("entity").dump());
        state_->apply_entity(std::move(e), std::move(rev));
      } else {
        state_->apply_aux(rec);
      }
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::inconsistent_state) throw;
    throw Error(ErrorCode::inconsistent_state,
                "journal line " + std::to_string(line_no) + ": " + e.what(), json{{"line", line_no}});
  } catch (const std::exception& e) {
    throw Error(ErrorCode::inconsistent_state,
                "journal line " + std::to_string(line_no) + ": " + e.what(), json{{"line", line_no}});
  }
}

StoredRevision Store::single(const std::function<StoredRevision(Transaction&)>& op) {
  std::unique_lock lock(mutex_);
  Transaction tx(*this, *state_, false);
  return op(tx);
}

StoredRevision Store::put_entity(Entity e, std::optional<std::int64_t> expected, const WriteContext& ctx) {
  return single([&](Transaction& tx) { return tx.put_entity(std::move(e), expected, ctx); });
}

StoredRevision Store::modify(const EntityId& id, const std::function<void(Entity&)>& change,
                             std::optional<std::int64_t> expected, const WriteContext& ctx) {
  return single([&](Transaction& tx) { return tx.modify(id, change, expected, ctx); });
}

StoredRevision Store::mount_transaction(const EntityId& configuration, MountAction mount, const WriteContext& ctx) {
  return single([&](Transaction& tx) { return tx.add_mount(configuration, std::move(mount), ctx); });
}

namespace {
MountAction& find_mount(Configuration& c, const EntityId& id) {
  for (auto& m : c.mount_actions)
    if (m.id == id) return m;
  throw Error(ErrorCode::not_found, "no mount " + id.str() + " in " + c.info.id.str());
}

Configuration& as_configuration(Entity& e) {
  auto* c = std::get_if<Configuration>(&e);
  if (!c) throw Error(ErrorCode::not_found, info_of(e).id.str() + " is not a configuration");
  return *c;
}
}  // namespace

StoredRevision Store::end_mount(const EntityId& configuration, const EntityId& mount, TimeInstant end,
                                const WriteContext& ctx) {
  return single([&](Transaction& tx) {
    return tx.modify(
        configuration,
        [&](Entity& e) {
          auto& m = find_mount(as_configuration(e), mount);
          if (m.interval.end && *m.interval.end <= end)
            throw Error(ErrorCode::invalid_state, "mount " + mount.str() + " already ended at " +
                                                      m.interval.end->to_string());
          m.interval.end = end;
        },
        std::nullopt, ctx);
  });
}

StoredRevision Store::modify_mount(const EntityId& configuration, const EntityId& mount, TimeInstant at,
                                   const std::function<void(MountAction&)>& change, const WriteContext& ctx) {
  return single([&](Transaction& tx) {
    auto fresh = tx.next_id('m');
    return tx.modify(
        configuration,
        [&](Entity& e) {
          auto& c = as_configuration(e);
          auto& m = find_mount(c, mount);
          if (!m.interval.contains(at) || at == m.interval.begin)
            throw Error(ErrorCode::invalid_state,
                        "mount " + mount.str() + " is not in force after " + at.to_string());
          MountAction next = m;
          next.id = fresh;
          next.interval = TimeInterval{at, m.interval.end};
          m.interval.end = at;
          change(next);
          next.id = fresh;
          next.interval.begin = at;
          c.mount_actions.push_back(std::move(next));
        },
        std::nullopt, ctx);
  });
}

StoredRevision Store::add_location(const EntityId& configuration, LocationAction location, const WriteContext& ctx) {
  return single([&](Transaction& tx) {
    if (location.id.empty()) location.id = tx.next_id('l');
    return tx.modify(
        configuration, [&](Entity& e) { as_configuration(e).location_actions.push_back(location); }, std::nullopt,
        ctx);
  });
}

StoredRevision Store::archive(const EntityId& id, std::optional<std::int64_t> expected, const WriteContext& ctx) {
  auto rev = single([&](Transaction& tx) { return tx.archive(id, expected, ctx); });
  return rev;
}

void Store::transaction(const std::function<void(Transaction&)>& fn) {
  std::unique_lock lock(mutex_);
  auto copy = std::make_unique<State>(*state_);
  copy->pending.clear();
  copy->vocab_records.clear();
  copy->staged_terms.clear();
  copy->touched.clear();
  Transaction tx(*this, *copy, true);
  fn(tx);
  if (copy->pending.empty() && copy->vocab_records.empty()) return;
  std::vector<json> records = copy->vocab_records;
  records.insert(records.end(), copy->pending.begin(), copy->pending.end());
  write_line(records);
  for (const auto& r : copy->vocab_records) vocabulary_.apply(r);
  auto touched = std::move(copy->touched);
  copy->pending.clear();
  copy->vocab_records.clear();
  copy->staged_terms.clear();
  state_ = std::move(copy);
  for (const auto& id : touched)
    if (const auto* e = state_->find(id)) reindex(*e);
}

std::shared_ptr<const Entity> Store::get(const EntityId& id) const {
  std::shared_lock lock(mutex_);
  auto it = state_->entities.find(id);
  return it == state_->entities.end() ? nullptr : it->second.current;
}

std::optional<StoredRevision> Store::revision(const EntityId& id, std::int64_t version) const {
  std::shared_lock lock(mutex_);
  auto it = state_->entities.find(id);
  if (it == state_->entities.end() || version < 1 || version > static_cast<std::int64_t>(it->second.history->size()))
    return std::nullopt;
  return (*it->second.history)[static_cast<std::size_t>(version - 1)];
}

std::vector<StoredRevision> Store::history(const EntityId& id) const {
  std::shared_lock lock(mutex_);
  auto it = state_->entities.find(id);
  if (it == state_->entities.end()) return {};
  return *it->second.history;
}

std::vector<std::shared_ptr<const Entity>> Store::list(EntityKind kind, bool include_archived) const {
  std::shared_lock lock(mutex_);
  std::vector<std::shared_ptr<const Entity>> out;
  for (const auto& [id, slot] : state_->entities) {
    if (kind_of(*slot.current) != kind) continue;
    if (!include_archived && info_of(*slot.current).archived) continue;
    out.push_back(slot.current);
  }
  return out;
}

std::shared_ptr<const Entity> Store::find_by_natural_key(EntityKind kind, std::string_view key) const {
  std::shared_lock lock(mutex_);
  auto it = state_->natural.find({kind, std::string(key)});
  if (it == state_->natural.end()) return nullptr;
  return state_->entities.at(it->second).current;
}

std::size_t Store::count(EntityKind kind, bool include_archived) const {
  std::shared_lock lock(mutex_);
  std::size_t n = 0;
  for (const auto& [id, slot] : state_->entities)
    if (kind_of(*slot.current) == kind && (include_archived || !info_of(*slot.current).archived)) ++n;
  return n;
}

std::vector<temporal::PlacedMount> Store::mounts_of(const EntityId& child) const {
  std::shared_lock lock(mutex_);
  auto it = state_->mounts_by_child.find(child);
  if (it == state_->mounts_by_child.end()) return {};
  return it->second;
}

std::vector<EntityId> Store::entities_referencing(const EntityId& term) const {
  std::shared_lock lock(mutex_);
  std::vector<EntityId> out;
  for (const auto& [id, slot] : state_->entities) {
    if (info_of(*slot.current).archived) continue;
    for (const auto& u : term_uses(*slot.current)) {
      if (u.id == term) {
        out.push_back(id);
        break;
      }
    }
  }
  return out;
}

std::optional<Group> Store::group(const GroupId& id) const {
  std::shared_lock lock(mutex_);
  auto it = state_->groups.find(id);
  if (it == state_->groups.end()) return std::nullopt;
  return it->second;
}

std::vector<Group> Store::groups() const {
  std::shared_lock lock(mutex_);
  std::vector<Group> out;
  for (const auto& [id, g] : state_->groups) out.push_back(g);
  return out;
}

std::optional<Account> Store::account(const AccountId& id) const {
  std::shared_lock lock(mutex_);
  auto it = state_->accounts.find(id);
  if (it == state_->accounts.end()) return std::nullopt;
  return it->second;
}

std::optional<Account> Store::account_by_username(std::string_view username) const {
  std::shared_lock lock(mutex_);
  for (const auto& [id, a] : state_->accounts)
    if (a.username == username) return a;
  return std::nullopt;
}

std::vector<Account> Store::accounts() const {
  std::shared_lock lock(mutex_);
  std::vector<Account> out;
  for (const auto& [id, a] : state_->accounts) out.push_back(a);
  return out;
}

std::optional<ApiKey> Store::api_key(std::string_view key_id) const {
  std::shared_lock lock(mutex_);
  auto it = state_->api_keys.find(key_id);
  if (it == state_->api_keys.end()) return std::nullopt;
  return it->second;
}

std::optional<PidRecord> Store::pid_record(const EntityId& entity) const {
  std::shared_lock lock(mutex_);
  auto it = state_->pids.find(entity);
  if (it == state_->pids.end()) return std::nullopt;
  return it->second;
}

std::vector<PidRecord> Store::pid_records() const {
  std::shared_lock lock(mutex_);
  std::vector<PidRecord> out;
  for (const auto& [id, p] : state_->pids) out.push_back(p);
  return out;
}

void Store::put_group(const Group& g) {
  std::unique_lock lock(mutex_);
  Transaction(*this, *state_, false).put_group(g);
}

void Store::put_account(const Account& a) {
  std::unique_lock lock(mutex_);
  Transaction(*this, *state_, false).put_account(a);
}

void Store::put_api_key(const ApiKey& k) {
  std::unique_lock lock(mutex_);
  Transaction(*this, *state_, false).put_api_key(k);
}

void Store::put_pid(const PidRecord& p) {
  std::unique_lock lock(mutex_);
  Transaction(*this, *state_, false).put_pid(p);
}

SearchDocument Store::document_for(const Entity& e) const {
  SearchDocument doc;
  doc.entity_id = info_of(e).id;
  doc.kind = kind_of(e);
  doc.name = display_name(e);
  doc.add(doc.name, kNameWeight);
  doc.add(doc.entity_id.str(), kIdentifierWeight);
  auto ident = [&](const std::string& s) { doc.add(s, kIdentifierWeight); };
  std::visit(
      [&](const auto& r) {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, Device> || std::is_same_v<T, Platform>) {
          ident(r.urn);
          ident(r.model);
          ident(r.serial_number);
          ident(r.inventory_number);
          if (r.pid) ident(*r.pid);
          doc.add(r.description, kTextWeight);
        } else if constexpr (std::is_same_v<T, Configuration>) {
          if (r.pid) ident(*r.pid);
          doc.add(r.description, kTextWeight);
          doc.add(r.project, kTextWeight);
        } else if constexpr (std::is_same_v<T, Site>) {
          doc.add(r.description, kTextWeight);
        } else if constexpr (std::is_same_v<T, Contact>) {
          doc.add(r.given_name, kNameWeight);
          doc.add(r.family_name, kNameWeight);
          ident(r.email);
          if (r.orcid) ident(*r.orcid);
          doc.add(r.organization, kTextWeight);
        }
      },
      e);
  for (const auto& u : term_uses(e)) {
    if (u.category == Category::contact_role || u.category == Category::action_type) continue;
    if (auto t = vocabulary_.get_term(u.id); t && t->status != vocabulary::TermStatus::rejected)
      doc.add(t->term, kTextWeight);
  }
  if (const auto* cs = contacts_of(e)) {
    for (const auto& cr : *cs) {
      const auto* c = state_->find(cr.contact);
      if (const auto* contact = c ? std::get_if<Contact>(c) : nullptr) {
        doc.add(contact->given_name, kTextWeight);
        doc.add(contact->family_name, kTextWeight);
      }
    }
  }
  return doc;
}

void Store::reindex(const Entity& e) {
  if (info_of(e).archived)
    index_.remove(info_of(e).id);
  else
    index_.upsert(document_for(e));
}

void Store::flush() {
  std::shared_lock lock(mutex_);
  for (const auto& [id, slot] : state_->entities) reindex(*slot.current);
}

std::vector<SearchHit> Store::search(std::string_view query, std::optional<EntityKind> kind,
                                     const std::function<bool(const Entity&)>& can_read) const {
  std::shared_lock lock(mutex_);
  return index_.search(query, kind, [&](const EntityRef& ref) {
    const auto* e = state_->find(ref.id);
    if (!e || info_of(*e).archived) return false;
    return !can_read || can_read(*e);
  });
}

std::vector<Finding> Store::validate_all() const {
  std::shared_lock lock(mutex_);
  std::vector<Finding> out;
  for (const auto& [id, slot] : state_->entities) {
    const auto& e = *slot.current;
    const auto ref = ref_of(e);
    const auto& hist = *slot.history;
    for (std::size_t i = 0; i < hist.size(); ++i) {
      if (hist[i].version != static_cast<std::int64_t>(i + 1)) {
        out.push_back({ref, {"/version", "history", "revision " + std::to_string(i) + " has version " +
                                                      std::to_string(hist[i].version), false}});
        break;
      }
    }
    if (info_of(e).archived) continue;
    auto report = validate_record(e);
    // Pass the record as its own predecessor: terms rejected after the fact
    // are reported as warnings.
    check_cross(*this, *state_, e, &e, report);
    for (auto& v : report.violations) out.push_back({ref, std::move(v)});
    if (const auto* c = std::get_if<Configuration>(&e)) {
      for (auto& p : temporal_problems(*state_, *c, false)) {
        auto code = p.detail.value("kind", std::string("temporal"));
        out.push_back({ref, {p.path, code, p.message, false}});
      }
    }
  }
  return out;
}

}  // namespace sms::storage
