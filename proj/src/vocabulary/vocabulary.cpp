#include "sms/vocabulary/vocabulary.hpp"

#include <algorithm>
#include <set>

#include "sms/core/errors.hpp"
#include "sms/core/validate.hpp"
#include "sms/vocabulary/turtle.hpp"

namespace sms::vocabulary {

using nlohmann::json;

namespace {

constexpr std::string_view kCategoryNames[] = {
    "equipment_type", "manufacturer",   "contact_role", "unit",          "measured_quantity",
    "compartment",    "sampling_media", "action_type",  "platform_type", "site_usage",
};

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad(const std::string& pointer, const std::string& what) {
  throw Error(ErrorCode::bad_request, "invalid term document at '" + pointer + "': " + what,
              json{{"pointer", pointer}});
}

std::string get_string(const json& j, const std::string& key, const std::string& path) {
  const auto& v = j.at(key);
  if (!v.is_string()) bad(path + "/" + key, "expected a string");
  return v.get<std::string>();
}

std::vector<std::string> get_strings(const json& j, const std::string& key, const std::string& path) {
  const auto& v = j.at(key);
  if (!v.is_array()) bad(path + "/" + key, "expected an array of strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_string()) bad(path + "/" + key + "/" + std::to_string(i), "expected a string");
    out.push_back(v[i].get<std::string>());
  }
  return out;
}

void check_keys(const json& j, const std::string& path, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) bad(path.empty() ? "/" : path, "expected an object");
  for (const auto& [k, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) bad(path + "/" + k, "unknown field");
  }
}

Category get_category(const json& j, const std::string& path) {
  if (!j.contains("category")) bad(path + "/category", "required");
  auto c = category_from_string(get_string(j, "category", path));
  if (!c) bad(path + "/category", "unknown category");
  return *c;
}

bool is_uri(std::string_view s) {
  auto colon = s.find(':');
  if (colon == std::string_view::npos || colon == 0) return false;
  if (!std::isalpha(static_cast<unsigned char>(s[0]))) return false;
  return is_plain_iri(s);
}

TermDraft normalized(TermDraft d) {
  d.term = trim(d.term);
  for (auto& s : d.synonyms) s = trim(s);
  std::erase_if(d.synonyms, [](const std::string& s) { return s.empty(); });
  if (d.provenance_uri && trim(*d.provenance_uri).empty()) d.provenance_uri.reset();
  if (d.global_provenance && trim(*d.global_provenance).empty()) d.global_provenance.reset();
  return d;
}

void fill(VocabularyTerm& t, const TermDraft& d) {
  t.category = d.category;
  t.term = d.term;
  t.definition = d.definition;
  t.provenance = d.provenance;
  t.provenance_uri = d.provenance_uri;
  t.global_provenance = d.global_provenance;
  t.synonyms = d.synonyms;
  t.note_for_curator = d.note_for_curator;
}

bool same_content(const VocabularyTerm& t, const TermDraft& d) {
  return t.term == d.term && t.definition == d.definition && t.provenance == d.provenance &&
         t.provenance_uri == d.provenance_uri && t.global_provenance == d.global_provenance &&
         t.synonyms == d.synonyms;
}

json term_record(const VocabularyTerm& t) { return json{{"t", "term"}, {"term", encode(t)}}; }
json ticket_record(const CurationTicket& t) { return json{{"t", "ticket"}, {"ticket", encode(t)}}; }

std::uint64_t numeric_suffix(const std::string& id) {
  std::uint64_t n = 0;
  for (std::size_t i = 1; i < id.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(id[i]))) return 0;
    n = n * 10 + static_cast<std::uint64_t>(id[i] - '0');
  }
  return n;
}

// Closes a ticket, stepping through in_review when it is still open.
void close_ticket(CurationTicket& ticket, TicketState final_state, const EntityId& who, std::string message,
                  TimeInstant now) {
  if (ticket.state == TicketState::open) ticket.state = TicketState::in_review;
  ticket.state = final_state;
  ticket.discussion.push_back({who, now, std::move(message)});
}

bool term_less(const VocabularyTerm& a, const VocabularyTerm& b) {
  auto fa = fold_case(a.term), fb = fold_case(b.term);
  if (fa != fb) return fa < fb;
  if (a.term != b.term) return a.term < b.term;
  return a.id < b.id;
}

}  // namespace

std::string_view to_string(Category c) { return kCategoryNames[static_cast<int>(c)]; }

std::optional<Category> category_from_string(std::string_view s) {
  for (std::size_t i = 0; i < std::size(kCategoryNames); ++i) {
    if (kCategoryNames[i] == s) return static_cast<Category>(i);
  }
  return std::nullopt;
}

std::string_view to_string(TermStatus s) {
  switch (s) {
    case TermStatus::proposed: return "proposed";
    case TermStatus::accepted: return "accepted";
    case TermStatus::rejected: return "rejected";
    case TermStatus::deprecated: return "deprecated";
  }
  return "proposed";
}

std::optional<TermStatus> term_status_from_string(std::string_view s) {
  for (auto st : {TermStatus::proposed, TermStatus::accepted, TermStatus::rejected, TermStatus::deprecated}) {
    if (to_string(st) == s) return st;
  }
  return std::nullopt;
}

std::string_view to_string(TicketState s) {
  switch (s) {
    case TicketState::open: return "open";
    case TicketState::in_review: return "in_review";
    case TicketState::accepted: return "accepted";
    case TicketState::rejected: return "rejected";
  }
  return "open";
}

static std::optional<TicketState> ticket_state_from_string(std::string_view s) {
  for (auto st : {TicketState::open, TicketState::in_review, TicketState::accepted, TicketState::rejected}) {
    if (to_string(st) == s) return st;
  }
  return std::nullopt;
}

std::string fold_case(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

json encode(const VocabularyTerm& t) {
  json j{{"id", t.id.value},
         {"category", to_string(t.category)},
         {"term", t.term},
         {"definition", t.definition},
         {"provenance", t.provenance},
         {"synonyms", t.synonyms},
         {"status", to_string(t.status)},
         {"note_for_curator", t.note_for_curator}};
  if (t.provenance_uri) j["provenance_uri"] = *t.provenance_uri;
  if (t.global_provenance) j["global_provenance"] = *t.global_provenance;
  return j;
}

json encode(const CurationTicket& t) {
  json discussion = json::array();
  for (const auto& m : t.discussion) {
    discussion.push_back({{"author", m.author.value}, {"at", m.at.to_string()}, {"message", m.message}});
  }
  return json{{"id", t.id.value},
              {"term_id", t.term_id.value},
              {"submitted_by", t.submitted_by.value},
              {"submitted_at", t.submitted_at.to_string()},
              {"state", to_string(t.state)},
              {"discussion", std::move(discussion)}};
}

TermDraft decode_draft(const json& j, const std::string& path) {
  check_keys(j, path,
             {"id", "category", "term", "definition", "provenance", "provenance_uri", "global_provenance",
              "synonyms", "note_for_curator", "status"});
  TermDraft d;
  d.category = get_category(j, path);
  if (!j.contains("term")) bad(path + "/term", "required");
  d.term = get_string(j, "term", path);
  if (j.contains("definition")) d.definition = get_string(j, "definition", path);
  if (j.contains("provenance")) d.provenance = get_string(j, "provenance", path);
  if (j.contains("provenance_uri") && !j["provenance_uri"].is_null())
    d.provenance_uri = get_string(j, "provenance_uri", path);
  if (j.contains("global_provenance") && !j["global_provenance"].is_null())
    d.global_provenance = get_string(j, "global_provenance", path);
  if (j.contains("synonyms")) d.synonyms = get_strings(j, "synonyms", path);
  if (j.contains("note_for_curator")) d.note_for_curator = get_string(j, "note_for_curator", path);
  return d;
}

VocabularyTerm decode_term(const json& j) {
  auto d = decode_draft(j, "");
  VocabularyTerm t;
  fill(t, d);
  t.id = EntityId{get_string(j, "id", "")};
  auto st = term_status_from_string(get_string(j, "status", ""));
  if (!st) bad("/status", "unknown status");
  t.status = *st;
  return t;
}

CurationTicket decode_ticket(const json& j) {
  check_keys(j, "", {"id", "term_id", "submitted_by", "submitted_at", "state", "discussion"});
  CurationTicket t;
  t.id = EntityId{get_string(j, "id", "")};
  t.term_id = EntityId{get_string(j, "term_id", "")};
  t.submitted_by = EntityId{get_string(j, "submitted_by", "")};
  t.submitted_at = TimeInstant::parse(get_string(j, "submitted_at", ""));
  auto st = ticket_state_from_string(get_string(j, "state", ""));
  if (!st) bad("/state", "unknown state");
  t.state = *st;
  for (const auto& m : j.at("discussion")) {
    t.discussion.push_back({EntityId{m.at("author").get<std::string>()},
                            TimeInstant::parse(m.at("at").get<std::string>()), m.at("message").get<std::string>()});
  }
  return t;
}

Vocabulary::Vocabulary() = default;

void Vocabulary::set_sink(Sink sink) {
  std::unique_lock lock(mutex_);
  sink_ = std::move(sink);
}

void Vocabulary::set_reference_finder(ReferenceFinder finder) {
  std::unique_lock lock(mutex_);
  finder_ = std::move(finder);
}

void Vocabulary::set_ticket_hook(TicketHook hook) {
  std::unique_lock lock(mutex_);
  hook_ = std::move(hook);
}

void Vocabulary::set_id_source(IdSource ids) {
  std::unique_lock lock(mutex_);
  ids_ = std::move(ids);
}

EntityId Vocabulary::next_id(char prefix) {
  if (ids_) return ids_(prefix);
  return EntityId{std::string(1, prefix) + std::to_string(++local_seq_)};
}

void Vocabulary::emit(const std::vector<json>& records) {
  if (sink_) sink_(records);
}

const VocabularyTerm* Vocabulary::find_locked(Category category, std::string_view term,
                                              const EntityId* except) const {
  auto key = fold_case(trim(term));
  for (const auto& [id, t] : terms_) {
    if (t.status == TermStatus::rejected || t.category != category) continue;
    if (except && id == *except) continue;
    if (fold_case(t.term) == key) return &t;
  }
  return nullptr;
}

void Vocabulary::check_draft(const TermDraft& draft) const {
  ValidationReport report;
  if (is_blank(draft.term)) report.add("/term", "required", "term must not be empty");
  if (draft.provenance_uri && !is_uri(*draft.provenance_uri))
    report.add("/provenance_uri", "url", "provenance_uri must be an absolute URI");
  if (!report.ok()) throw ValidationFailed(std::move(report));
}

TermPage Vocabulary::list_terms(const TermQuery& query) const {
  std::vector<VocabularyTerm> hits;
  auto needle = query.text ? fold_case(trim(*query.text)) : std::string();
  {
    std::shared_lock lock(mutex_);
    for (const auto& [_, t] : terms_) {
      if (query.category && t.category != *query.category) continue;
      if (query.status && t.status != *query.status) continue;
      if (!needle.empty()) {
        bool match = fold_case(t.term).find(needle) != std::string::npos;
        for (const auto& s : t.synonyms) match = match || fold_case(s).find(needle) != std::string::npos;
        if (!match) continue;
      }
      hits.push_back(t);
    }
  }
  std::sort(hits.begin(), hits.end(), term_less);
  TermPage page;
  page.page = std::max<std::size_t>(query.page, 1);
  page.page_size = std::clamp<std::size_t>(query.page_size, 1, 1000);
  page.total = hits.size();
  auto first = (page.page - 1) * page.page_size;
  for (auto i = first; i < hits.size() && i < first + page.page_size; ++i) page.items.push_back(std::move(hits[i]));
  return page;
}

std::optional<VocabularyTerm> Vocabulary::get_term(const EntityId& id) const {
  std::shared_lock lock(mutex_);
  auto it = terms_.find(id);
  if (it == terms_.end()) return std::nullopt;
  return it->second;
}

std::optional<CurationTicket> Vocabulary::get_ticket(const EntityId& id) const {
  std::shared_lock lock(mutex_);
  auto it = tickets_.find(id);
  if (it == tickets_.end()) return std::nullopt;
  return it->second;
}

std::optional<CurationTicket> Vocabulary::ticket_for_term(const EntityId& term) const {
  std::shared_lock lock(mutex_);
  auto it = ticket_by_term_.find(term);
  if (it == ticket_by_term_.end()) return std::nullopt;
  return tickets_.at(it->second);
}

std::vector<CurationTicket> Vocabulary::tickets(std::optional<TicketState> state) const {
  std::shared_lock lock(mutex_);
  std::vector<CurationTicket> out;
  for (const auto& [_, t] : tickets_) {
    if (!state || t.state == *state) out.push_back(t);
  }
  return out;
}

std::vector<VocabularyTerm> Vocabulary::all_terms() const {
  std::shared_lock lock(mutex_);
  std::vector<VocabularyTerm> out;
  for (const auto& [_, t] : terms_) out.push_back(t);
  return out;
}

std::size_t Vocabulary::size() const {
  std::shared_lock lock(mutex_);
  return terms_.size();
}

std::optional<VocabularyTerm> Vocabulary::find(Category category, std::string_view term) const {
  std::shared_lock lock(mutex_);
  const auto* t = find_locked(category, term, nullptr);
  if (!t) return std::nullopt;
  return *t;
}

std::optional<VocabularyTerm> Vocabulary::resolve(const EntityId& id) const {
  std::shared_lock lock(mutex_);
  auto it = terms_.find(id);
  if (it == terms_.end() || it->second.status != TermStatus::accepted) return std::nullopt;
  return it->second;
}

RefState Vocabulary::check_reference(const EntityId& id, std::optional<Category> expected) const {
  std::shared_lock lock(mutex_);
  auto it = terms_.find(id);
  if (it == terms_.end()) return RefState::unknown;
  const auto& t = it->second;
  if (expected && t.category != *expected) return RefState::wrong_category;
  switch (t.status) {
    case TermStatus::accepted: return RefState::ok;
    case TermStatus::proposed: return RefState::unconfirmed;
    case TermStatus::deprecated: return RefState::deprecated;
    case TermStatus::rejected: return RefState::rejected;
  }
  return RefState::unknown;
}

Proposal Vocabulary::propose_term(const TermDraft& raw, const EntityId& submitter, TimeInstant now) {
  auto draft = normalized(raw);
  check_draft(draft);
  Proposal out;
  TicketHook hook;
  {
    std::unique_lock lock(mutex_);
    if (const auto* existing = find_locked(draft.category, draft.term, nullptr)) {
      bool pending = existing->status == TermStatus::proposed;
      throw Error(ErrorCode::duplicate_term,
                  std::string(pending ? "a proposal for '" : "term '") + existing->term + "' already exists in " +
                      std::string(to_string(draft.category)),
                  json{{"term_id", existing->id.value}, {"status", to_string(existing->status)}});
    }
    VocabularyTerm term;
    fill(term, draft);
    term.id = next_id('v');
    term.status = TermStatus::proposed;
    CurationTicket ticket;
    ticket.id = next_id('i');
    ticket.term_id = term.id;
    ticket.submitted_by = submitter;
    ticket.submitted_at = now;
    emit({term_record(term), ticket_record(ticket)});
    terms_[term.id] = term;
    tickets_[ticket.id] = ticket;
    ticket_by_term_[term.id] = ticket.id;
    out = {std::move(term), std::move(ticket)};
    hook = hook_;
  }
  if (hook) hook(TicketEvent::opened, out.ticket, out.term);
  return out;
}

CurationTicket Vocabulary::comment(const EntityId& ticket_id, const EntityId& author, std::string message,
                                   TimeInstant now) {
  if (is_blank(message)) {
    ValidationReport r;
    r.add("/message", "required", "message must not be empty");
    throw ValidationFailed(std::move(r));
  }
  CurationTicket ticket;
  VocabularyTerm term;
  TicketHook hook;
  {
    std::unique_lock lock(mutex_);
    auto it = tickets_.find(ticket_id);
    if (it == tickets_.end()) throw Error(ErrorCode::not_found, "no ticket " + ticket_id.value);
    ticket = it->second;
    ticket.discussion.push_back({author, now, std::move(message)});
    emit({ticket_record(ticket)});
    it->second = ticket;
    term = terms_.at(ticket.term_id);
    hook = hook_;
  }
  if (hook) hook(TicketEvent::commented, ticket, term);
  return ticket;
}

CurationTicket Vocabulary::start_review(const EntityId& ticket_id, const EntityId& curator, bool curator_role,
                                        TimeInstant now) {
  if (!curator_role) throw Error(ErrorCode::forbidden, "curator role required");
  CurationTicket ticket;
  VocabularyTerm term;
  TicketHook hook;
  {
    std::unique_lock lock(mutex_);
    auto it = tickets_.find(ticket_id);
    if (it == tickets_.end()) throw Error(ErrorCode::not_found, "no ticket " + ticket_id.value);
    if (it->second.state != TicketState::open)
      throw Error(ErrorCode::invalid_state, "ticket " + ticket_id.value + " is " + std::string(to_string(it->second.state)));
    ticket = it->second;
    ticket.state = TicketState::in_review;
    ticket.discussion.push_back({curator, now, "review started"});
    emit({ticket_record(ticket)});
    it->second = ticket;
    term = terms_.at(ticket.term_id);
    hook = hook_;
  }
  if (hook) hook(TicketEvent::review_started, ticket, term);
  return ticket;
}

CurationResult Vocabulary::curate(const EntityId& ticket_id, Decision decision, const std::optional<TermEdits>& edits,
                                  const EntityId& curator, bool curator_role, TimeInstant now) {
  if (!curator_role) throw Error(ErrorCode::forbidden, "curator role required");
  CurationResult out;
  TicketHook hook;
  ReferenceFinder finder;
  {
    std::unique_lock lock(mutex_);
    auto it = tickets_.find(ticket_id);
    if (it == tickets_.end()) throw Error(ErrorCode::not_found, "no ticket " + ticket_id.value);
    if (it->second.is_closed())
      throw Error(ErrorCode::invalid_state,
                  "ticket " + ticket_id.value + " is already " + std::string(to_string(it->second.state)));
    auto ticket = it->second;
    auto term = terms_.at(ticket.term_id);
    if (decision == Decision::accept) {
      if (edits) {
        TermDraft d;
        d.category = term.category;
        d.term = edits->term.value_or(term.term);
        d.definition = edits->definition.value_or(term.definition);
        d.provenance = edits->provenance.value_or(term.provenance);
        d.provenance_uri = edits->provenance_uri ? edits->provenance_uri : term.provenance_uri;
        d.global_provenance = edits->global_provenance ? edits->global_provenance : term.global_provenance;
        d.synonyms = edits->synonyms.value_or(term.synonyms);
        d.note_for_curator = term.note_for_curator;
        d = normalized(d);
        check_draft(d);
        if (const auto* clash = find_locked(d.category, d.term, &term.id)) {
          throw Error(ErrorCode::duplicate_term, "term '" + clash->term + "' already exists",
                      json{{"term_id", clash->id.value}});
        }
        fill(term, d);
      }
      term.status = TermStatus::accepted;
      close_ticket(ticket, TicketState::accepted, curator, "accepted", now);
    } else {
      term.status = TermStatus::rejected;
      close_ticket(ticket, TicketState::rejected, curator, "rejected", now);
    }
    emit({term_record(term), ticket_record(ticket)});
    terms_[term.id] = term;
    it->second = ticket;
    out.term = std::move(term);
    out.ticket = std::move(ticket);
    hook = hook_;
    finder = finder_;
  }
  if (decision == Decision::reject && finder) out.referencing_entities = finder(out.term.id);
  if (hook) hook(TicketEvent::closed, out.ticket, out.term);
  return out;
}

VocabularyTerm Vocabulary::deprecate(const EntityId& id, bool curator_role) {
  if (!curator_role) throw Error(ErrorCode::forbidden, "curator role required");
  std::unique_lock lock(mutex_);
  auto it = terms_.find(id);
  if (it == terms_.end()) throw Error(ErrorCode::not_found, "no term " + id.value);
  if (it->second.status != TermStatus::accepted)
    throw Error(ErrorCode::invalid_state, "only accepted terms can be deprecated");
  auto term = it->second;
  term.status = TermStatus::deprecated;
  emit({term_record(term)});
  it->second = term;
  return term;
}

Vocabulary::PreparedUpsert Vocabulary::prepare_locked(const TermDraft& raw, TimeInstant now) {
  auto draft = normalized(raw);
  check_draft(draft);
  PreparedUpsert out;
  const auto* existing = find_locked(draft.category, draft.term, nullptr);
  if (!existing) {
    fill(out.term, draft);
    out.term.id = next_id('v');
    out.term.status = TermStatus::accepted;
    out.outcome = UpsertOutcome::created;
    out.records.push_back(term_record(out.term));
    return out;
  }
  out.term = *existing;
  if (out.term.status != TermStatus::proposed && same_content(out.term, draft)) return out;
  auto note = out.term.note_for_curator;
  fill(out.term, draft);
  out.term.note_for_curator = note;
  out.outcome = UpsertOutcome::updated;
  out.records.push_back(term_record(out.term));
  if (out.term.status == TermStatus::proposed) {
    out.term.status = TermStatus::accepted;
    out.records.back() = term_record(out.term);
    if (auto t = ticket_by_term_.find(out.term.id); t != ticket_by_term_.end()) {
      auto ticket = tickets_.at(t->second);
      close_ticket(ticket, TicketState::accepted, EntityId{}, "accepted by import", now);
      out.records.push_back(ticket_record(ticket));
    }
  }
  return out;
}

Vocabulary::PreparedUpsert Vocabulary::prepare_upsert(const TermDraft& draft, TimeInstant now) {
  std::unique_lock lock(mutex_);
  return prepare_locked(draft, now);
}

std::pair<VocabularyTerm, Vocabulary::UpsertOutcome> Vocabulary::upsert_accepted(const TermDraft& draft,
                                                                                TimeInstant now) {
  std::unique_lock lock(mutex_);
  auto p = prepare_locked(draft, now);
  if (!p.records.empty()) {
    emit(p.records);
    for (const auto& r : p.records) apply_locked(r);
  }
  return {std::move(p.term), p.outcome};
}

ImportSummary Vocabulary::import_terms(const std::vector<ImportRow>& rows) {
  ImportSummary summary;
  std::set<std::pair<Category, std::string>> seen;
  std::vector<const ImportRow*> accepted;
  for (const auto& row : rows) {
    auto d = normalized(row.draft);
    try {
      check_draft(d);
    } catch (const ValidationFailed& e) {
      throw Error(ErrorCode::bad_request, "line " + std::to_string(row.line) + ": " + e.report().summary(),
                  json{{"line", row.line}});
    }
    if (!seen.insert({d.category, fold_case(d.term)}).second) {
      ++summary.skipped;
      summary.warnings.push_back("line " + std::to_string(row.line) + ": duplicate term '" + d.term + "' in " +
                                 std::string(to_string(d.category)) + ", skipped");
      continue;
    }
    accepted.push_back(&row);
  }
  for (const auto* row : accepted) {
    switch (upsert_accepted(row->draft).second) {
      case UpsertOutcome::created: ++summary.created; break;
      case UpsertOutcome::updated: ++summary.updated; break;
      case UpsertOutcome::unchanged: ++summary.unchanged; break;
    }
  }
  return summary;
}

std::string Vocabulary::export_skos(std::string_view base_url) const {
  std::string base(base_url);
  while (!base.empty() && base.back() == '/') base.pop_back();
  std::vector<VocabularyTerm> accepted;
  {
    std::shared_lock lock(mutex_);
    for (const auto& [_, t] : terms_) {
      if (t.status == TermStatus::accepted) accepted.push_back(t);
    }
  }
  std::sort(accepted.begin(), accepted.end(), [](const VocabularyTerm& a, const VocabularyTerm& b) {
    if (a.category != b.category) return a.category < b.category;
    return term_less(a, b);
  });

  std::string out;
  out += "@prefix skos: <" + std::string(kSkos) + "> .\n";
  out += "@prefix dcterms: <" + std::string(kDcterms) + "> .\n\n";
  for (auto c : kAllCategories) {
    std::string label(to_string(c));
    std::replace(label.begin(), label.end(), '_', ' ');
    out += "<" + base + "/cv/schemes/" + std::string(to_string(c)) + "> a skos:ConceptScheme ;\n";
    out += "    skos:prefLabel \"" + label + "\" .\n\n";
  }
  for (const auto& t : accepted) {
    out += "<" + base + "/cv/terms/" + t.id.value + "> a skos:Concept ;\n";
    out += "    skos:inScheme <" + base + "/cv/schemes/" + std::string(to_string(t.category)) + "> ;\n";
    out += "    skos:prefLabel \"" + turtle_escape(t.term) + "\"";
    if (!t.definition.empty()) out += " ;\n    skos:definition \"" + turtle_escape(t.definition) + "\"";
    for (const auto& s : t.synonyms) out += " ;\n    skos:altLabel \"" + turtle_escape(s) + "\"";
    if (t.provenance_uri) out += " ;\n    skos:exactMatch <" + *t.provenance_uri + ">";
    if (!t.provenance.empty()) out += " ;\n    dcterms:source \"" + turtle_escape(t.provenance) + "\"";
    if (t.global_provenance)
      out += " ;\n    dcterms:provenance \"" + turtle_escape(*t.global_provenance) + "\"";
    out += " .\n\n";
  }
  return out;
}

void Vocabulary::apply(const json& record) {
  std::unique_lock lock(mutex_);
  apply_locked(record);
}

void Vocabulary::apply_locked(const json& record) {
  const auto& kind = record.at("t").get_ref<const std::string&>();
  if (kind == "term") {
    auto t = decode_term(record.at("term"));
    local_seq_ = std::max(local_seq_, numeric_suffix(t.id.value));
    terms_[t.id] = std::move(t);
  } else if (kind == "ticket") {
    auto t = decode_ticket(record.at("ticket"));
    local_seq_ = std::max(local_seq_, numeric_suffix(t.id.value));
    ticket_by_term_[t.term_id] = t.id;
    tickets_[t.id] = std::move(t);
  } else {
    throw Error(ErrorCode::bad_request, "unknown vocabulary record '" + kind + "'");
  }
}

void Vocabulary::clear() {
  std::unique_lock lock(mutex_);
  terms_.clear();
  tickets_.clear();
  ticket_by_term_.clear();
  local_seq_ = 0;
}

}  // namespace sms::vocabulary
