#pragma once

#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sms/core/ids.hpp"
#include "sms/core/time.hpp"

namespace sms::vocabulary {

enum class Category {
  equipment_type,
  manufacturer,
  contact_role,
  unit,
  measured_quantity,
  compartment,
  sampling_media,
  action_type,
  platform_type,
  site_usage,
};

inline constexpr Category kAllCategories[] = {
    Category::equipment_type, Category::manufacturer,   Category::contact_role, Category::unit,
    Category::measured_quantity, Category::compartment, Category::sampling_media, Category::action_type,
    Category::platform_type,  Category::site_usage,
};

std::string_view to_string(Category c);
std::optional<Category> category_from_string(std::string_view s);

enum class TermStatus { proposed, accepted, rejected, deprecated };

std::string_view to_string(TermStatus s);
std::optional<TermStatus> term_status_from_string(std::string_view s);

struct VocabularyTerm {
  EntityId id;
  Category category = Category::equipment_type;
  std::string term;
  std::string definition;
  std::string provenance;
  std::optional<std::string> provenance_uri;
  std::optional<std::string> global_provenance;
  std::vector<std::string> synonyms;
  TermStatus status = TermStatus::proposed;
  std::string note_for_curator;

  friend bool operator==(const VocabularyTerm&, const VocabularyTerm&) = default;
};

enum class TicketState { open, in_review, accepted, rejected };

std::string_view to_string(TicketState s);

struct TicketMessage {
  EntityId author;
  TimeInstant at;
  std::string message;

  friend bool operator==(const TicketMessage&, const TicketMessage&) = default;
};

struct CurationTicket {
  EntityId id;
  EntityId term_id;
  EntityId submitted_by;
  TimeInstant submitted_at;
  TicketState state = TicketState::open;
  std::vector<TicketMessage> discussion;  // append-only

  bool is_closed() const { return state == TicketState::accepted || state == TicketState::rejected; }

  friend bool operator==(const CurationTicket&, const CurationTicket&) = default;
};

// Fields a user submits when proposing (or an importer supplies).
struct TermDraft {
  Category category = Category::equipment_type;
  std::string term;
  std::string definition;
  std::string provenance;
  std::optional<std::string> provenance_uri;
  std::optional<std::string> global_provenance;
  std::vector<std::string> synonyms;
  std::string note_for_curator;
};

struct TermEdits {
  std::optional<std::string> term;
  std::optional<std::string> definition;
  std::optional<std::string> provenance;
  std::optional<std::string> provenance_uri;
  std::optional<std::string> global_provenance;
  std::optional<std::vector<std::string>> synonyms;
};

struct TermQuery {
  std::optional<Category> category;
  std::optional<TermStatus> status;
  std::optional<std::string> text;  // case-insensitive substring of term or synonym
  std::size_t page = 1;
  std::size_t page_size = 50;
};

struct TermPage {
  std::vector<VocabularyTerm> items;
  std::size_t total = 0;
  std::size_t page = 1;
  std::size_t page_size = 50;
};

struct Proposal {
  VocabularyTerm term;
  CurationTicket ticket;
};

enum class Decision { accept, reject };

struct CurationResult {
  VocabularyTerm term;
  CurationTicket ticket;
  std::vector<EntityId> referencing_entities;  // reported on reject
};

// Outcome of checking a reference held by an entity.
enum class RefState { ok, unconfirmed, deprecated, rejected, unknown, wrong_category };

struct ImportRow {
  std::size_t line = 0;
  TermDraft draft;
};

struct ImportSummary {
  std::size_t created = 0;
  std::size_t updated = 0;
  std::size_t unchanged = 0;
  std::size_t skipped = 0;
  std::vector<std::string> warnings;
};

nlohmann::json encode(const VocabularyTerm& t);
nlohmann::json encode(const CurationTicket& t);
VocabularyTerm decode_term(const nlohmann::json& j);
CurationTicket decode_ticket(const nlohmann::json& j);
// Accepts the same field names as the term record, minus id and status.
TermDraft decode_draft(const nlohmann::json& j, const std::string& path = "");

// Terms are case-insensitively unique per category among non-rejected terms.
std::string fold_case(std::string_view s);

class Vocabulary {
 public:
  // Receives the records of one write as a unit; throwing aborts the write.
  using Sink = std::function<void(const std::vector<nlohmann::json>& records)>;
  using ReferenceFinder = std::function<std::vector<EntityId>(const EntityId& term)>;
  enum class TicketEvent { opened, commented, review_started, closed };
  using TicketHook = std::function<void(TicketEvent, const CurationTicket&, const VocabularyTerm&)>;
  using IdSource = std::function<EntityId(char prefix)>;

  Vocabulary();

  void set_sink(Sink sink);
  void set_reference_finder(ReferenceFinder finder);
  void set_ticket_hook(TicketHook hook);
  void set_id_source(IdSource ids);

  TermPage list_terms(const TermQuery& query) const;
  std::optional<VocabularyTerm> get_term(const EntityId& id) const;
  std::optional<CurationTicket> get_ticket(const EntityId& id) const;
  std::optional<CurationTicket> ticket_for_term(const EntityId& term) const;
  std::vector<CurationTicket> tickets(std::optional<TicketState> state = std::nullopt) const;
  std::vector<VocabularyTerm> all_terms() const;
  std::size_t size() const;

  // Non-rejected term with this (category, term), if any.
  std::optional<VocabularyTerm> find(Category category, std::string_view term) const;

  // Only accepted terms resolve.
  std::optional<VocabularyTerm> resolve(const EntityId& id) const;
  RefState check_reference(const EntityId& id, std::optional<Category> expected) const;

  Proposal propose_term(const TermDraft& draft, const EntityId& submitter, TimeInstant now = TimeInstant::now());
  CurationTicket comment(const EntityId& ticket, const EntityId& author, std::string message,
                         TimeInstant now = TimeInstant::now());
  CurationTicket start_review(const EntityId& ticket, const EntityId& curator, bool curator_role,
                              TimeInstant now = TimeInstant::now());
  CurationResult curate(const EntityId& ticket, Decision decision, const std::optional<TermEdits>& edits,
                        const EntityId& curator, bool curator_role, TimeInstant now = TimeInstant::now());
  VocabularyTerm deprecate(const EntityId& term, bool curator_role);

  // Creates or updates an accepted term keyed by (category, term). A pending
  // proposal with the same key is accepted and its ticket closed.
  enum class UpsertOutcome { created, updated, unchanged };
  std::pair<VocabularyTerm, UpsertOutcome> upsert_accepted(const TermDraft& draft,
                                                          TimeInstant now = TimeInstant::now());
  ImportSummary import_terms(const std::vector<ImportRow>& rows);

  // The records upsert_accepted would write, without writing them. The
  // caller persists them and feeds them back through apply().
  struct PreparedUpsert {
    VocabularyTerm term;
    UpsertOutcome outcome = UpsertOutcome::unchanged;
    std::vector<nlohmann::json> records;
  };
  PreparedUpsert prepare_upsert(const TermDraft& draft, TimeInstant now = TimeInstant::now());

  // Deterministic SKOS document of the accepted terms.
  std::string export_skos(std::string_view base_url) const;

  // Journal replay; does not call the sink.
  void apply(const nlohmann::json& record);
  void clear();

 private:
  EntityId next_id(char prefix);
  void emit(const std::vector<nlohmann::json>& records);
  const VocabularyTerm* find_locked(Category category, std::string_view term, const EntityId* except) const;
  void check_draft(const TermDraft& draft) const;
  PreparedUpsert prepare_locked(const TermDraft& draft, TimeInstant now);
  void apply_locked(const nlohmann::json& record);

  mutable std::shared_mutex mutex_;
  std::map<EntityId, VocabularyTerm> terms_;
  std::map<EntityId, CurationTicket> tickets_;
  std::map<EntityId, EntityId> ticket_by_term_;
  std::uint64_t local_seq_ = 0;
  Sink sink_;
  ReferenceFinder finder_;
  TicketHook hook_;
  IdSource ids_;
};

}  // namespace sms::vocabulary
