#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "sms/core/model.hpp"
#include "sms/core/validation.hpp"
#include "sms/storage/blob_store.hpp"
#include "sms/storage/journal.hpp"
#include "sms/storage/records.hpp"
#include "sms/storage/search_index.hpp"
#include "sms/temporal/temporal.hpp"
#include "sms/vocabulary/vocabulary.hpp"

namespace sms::storage {

struct StoreOptions {
  // Absent = purely in-memory store.
  std::optional<std::filesystem::path> data_dir;
  std::size_t blob_limit = kDefaultBlobLimit;
  bool sync = true;
  // Check vocabulary references on write. Off only for tests that store
  // records with synthetic term ids.
  bool check_vocabulary = true;
};

struct StoredRevision {
  EntityId entity_id;
  EntityKind kind = EntityKind::device;
  std::int64_t version = 0;
  std::string payload;  // canonical serialization
  TimeInstant updated_at;
  std::optional<EntityId> updated_by;
  // Non-fatal findings of the write (unconfirmed or deprecated terms). Not
  // persisted and not part of equality.
  std::vector<Violation> warnings;

  friend bool operator==(const StoredRevision& a, const StoredRevision& b) {
    return a.entity_id == b.entity_id && a.kind == b.kind && a.version == b.version && a.payload == b.payload &&
           a.updated_at == b.updated_at && a.updated_by == b.updated_by;
  }
};

struct WriteContext {
  std::optional<EntityId> actor;    // contact of the principal
  std::optional<TimeInstant> now;   // defaults to the wall clock
};

// One finding of validate_all().
struct Finding {
  EntityRef entity;
  Violation violation;
};

class Store;

// A group of writes committed as one journal line. Reads inside see the
// transaction's own writes.
class Transaction {
 public:
  StoredRevision put_entity(Entity entity, std::optional<std::int64_t> expected_version,
                            const WriteContext& ctx = {});
  StoredRevision modify(const EntityId& id, const std::function<void(Entity&)>& change,
                        std::optional<std::int64_t> expected_version, const WriteContext& ctx = {});
  StoredRevision add_mount(const EntityId& configuration, MountAction mount, const WriteContext& ctx = {});
  StoredRevision archive(const EntityId& id, std::optional<std::int64_t> expected_version,
                         const WriteContext& ctx = {});

  std::pair<vocabulary::VocabularyTerm, vocabulary::Vocabulary::UpsertOutcome> upsert_term(
      const vocabulary::TermDraft& draft);

  void put_group(const Group& g);
  void put_account(const Account& a);
  void put_api_key(const ApiKey& k);
  void put_pid(const PidRecord& p);

  std::shared_ptr<const Entity> get(const EntityId& id) const;
  std::shared_ptr<const Entity> find_by_natural_key(EntityKind kind, std::string_view key) const;
  std::optional<vocabulary::VocabularyTerm> find_term(vocabulary::Category c, std::string_view term) const;
  EntityId next_id(char prefix);

  struct State;  // opaque

 private:
  friend class Store;
  StoredRevision commit_entity(std::shared_ptr<const Entity> e, std::vector<Violation> warnings);
  void commit_aux(nlohmann::json record);
  Transaction(Store& store, State& state, bool staged);

  Store& store_;
  State& state_;
  bool staged_;
};

class Store {
 public:
  explicit Store(StoreOptions options = {});
  ~Store();
  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  const StoreOptions& options() const { return options_; }
  vocabulary::Vocabulary& vocabulary() { return vocabulary_; }
  const vocabulary::Vocabulary& vocabulary() const { return vocabulary_; }
  BlobStore& blobs() { return *blobs_; }

  // Single-operation writes; each is validated completely before anything is
  // journaled, and durable on return.
  StoredRevision put_entity(Entity entity, std::optional<std::int64_t> expected_version,
                            const WriteContext& ctx = {});
  StoredRevision modify(const EntityId& id, const std::function<void(Entity&)>& change,
                        std::optional<std::int64_t> expected_version, const WriteContext& ctx = {});
  // Adds `mount` to the configuration after checking availability of the
  // child across all configurations, parent containment and cycles.
  StoredRevision mount_transaction(const EntityId& configuration, MountAction mount,
                                   const WriteContext& ctx = {});
  StoredRevision end_mount(const EntityId& configuration, const EntityId& mount, TimeInstant end,
                           const WriteContext& ctx = {});
  // Ends `mount` at `at` and begins a copy with the changes applied.
  StoredRevision modify_mount(const EntityId& configuration, const EntityId& mount, TimeInstant at,
                              const std::function<void(MountAction&)>& change, const WriteContext& ctx = {});
  StoredRevision add_location(const EntityId& configuration, LocationAction location, const WriteContext& ctx = {});
  // Soft delete. Equipment with any mount history cannot be archived.
  StoredRevision archive(const EntityId& id, std::optional<std::int64_t> expected_version,
                         const WriteContext& ctx = {});

  // Runs `fn` against a private copy of the state; commits all of its writes
  // as one journal line, or nothing if it throws.
  void transaction(const std::function<void(Transaction&)>& fn);

  std::shared_ptr<const Entity> get(const EntityId& id) const;
  std::optional<StoredRevision> revision(const EntityId& id, std::int64_t version) const;
  std::vector<StoredRevision> history(const EntityId& id) const;
  std::vector<std::shared_ptr<const Entity>> list(EntityKind kind, bool include_archived = false) const;
  std::shared_ptr<const Entity> find_by_natural_key(EntityKind kind, std::string_view key) const;
  std::size_t count(EntityKind kind, bool include_archived = false) const;
  // Every mount of `child` across all configurations.
  std::vector<temporal::PlacedMount> mounts_of(const EntityId& child) const;
  // Entities that reference the vocabulary term anywhere.
  std::vector<EntityId> entities_referencing(const EntityId& term) const;

  std::optional<Group> group(const GroupId& id) const;
  std::vector<Group> groups() const;
  std::optional<Account> account(const AccountId& id) const;
  std::optional<Account> account_by_username(std::string_view username) const;
  std::vector<Account> accounts() const;
  std::optional<ApiKey> api_key(std::string_view key_id) const;
  std::optional<PidRecord> pid_record(const EntityId& entity) const;
  std::vector<PidRecord> pid_records() const;
  void put_group(const Group& g);
  void put_account(const Account& a);
  void put_api_key(const ApiKey& k);
  void put_pid(const PidRecord& p);

  BlobRef put_blob(std::string_view bytes, std::string media_type) { return blobs_->put(bytes, std::move(media_type)); }
  std::string get_blob(std::string_view hash) const { return blobs_->get(hash); }

  std::vector<SearchHit> search(std::string_view query, std::optional<EntityKind> kind,
                                const std::function<bool(const Entity&)>& can_read) const;
  // Rebuilds every search document (picks up renamed terms and contacts).
  void flush();

  // Re-checks every record and cross-record invariant.
  std::vector<Finding> validate_all() const;

  EntityId next_id(char prefix);
  std::size_t journal_lines() const { return journal_.lines(); }
  std::size_t truncated_bytes() const { return journal_.truncated_bytes(); }

 private:
  friend class Transaction;
  using State = Transaction::State;

  StoredRevision single(const std::function<StoredRevision(Transaction&)>& op);
  void write_line(const std::vector<nlohmann::json>& records);
  void replay_line(const nlohmann::json& line, std::size_t line_no);
  void reindex(const Entity& e);
  SearchDocument document_for(const Entity& e) const;

  StoreOptions options_;
  std::unique_ptr<BlobStore> blobs_;
  vocabulary::Vocabulary vocabulary_;
  Journal journal_;
  int lock_fd_ = -1;
  std::atomic<std::uint64_t> seq_{0};

  mutable std::shared_mutex mutex_;  // guards state_; writers hold it exclusively
  std::unique_ptr<State> state_;
  SearchIndex index_;
};

}  // namespace sms::storage
