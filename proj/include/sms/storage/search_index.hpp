#pragma once

#include <functional>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "sms/core/ids.hpp"

namespace sms::storage {

// Lower-cased tokens split on anything that is not a letter or digit.
// Non-ASCII bytes count as letters.
std::vector<std::string> tokenize(std::string_view text);

struct SearchDocument {
  EntityId entity_id;
  EntityKind kind = EntityKind::device;
  std::string name;
  std::map<std::string, int> tokens;  // token -> field weight (highest wins)

  void add(std::string_view text, int weight);
};

inline constexpr int kNameWeight = 3;
inline constexpr int kIdentifierWeight = 2;
inline constexpr int kTextWeight = 1;

struct SearchHit {
  EntityRef ref;
  double score = 0;
};

// Inverted index with exact and prefix token matching. Every query token
// must match (AND). Exact matches score twice the field weight, prefix
// matches the field weight; a query equal to the full name adds a bonus.
class SearchIndex {
 public:
  void upsert(SearchDocument doc);
  void remove(const EntityId& id);
  void clear();
  std::size_t size() const;
  bool contains(const EntityId& id) const;

  std::vector<SearchHit> search(std::string_view query, std::optional<EntityKind> kind,
                                const std::function<bool(const EntityRef&)>& visible) const;

 private:
  void remove_locked(const EntityId& id);

  mutable std::shared_mutex mutex_;
  std::unordered_map<EntityId, SearchDocument> docs_;
  std::map<std::string, std::unordered_map<EntityId, int>> postings_;
};

}  // namespace sms::storage
