#include "sms/storage/search_index.hpp"

#include <algorithm>
#include <mutex>
#include <set>

namespace sms::storage {

namespace {

constexpr double kFullNameBonus = 100;

std::string joined(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u) || u >= 0x80) {
      cur += static_cast<char>(std::tolower(u));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

void SearchDocument::add(std::string_view text, int weight) {
  for (auto& t : tokenize(text)) {
    auto& w = tokens[t];
    w = std::max(w, weight);
  }
}

void SearchIndex::remove_locked(const EntityId& id) {
  auto it = docs_.find(id);
  if (it == docs_.end()) return;
  for (const auto& [token, _] : it->second.tokens) {
    auto p = postings_.find(token);
    if (p == postings_.end()) continue;
    p->second.erase(id);
    if (p->second.empty()) postings_.erase(p);
  }
  docs_.erase(it);
}

void SearchIndex::upsert(SearchDocument doc) {
  std::unique_lock lock(mutex_);
  remove_locked(doc.entity_id);
  for (const auto& [token, weight] : doc.tokens) postings_[token][doc.entity_id] = weight;
  auto id = doc.entity_id;
  docs_.emplace(std::move(id), std::move(doc));
}

void SearchIndex::remove(const EntityId& id) {
  std::unique_lock lock(mutex_);
  remove_locked(id);
}

void SearchIndex::clear() {
  std::unique_lock lock(mutex_);
  docs_.clear();
  postings_.clear();
}

std::size_t SearchIndex::size() const {
  std::shared_lock lock(mutex_);
  return docs_.size();
}

bool SearchIndex::contains(const EntityId& id) const {
  std::shared_lock lock(mutex_);
  return docs_.count(id) > 0;
}

std::vector<SearchHit> SearchIndex::search(std::string_view query, std::optional<EntityKind> kind,
                                           const std::function<bool(const EntityRef&)>& visible) const {
  auto terms = tokenize(query);
  if (terms.empty()) return {};
  std::sort(terms.begin(), terms.end());
  terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
  auto full = joined(tokenize(query));

  std::shared_lock lock(mutex_);
  // Per query token: best score for each matching document.
  std::unordered_map<EntityId, double> total;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const auto& q = terms[i];
    std::unordered_map<EntityId, double> best;
    for (auto it = postings_.lower_bound(q); it != postings_.end() && it->first.compare(0, q.size(), q) == 0; ++it) {
      bool exact = it->first.size() == q.size();
      for (const auto& [id, weight] : it->second) {
        double s = exact ? 2.0 * weight : weight;
        auto& b = best[id];
        b = std::max(b, s);
      }
    }
    if (i == 0) {
      total = std::move(best);
    } else {
      std::unordered_map<EntityId, double> next;
      for (const auto& [id, s] : total) {
        auto b = best.find(id);
        if (b != best.end()) next.emplace(id, s + b->second);
      }
      total = std::move(next);
    }
    if (total.empty()) return {};
  }

  std::vector<SearchHit> hits;
  for (const auto& [id, score] : total) {
    const auto& doc = docs_.at(id);
    if (kind && doc.kind != *kind) continue;
    EntityRef ref{doc.kind, id};
    if (visible && !visible(ref)) continue;
    double s = score;
    if (joined(tokenize(doc.name)) == full) s += kFullNameBonus;
    hits.push_back({ref, s});
  }
  std::sort(hits.begin(), hits.end(), [](const SearchHit& a, const SearchHit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.ref.id < b.ref.id;
  });
  return hits;
}

}  // namespace sms::storage
