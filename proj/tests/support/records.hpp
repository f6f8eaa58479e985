#pragma once

// Minimal valid records and a temp directory for store tests.

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

#include "sms/core/model.hpp"
#include "sms/storage/store.hpp"
#include "support/fixtures.hpp"

namespace sms::testing {

inline const GroupId kGroup{"g-lab"};

inline TimeInstant at(const char* s) { return TimeInstant::parse(s); }
inline TimeInterval span_of(const char* b, const char* e = nullptr) {
  return {at(b), e ? std::optional<TimeInstant>(at(e)) : std::nullopt};
}

inline Device device(std::string short_name, Visibility v = Visibility::internal, GroupId g = kGroup) {
  Device d;
  d.short_name = std::move(short_name);
  d.visibility = v;
  d.owner_group = std::move(g);
  return d;
}

inline Platform platform(std::string short_name, Visibility v = Visibility::internal) {
  Platform p;
  p.short_name = std::move(short_name);
  p.visibility = v;
  p.owner_group = kGroup;
  return p;
}

inline Configuration configuration(std::string label) {
  Configuration c;
  c.label = std::move(label);
  c.owner_group = kGroup;
  return c;
}

inline Contact contact(std::string given, std::string family, std::string email) {
  Contact c;
  c.given_name = std::move(given);
  c.family_name = std::move(family);
  c.email = std::move(email);
  return c;
}

inline MountAction mount_of(EntityRef child, std::optional<EntityRef> parent, TimeInterval interval) {
  MountAction m;
  m.child = std::move(child);
  m.parent = std::move(parent);
  m.interval = interval;
  return m;
}

inline EntityRef ref(const storage::StoredRevision& r) { return {r.kind, r.entity_id}; }

inline storage::StoreOptions memory_store(bool check_vocabulary = true) {
  storage::StoreOptions o;
  o.check_vocabulary = check_vocabulary;
  return o;
}

// Accepted term id by label.
inline TermRef term(const storage::Store& s, vocabulary::Category c, std::string_view label) {
  auto t = s.vocabulary().find(c, label);
  if (!t) throw std::runtime_error("missing term " + std::string(label));
  return t->id;
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> n{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("sms-test-" + std::to_string(::getpid()) + "-" + std::to_string(rd()) + "-" + std::to_string(n++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  storage::StoreOptions options(bool sync = false) const {
    storage::StoreOptions o;
    o.data_dir = path_;
    o.sync = sync;
    return o;
  }

 private:
  std::filesystem::path path_;
};

}  // namespace sms::testing
