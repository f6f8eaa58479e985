#pragma once

#include <string>
#include <vector>

namespace sms {

// One broken invariant. `path` is a JSON-pointer into the canonical record
// ("/measured_quantities/0/range_min"); `code` is stable and machine-readable.
struct Violation {
  std::string path;
  std::string code;
  std::string message;
  bool warning = false;

  friend bool operator==(const Violation&, const Violation&) = default;
};

struct ValidationReport {
  std::vector<Violation> violations;

  // Warnings (e.g. references to unconfirmed vocabulary terms) do not fail a
  // record.
  bool ok() const {
    for (const auto& v : violations) {
      if (!v.warning) return false;
    }
    return true;
  }
  bool has(std::string_view code) const {
    for (const auto& v : violations) {
      if (v.code == code) return true;
    }
    return false;
  }
  std::size_t error_count() const {
    std::size_t n = 0;
    for (const auto& v : violations) n += v.warning ? 0 : 1;
    return n;
  }

  void add(std::string path, std::string code, std::string message) {
    violations.push_back({std::move(path), std::move(code), std::move(message), false});
  }
  void warn(std::string path, std::string code, std::string message) {
    violations.push_back({std::move(path), std::move(code), std::move(message), true});
  }
  void merge(const ValidationReport& other) {
    violations.insert(violations.end(), other.violations.begin(), other.violations.end());
  }

  std::string summary() const;
};

}  // namespace sms
