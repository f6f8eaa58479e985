#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>

#include <nlohmann/json.hpp>

namespace sms::storage {

// Append-only log with one JSON document per line. A line is committed once
// its trailing newline is on disk; a torn last line is dropped on open.
class Journal {
 public:
  using Replay = std::function<void(const nlohmann::json& line, std::size_t line_no)>;

  // In-memory journal: appends are accepted and discarded.
  Journal() = default;
  ~Journal();
  Journal(const Journal&) = delete;
  Journal& operator=(const Journal&) = delete;

  // Replays every committed line, truncates a torn tail, then opens for
  // appending. Corruption before the last line raises inconsistent_state.
  void open(const std::filesystem::path& path, const Replay& replay, bool sync = true);

  void append(const nlohmann::json& line);

  bool persistent() const { return fd_ >= 0; }
  std::size_t lines() const { return lines_; }
  // Bytes dropped from a torn tail by the last open().
  std::size_t truncated_bytes() const { return truncated_; }

 private:
  std::mutex mutex_;
  int fd_ = -1;
  bool sync_ = true;
  std::size_t lines_ = 0;
  std::size_t truncated_ = 0;
};

}  // namespace sms::storage
