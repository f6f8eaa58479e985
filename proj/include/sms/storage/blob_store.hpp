#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

namespace sms::storage {

inline constexpr std::size_t kDefaultBlobLimit = 64ull * 1024 * 1024;

struct BlobRef {
  std::string content_hash;  // lower-case hex SHA-256
  std::size_t size_bytes = 0;
  std::string media_type;

  friend bool operator==(const BlobRef&, const BlobRef&) = default;
};

std::string sha256_hex(std::string_view bytes);

// Content-addressed store. On disk: <dir>/<first two hex>/<hash>; writes go
// through a temporary file and a rename so readers never see partial blobs.
class BlobStore {
 public:
  explicit BlobStore(std::optional<std::filesystem::path> dir = std::nullopt,
                     std::size_t limit = kDefaultBlobLimit);

  BlobRef put(std::string_view bytes, std::string media_type);
  std::string get(std::string_view content_hash) const;
  bool contains(std::string_view content_hash) const;
  std::size_t limit() const { return limit_; }

 private:
  std::filesystem::path path_for(std::string_view hash) const;

  std::optional<std::filesystem::path> dir_;
  std::size_t limit_;
  mutable std::mutex mutex_;
  std::map<std::string, std::string, std::less<>> memory_;
};

}  // namespace sms::storage
