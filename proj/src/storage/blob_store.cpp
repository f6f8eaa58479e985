#include "sms/storage/blob_store.hpp"

#include <openssl/evp.h>

#include <atomic>
#include <fstream>
#include <sstream>

#include "sms/core/errors.hpp"

namespace sms::storage {

namespace {

bool is_hash(std::string_view h) {
  if (h.size() != 64) return false;
  for (char c : h) {
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
  }
  return true;
}

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorCode::internal, "sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

BlobStore::BlobStore(std::optional<std::filesystem::path> dir, std::size_t limit)
    : dir_(std::move(dir)), limit_(limit) {
  if (dir_) std::filesystem::create_directories(*dir_);
}

std::filesystem::path BlobStore::path_for(std::string_view hash) const {
  return *dir_ / std::string(hash.substr(0, 2)) / std::string(hash);
}

BlobRef BlobStore::put(std::string_view bytes, std::string media_type) {
  if (bytes.size() > limit_) {
    throw Error(ErrorCode::too_large,
                "blob of " + std::to_string(bytes.size()) + " bytes exceeds the limit of " + std::to_string(limit_),
                nlohmann::json{{"limit", limit_}, {"size", bytes.size()}});
  }
  BlobRef ref{sha256_hex(bytes), bytes.size(), std::move(media_type)};
  std::lock_guard lock(mutex_);
  if (!dir_) {
    memory_.try_emplace(ref.content_hash, bytes);
    return ref;
  }
  auto target = path_for(ref.content_hash);
  if (std::filesystem::exists(target)) return ref;
  std::filesystem::create_directories(target.parent_path());
  static std::atomic<unsigned> counter{0};
  auto tmp = target;
  tmp += ".tmp" + std::to_string(counter++);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw Error(ErrorCode::internal, "cannot write blob " + tmp.string());
  }
  std::filesystem::rename(tmp, target);
  return ref;
}

std::string BlobStore::get(std::string_view hash) const {
  if (!is_hash(hash)) throw Error(ErrorCode::not_found, "no blob " + std::string(hash));
  std::lock_guard lock(mutex_);
  if (!dir_) {
    auto it = memory_.find(hash);
    if (it == memory_.end()) throw Error(ErrorCode::not_found, "no blob " + std::string(hash));
    return it->second;
  }
  std::ifstream in(path_for(hash), std::ios::binary);
  if (!in) throw Error(ErrorCode::not_found, "no blob " + std::string(hash));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool BlobStore::contains(std::string_view hash) const {
  if (!is_hash(hash)) return false;
  std::lock_guard lock(mutex_);
  if (!dir_) return memory_.count(hash) > 0;
  return std::filesystem::exists(path_for(hash));
}

}  // namespace sms::storage
