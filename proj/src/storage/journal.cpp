#include "sms/storage/journal.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include "sms/core/errors.hpp"

namespace sms::storage {

namespace {

[[noreturn]] void io_error(const std::string& what) {
  throw Error(ErrorCode::internal, what + ": " + std::strerror(errno));
}

}  // namespace

Journal::~Journal() {
  if (fd_ >= 0) ::close(fd_);
}

void Journal::open(const std::filesystem::path& path, const Replay& replay, bool sync) {
  std::lock_guard lock(mutex_);
  sync_ = sync;
  std::string data;
  {
    std::ifstream in(path, std::ios::binary);
    if (in) {
      std::ostringstream ss;
      ss << in.rdbuf();
      data = ss.str();
    }
  }
  std::size_t pos = 0, good = 0, line_no = 0;
  while (pos < data.size()) {
    auto nl = data.find('\n', pos);
    if (nl == std::string::npos) break;  // torn tail
    ++line_no;
    std::string_view line(data.data() + pos, nl - pos);
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      if (nl + 1 < data.size())
        throw Error(ErrorCode::inconsistent_state,
                    "journal " + path.string() + " is corrupt at line " + std::to_string(line_no));
      break;  // a garbled final line is a torn write
    }
    replay(doc, line_no);
    ++lines_;
    pos = nl + 1;
    good = pos;
  }
  truncated_ = data.size() - good;

  fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT | O_CLOEXEC, 0644);
  if (fd_ < 0) io_error("cannot open " + path.string());
  if (truncated_ > 0 && ::ftruncate(fd_, static_cast<off_t>(good)) != 0) io_error("cannot truncate journal");
  if (::lseek(fd_, static_cast<off_t>(good), SEEK_SET) < 0) io_error("cannot seek journal");
}

void Journal::append(const nlohmann::json& line) {
  std::string text = line.dump() + "\n";
  std::lock_guard lock(mutex_);
  if (fd_ < 0) {
    ++lines_;
    return;
  }
  const char* p = text.data();
  std::size_t left = text.size();
  while (left > 0) {
    auto n = ::write(fd_, p, left);
    if (n < 0) {
      if (errno == EINTR) continue;
      io_error("journal write failed");
    }
    p += n;
    left -= static_cast<std::size_t>(n);
  }
  if (sync_ && ::fdatasync(fd_) != 0) io_error("journal sync failed");
  ++lines_;
}

}  // namespace sms::storage
