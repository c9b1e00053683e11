// Copyright 2026 The CAL Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cal/journal.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "cal/errors.hpp"

namespace cal {

namespace {

std::string errno_message(const std::string& what, const std::filesystem::path& path) {
  return what + " " + path.string() + ": " + std::strerror(errno);
}

}  // namespace

Journal::Journal(std::filesystem::path path, bool sync_writes)
    : path_(std::move(path)), sync_(sync_writes) {
  fd_ = ::open(path_.c_str(), O_RDWR | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd_ < 0) throw IoError(errno_message("cannot open journal", path_));

  std::ifstream in(path_, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start < bytes.size()) {
    const std::size_t end = bytes.find('\n', start);
    if (end == std::string::npos) break;  // torn tail
    ++line_no;
    const std::string_view line(bytes.data() + start, end - start);
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError("corrupt journal record at line " + std::to_string(line_no) + " of " +
                        path_.string() + ": " + e.what());
    }
    if (!record.is_object()) {
      throw FormatError("journal record at line " + std::to_string(line_no) + " is not an object");
    }
    loaded_.push_back(std::move(record));
    start = end + 1;
  }
  size_ = start;
  discarded_ = bytes.size() - start;
  if (discarded_ > 0) {
    if (::ftruncate(fd_, static_cast<off_t>(size_)) != 0) {
      throw IoError(errno_message("cannot truncate torn journal tail", path_));
    }
    if (sync_) ::fsync(fd_);
  }
}

Journal::~Journal() {
  if (fd_ >= 0) ::close(fd_);
}

void Journal::write_all(std::string_view bytes) {
  while (!bytes.empty()) {
    const ssize_t n = ::write(fd_, bytes.data(), bytes.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      throw IoError(errno_message("cannot write journal", path_));
    }
    bytes.remove_prefix(static_cast<std::size_t>(n));
  }
}

void Journal::rollback() {
  // Best effort; a failure here leaves a torn tail that the next open drops.
  if (::ftruncate(fd_, static_cast<off_t>(size_)) == 0 && sync_) ::fsync(fd_);
}

void Journal::append(const nlohmann::json& record) {
  const std::string line = record.dump() + "\n";
  try {
    if (hook_) hook_("before_write");
    const std::size_t half = line.size() / 2;
    write_all(std::string_view(line).substr(0, half));
    if (hook_) hook_("mid_write");
    write_all(std::string_view(line).substr(half));
    if (hook_) hook_("before_sync");
    if (sync_ && ::fdatasync(fd_) != 0) throw IoError(errno_message("cannot sync journal", path_));
  } catch (...) {
    rollback();
    throw;
  }
  size_ += line.size();
}

}  // namespace cal
