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

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace cal {

/// Append-only file of JSON records, one per line. A record counts only
/// once its terminating newline is on disk; a torn trailing record is cut
/// off when the journal is opened.
class Journal {
 public:
  /// Called at "before_write", "mid_write" and "before_sync" during append.
  /// Throwing from the hook aborts the append and rolls the file back.
  using FaultHook = std::function<void(std::string_view stage)>;

  /// Opens (creating if needed) and loads every complete record. Throws
  /// FormatError for a complete line that is not a JSON object.
  explicit Journal(std::filesystem::path path, bool sync_writes = true);
  ~Journal();

  Journal(const Journal&) = delete;
  Journal& operator=(const Journal&) = delete;

  /// Records read at open time, in file order. Moved out by the caller.
  std::vector<nlohmann::json> take_loaded() { return std::move(loaded_); }

  /// Durable before return. On any failure the file is truncated back to
  /// its previous length and the exception propagates.
  void append(const nlohmann::json& record);

  std::uint64_t size_bytes() const { return size_; }
  /// Bytes discarded from a torn tail at open time.
  std::uint64_t discarded_bytes() const { return discarded_; }
  const std::filesystem::path& path() const { return path_; }
  void set_fault_hook(FaultHook hook) { hook_ = std::move(hook); }

 private:
  void write_all(std::string_view bytes);
  void rollback();

  std::filesystem::path path_;
  bool sync_;
  int fd_ = -1;
  std::uint64_t size_ = 0;
  std::uint64_t discarded_ = 0;
  std::vector<nlohmann::json> loaded_;
  FaultHook hook_;
};

}  // namespace cal
