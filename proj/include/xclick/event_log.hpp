#pragma once

#include <cstdio>
#include <filesystem>
#include <mutex>
#include <vector>

#include "xclick/json_io.hpp"

namespace xclick {

// Append-only JSON-lines file. One writer appends at a time; each line is
// flushed before append() returns.
class EventLog {
 public:
  // Creates the file if missing. A torn final line (no newline) left by a
  // crash is dropped.
  explicit EventLog(std::filesystem::path path);
  ~EventLog();
  EventLog(const EventLog&) = delete;
  EventLog& operator=(const EventLog&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }

  // Events read at open time.
  const std::vector<Json>& replayed() const noexcept { return replayed_; }

  void append(const Json& event);

 private:
  std::filesystem::path path_;
  std::FILE* file_ = nullptr;
  std::mutex mutex_;
  std::vector<Json> replayed_;
};

// Reads every complete line; a torn final line is ignored. Throws
// Error(Parse) naming the line for malformed complete lines.
std::vector<Json> read_event_log(const std::filesystem::path& path);

}  // namespace xclick
