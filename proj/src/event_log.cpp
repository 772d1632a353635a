#include "xclick/event_log.hpp"

#include <fstream>
#include <sstream>

#include "xclick/error.hpp"

namespace xclick {
namespace fs = std::filesystem;

namespace {

struct Scan {
  std::vector<Json> events;
  std::uintmax_t complete_bytes = 0;
};

Scan scan(const fs::path& path) {
  Scan s;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, path.string() + ": cannot open event log");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  std::size_t start = 0;
  int line = 0;
  while (start < text.size()) {
    const std::size_t end = text.find('\n', start);
    if (end == std::string::npos) break;  // torn tail
    ++line;
    const std::string_view body(text.data() + start, end - start);
    if (body.find_first_not_of(" \t\r") != std::string_view::npos) {
      try {
        s.events.push_back(Json::parse(body));
      } catch (const Json::parse_error& e) {
        throw Error(ErrorCode::Parse, path.string() + ":" + std::to_string(line) + ": " + e.what());
      }
    }
    start = end + 1;
  }
  s.complete_bytes = start;
  return s;
}

}  // namespace

std::vector<Json> read_event_log(const fs::path& path) { return scan(path).events; }

EventLog::EventLog(fs::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) fs::create_directories(path_.parent_path());
  if (fs::exists(path_)) {
    Scan s = scan(path_);
    if (s.complete_bytes != fs::file_size(path_)) fs::resize_file(path_, s.complete_bytes);
    replayed_ = std::move(s.events);
  }
  file_ = std::fopen(path_.string().c_str(), "ab");
  if (!file_) throw Error(ErrorCode::Io, path_.string() + ": cannot open event log for append");
}

EventLog::~EventLog() {
  if (file_) std::fclose(file_);
}

void EventLog::append(const Json& event) {
  const std::string line = event.dump() + "\n";
  std::lock_guard lock(mutex_);
  if (std::fwrite(line.data(), 1, line.size(), file_) != line.size() || std::fflush(file_) != 0) {
    throw Error(ErrorCode::Io, path_.string() + ": append failed");
  }
}

}  // namespace xclick
