#pragma once

#include <fstream>
#include <memory>
#include <mutex>
#include <ostream>
#include <string>

namespace robotaxi {

/// Append-only JSON-lines sink shared across threads. Each append is one line.
class EventLog {
 public:
  explicit EventLog(std::ostream& out) : out_(&out) {}
  /// Opens `path` for appending; throws std::runtime_error on failure.
  static std::unique_ptr<EventLog> open_file(const std::string& path);

  void append(const std::string& line);
  void flush();

 private:
  EventLog() = default;

  std::mutex mu_;
  std::unique_ptr<std::ofstream> owned_;
  std::ostream* out_ = nullptr;
};

}  // namespace robotaxi
