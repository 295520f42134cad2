#include "fcausal/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

namespace fcausal {
namespace {

LogLevel parse_env() {
  const char* raw = std::getenv("FC_LOG");
  if (raw == nullptr) return LogLevel::Info;
  const std::string v(raw);
  if (v == "error") return LogLevel::Error;
  if (v == "warn") return LogLevel::Warn;
  if (v == "debug") return LogLevel::Debug;
  return LogLevel::Info;
}

std::atomic<int>& level_storage() {
  static std::atomic<int> level{static_cast<int>(parse_env())};
  return level;
}

std::string_view tag(LogLevel level) {
  switch (level) {
    case LogLevel::Error: return "error";
    case LogLevel::Warn: return "warn";
    case LogLevel::Info: return "info";
    case LogLevel::Debug: return "debug";
  }
  return "?";
}

}  // namespace

LogLevel log_level() { return static_cast<LogLevel>(level_storage().load()); }

void set_log_level(LogLevel level) { level_storage().store(static_cast<int>(level)); }

void log(LogLevel level, std::string_view message) {
  if (static_cast<int>(level) > level_storage().load()) return;
  static std::mutex mu;
  std::lock_guard lock(mu);
  std::cerr << "[fcausal " << tag(level) << "] " << message << '\n';
}

}  // namespace fcausal
