#pragma once

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>
#include <string_view>

namespace segwave::log {

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };

// Log level comes from the SEGWAVE_LOG environment variable
// (error|warn|info|debug). Default is warn.
inline Level threshold() {
  static const Level level = [] {
    const char* env = std::getenv("SEGWAVE_LOG");
    if (env == nullptr) return Level::warn;
    std::string_view v(env);
    if (v == "error") return Level::error;
    if (v == "warn") return Level::warn;
    if (v == "info") return Level::info;
    if (v == "debug") return Level::debug;
    return Level::warn;
  }();
  return level;
}

inline void emit(Level level, std::string_view tag, const std::string& msg) {
  if (level > threshold()) return;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  std::cerr << "[segwave " << tag << "] " << msg << "\n";
}

inline void error(const std::string& msg) { emit(Level::error, "error", msg); }
inline void warn(const std::string& msg) { emit(Level::warn, "warn", msg); }
inline void info(const std::string& msg) { emit(Level::info, "info", msg); }
inline void debug(const std::string& msg) { emit(Level::debug, "debug", msg); }

}  // namespace segwave::log
