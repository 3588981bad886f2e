#pragma once

// Minimal stderr logger. The threshold is read once from OPTREC_LOG
// (error | info | debug); the default is error.

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string_view>

namespace optrec::log {

enum class Level { error = 0, info = 1, debug = 2 };

inline Level threshold() {
  static const Level level = [] {
    const char* env = std::getenv("OPTREC_LOG");
    if (env == nullptr) return Level::error;
    std::string_view v(env);
    if (v == "debug") return Level::debug;
    if (v == "info") return Level::info;
    return Level::error;
  }();
  return level;
}

inline bool enabled(Level level) { return level <= threshold(); }

template <typename... Args>
void write(Level level, const Args&... args) {
  if (!enabled(level)) return;
  static std::mutex mutex;
  std::ostringstream os;
  switch (level) {
    case Level::error: os << "[optrec error] "; break;
    case Level::info: os << "[optrec info] "; break;
    case Level::debug: os << "[optrec debug] "; break;
  }
  (os << ... << args);
  os << '\n';
  std::lock_guard<std::mutex> lock(mutex);
  std::cerr << os.str();
}

template <typename... Args>
void error(const Args&... args) { write(Level::error, args...); }
template <typename... Args>
void info(const Args&... args) { write(Level::info, args...); }
template <typename... Args>
void debug(const Args&... args) { write(Level::debug, args...); }

}  // namespace optrec::log
