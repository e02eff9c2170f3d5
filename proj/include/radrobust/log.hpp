#pragma once

#include <functional>
#include <iostream>
#include <mutex>
#include <string>

namespace radrobust::log {

enum class Level { debug, info, warn };

using Sink = std::function<void(Level, const std::string&)>;

namespace detail {
inline Level& threshold() {
  static Level level = Level::warn;
  return level;
}
inline Sink& sink() {
  static Sink s = [](Level level, const std::string& msg) {
    static std::mutex mu;
    std::lock_guard lock(mu);
    const char* tag = level == Level::warn ? "warning" : level == Level::info ? "info" : "debug";
    std::clog << "[radrobust " << tag << "] " << msg << '\n';
  };
  return s;
}
}  // namespace detail

inline void set_sink(Sink s) { detail::sink() = std::move(s); }
inline void set_level(Level level) { detail::threshold() = level; }

inline void emit(Level level, const std::string& msg) {
  if (level >= detail::threshold()) detail::sink()(level, msg);
}
inline void warn(const std::string& msg) { emit(Level::warn, msg); }
inline void info(const std::string& msg) { emit(Level::info, msg); }
inline void debug(const std::string& msg) { emit(Level::debug, msg); }

}  // namespace radrobust::log
