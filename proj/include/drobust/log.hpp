#pragma once

#include <cstdlib>
#include <iostream>
#include <string>

namespace drobust {

enum class LogLevel { Error = 0, Info = 1, Debug = 2 };

/// Verbosity from DROBUST_LOG={error,info,debug}; defaults to error.
inline LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("DROBUST_LOG");
    if (env == nullptr) return LogLevel::Error;
    const std::string v(env);
    if (v == "debug") return LogLevel::Debug;
    if (v == "info") return LogLevel::Info;
    return LogLevel::Error;
  }();
  return level;
}

inline void log_info(const std::string& msg) {
  if (log_level() >= LogLevel::Info) std::cerr << "[info] " << msg << "\n";
}

inline void log_debug(const std::string& msg) {
  if (log_level() >= LogLevel::Debug) std::cerr << "[debug] " << msg << "\n";
}

}  // namespace drobust
