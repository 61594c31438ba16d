#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace evobj {

enum class LogLevel : int { Error = 0, Info = 1, Debug = 2 };

// Level comes from EVOBJ_LOG={error,info,debug}; defaults to info.
inline LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("EVOBJ_LOG");
    if (env == nullptr) return LogLevel::Info;
    if (std::strcmp(env, "error") == 0) return LogLevel::Error;
    if (std::strcmp(env, "debug") == 0) return LogLevel::Debug;
    return LogLevel::Info;
  }();
  return level;
}

template <typename... Args>
void log_at(LogLevel level, const char* fmt, Args... args) {
  if (static_cast<int>(level) > static_cast<int>(log_level())) return;
  const char* tag = level == LogLevel::Error ? "error" : (level == LogLevel::Info ? "info" : "debug");
  std::fprintf(stderr, "[%s] ", tag);
  std::fprintf(stderr, fmt, args...);
  std::fprintf(stderr, "\n");
}

#define EVOBJ_ERROR(...) ::evobj::log_at(::evobj::LogLevel::Error, __VA_ARGS__)
#define EVOBJ_INFO(...) ::evobj::log_at(::evobj::LogLevel::Info, __VA_ARGS__)
#define EVOBJ_DEBUG(...) ::evobj::log_at(::evobj::LogLevel::Debug, __VA_ARGS__)

}  // namespace evobj
