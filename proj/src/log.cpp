#include "chiropath/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace chiropath {

namespace {

std::atomic<LogLevel> g_level{LogLevel::Warn};
std::mutex g_mutex;

void emit(LogLevel level, const char* tag, const std::string& message) {
  if (g_level.load() < level) return;
  std::lock_guard lock(g_mutex);
  std::cerr << "chiropath: " << tag << message << '\n';
}

}  // namespace

void set_log_level(LogLevel level) { g_level = level; }
LogLevel log_level() { return g_level; }

void log_warn(const std::string& message) { emit(LogLevel::Warn, "warning: ", message); }
void log_info(const std::string& message) { emit(LogLevel::Info, "", message); }
void log_debug(const std::string& message) { emit(LogLevel::Debug, "debug: ", message); }

}  // namespace chiropath
