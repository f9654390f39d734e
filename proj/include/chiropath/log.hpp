#pragma once

#include <string>

namespace chiropath {

enum class LogLevel { Quiet, Warn, Info, Debug };

void set_log_level(LogLevel level);
LogLevel log_level();

void log_warn(const std::string& message);
void log_info(const std::string& message);
void log_debug(const std::string& message);

}  // namespace chiropath
