#pragma once

#include <string>

namespace ocean {

enum class LogLevel { kError = 0, kInfo = 1, kDebug = 2 };

/// Level comes from OCEAN_LOG (error|info|debug) unless overridden.
LogLevel log_level();
void set_log_level(LogLevel lvl);

void log_error(const std::string& msg);
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

}  // namespace ocean
