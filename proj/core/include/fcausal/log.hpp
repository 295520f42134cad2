#pragma once

#include <string_view>

namespace fcausal {

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

/// Level from the FC_LOG environment variable (error|warn|info|debug);
/// defaults to info. Read once per process.
LogLevel log_level();
void set_log_level(LogLevel level);
void log(LogLevel level, std::string_view message);

}  // namespace fcausal
