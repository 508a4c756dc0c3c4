#pragma once
// Minimal stderr logger gated by the NLCH_LOG environment variable
// (error | info | debug). Defaults to info.

namespace nlch {

enum class LogLevel { error = 0, info = 1, debug = 2 };

void log_init_from_env();
void set_log_level(LogLevel lv);
LogLevel log_level();
bool log_enabled(LogLevel lv);
void logf(LogLevel lv, const char* fmt, ...) __attribute__((format(printf, 2, 3)));

} // namespace nlch
