#include "nlch/log.hpp"

#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace nlch {

namespace {
LogLevel g_level = LogLevel::info;
}

void log_init_from_env() {
    const char* e = std::getenv("NLCH_LOG");
    if (!e) return;
    if (std::strcmp(e, "error") == 0) g_level = LogLevel::error;
    else if (std::strcmp(e, "info") == 0) g_level = LogLevel::info;
    else if (std::strcmp(e, "debug") == 0) g_level = LogLevel::debug;
}

void set_log_level(LogLevel lv) { g_level = lv; }
LogLevel log_level() { return g_level; }
bool log_enabled(LogLevel lv) { return int(lv) <= int(g_level); }

void logf(LogLevel lv, const char* fmt, ...) {
    if (!log_enabled(lv)) return;
    std::va_list ap;
    va_start(ap, fmt);
    std::vfprintf(stderr, fmt, ap);
    std::fputc('\n', stderr);
    va_end(ap);
}

} // namespace nlch
