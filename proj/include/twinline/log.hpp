// Minimal stderr logger gated by the TWINLINE_LOG environment variable
// (error, warn, info, debug; default warn).
#pragma once

#include <cstdlib>
#include <iostream>
#include <string>

namespace twinline {

enum class LogLevel { error = 0, warn = 1, info = 2, debug = 3 };

inline LogLevel log_level() {
    static const LogLevel level = [] {
        const char* env = std::getenv("TWINLINE_LOG");
        if (!env) return LogLevel::warn;
        const std::string v(env);
        if (v == "error") return LogLevel::error;
        if (v == "warn") return LogLevel::warn;
        if (v == "info") return LogLevel::info;
        if (v == "debug") return LogLevel::debug;
        return LogLevel::warn;
    }();
    return level;
}

inline void log(LogLevel level, const std::string& msg) {
    if (level > log_level()) return;
    const char* tag = level == LogLevel::error  ? "error"
                      : level == LogLevel::warn ? "warn"
                      : level == LogLevel::info ? "info"
                                                : "debug";
    std::cerr << "[" << tag << "] " << msg << "\n";
}

}  // namespace twinline
