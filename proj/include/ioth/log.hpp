#pragma once

#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>

namespace ioth {

enum class LogLevel { kDebug = 0, kInfo = 1, kWarn = 2, kError = 3, kOff = 4 };

// Threshold comes from the IOTH_LOG environment variable (debug, info, warn,
// error, off). Default is warn so normal runs stay quiet on stderr.
inline LogLevel log_threshold() {
    static const LogLevel level = [] {
        const char* raw = std::getenv("IOTH_LOG");
        if (raw == nullptr) return LogLevel::kWarn;
        const std::string v(raw);
        if (v == "debug") return LogLevel::kDebug;
        if (v == "info") return LogLevel::kInfo;
        if (v == "warn") return LogLevel::kWarn;
        if (v == "error") return LogLevel::kError;
        if (v == "off") return LogLevel::kOff;
        return LogLevel::kWarn;
    }();
    return level;
}

inline void log_line(LogLevel level, const std::string& tag, const std::string& msg) {
    if (level < log_threshold()) return;
    const char* name = "?";
    switch (level) {
        case LogLevel::kDebug: name = "debug"; break;
        case LogLevel::kInfo: name = "info"; break;
        case LogLevel::kWarn: name = "warn"; break;
        case LogLevel::kError: name = "error"; break;
        case LogLevel::kOff: return;
    }
    std::cerr << "[" << name << "] " << tag << ": " << msg << "\n";
}

}  // namespace ioth

#define IOTH_LOG_AT(level, tag, expr)                    \
    do {                                                 \
        if ((level) >= ::ioth::log_threshold()) {        \
            std::ostringstream oss_;                     \
            oss_ << expr;                                \
            ::ioth::log_line((level), (tag), oss_.str());\
        }                                                \
    } while (0)

#define IOTH_DEBUG(tag, expr) IOTH_LOG_AT(::ioth::LogLevel::kDebug, tag, expr)
#define IOTH_INFO(tag, expr) IOTH_LOG_AT(::ioth::LogLevel::kInfo, tag, expr)
#define IOTH_WARN(tag, expr) IOTH_LOG_AT(::ioth::LogLevel::kWarn, tag, expr)
#define IOTH_ERROR(tag, expr) IOTH_LOG_AT(::ioth::LogLevel::kError, tag, expr)
