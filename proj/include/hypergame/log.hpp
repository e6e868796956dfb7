#pragma once

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

namespace hypergame {

enum class LogLevel { error = 0, info = 1, debug = 2 };

namespace detail {
inline LogLevel& log_level_ref() {
    static LogLevel level = [] {
        const char* env = std::getenv("HYPERGAME_OPT_LOG");
        if (!env) return LogLevel::error;
        std::string s(env);
        if (s == "debug") return LogLevel::debug;
        if (s == "info") return LogLevel::info;
        return LogLevel::error;
    }();
    return level;
}
inline std::mutex& log_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace detail

inline LogLevel log_level() { return detail::log_level_ref(); }
inline void set_log_level(LogLevel level) { detail::log_level_ref() = level; }

// Returns false for unrecognised names.
inline bool parse_log_level(const std::string& s, LogLevel& out) {
    if (s == "error") out = LogLevel::error;
    else if (s == "info") out = LogLevel::info;
    else if (s == "debug") out = LogLevel::debug;
    else return false;
    return true;
}

template <typename... Args>
void log(LogLevel level, const Args&... args) {
    if (static_cast<int>(level) > static_cast<int>(log_level())) return;
    std::lock_guard<std::mutex> lock(detail::log_mutex());
    const char* tag = level == LogLevel::error ? "error: " : level == LogLevel::info ? "info: " : "debug: ";
    std::cerr << tag;
    (std::cerr << ... << args);
    std::cerr << '\n';
}

}  // namespace hypergame
