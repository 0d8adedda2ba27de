#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>

// Logging controlled by the OPERON_LOG environment variable:
// "error" (default), "info", or "debug". Messages go to stderr.
namespace operon::log {

enum class Level : int { kError = 0, kInfo = 1, kDebug = 2 };

inline Level level() {
    static const Level lvl = [] {
        const char* env = std::getenv("OPERON_LOG");
        if (env == nullptr) return Level::kError;
        if (std::strcmp(env, "debug") == 0) return Level::kDebug;
        if (std::strcmp(env, "info") == 0) return Level::kInfo;
        return Level::kError;
    }();
    return lvl;
}

template <typename... Args>
void error(const char* fmt, Args... args) {
    std::fprintf(stderr, "[error] ");
    std::fprintf(stderr, fmt, args...);
    std::fprintf(stderr, "\n");
}

template <typename... Args>
void info(const char* fmt, Args... args) {
    if (level() >= Level::kInfo) {
        std::fprintf(stderr, "[info] ");
        std::fprintf(stderr, fmt, args...);
        std::fprintf(stderr, "\n");
    }
}

template <typename... Args>
void debug(const char* fmt, Args... args) {
    if (level() >= Level::kDebug) {
        std::fprintf(stderr, "[debug] ");
        std::fprintf(stderr, fmt, args...);
        std::fprintf(stderr, "\n");
    }
}

}  // namespace operon::log
