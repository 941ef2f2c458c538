// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <string_view>

namespace nfvs::log {

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };

/// Verbosity from NFISAC_LOG (error|warn|info|debug); warn when unset.
inline Level threshold() {
    static const Level level = [] {
        const char* env = std::getenv("NFISAC_LOG");
        if (env == nullptr) return Level::warn;
        const std::string_view v(env);
        if (v == "error") return Level::error;
        if (v == "info") return Level::info;
        if (v == "debug") return Level::debug;
        return Level::warn;
    }();
    return level;
}

template <class... Args>
void write(Level level, std::string_view tag, const Args&... args) {
    if (static_cast<int>(level) > static_cast<int>(threshold())) return;
    std::ostringstream os;
    os << "[nfvs " << tag << "] ";
    (os << ... << args);
    std::cerr << os.str() << '\n';
}

template <class... Args> void error(const Args&... a) { write(Level::error, "error", a...); }
template <class... Args> void warn(const Args&... a) { write(Level::warn, "warn", a...); }
template <class... Args> void info(const Args&... a) { write(Level::info, "info", a...); }
template <class... Args> void debug(const Args&... a) { write(Level::debug, "debug", a...); }

} // namespace nfvs::log
