#pragma once

// Bits shared by the command-line tools.

#include <atomic>
#include <chrono>
#include <csignal>
#include <thread>

namespace sdsec::tools {

inline std::atomic<bool> g_stop{false};

/// Blocks until SIGINT or SIGTERM.
inline void wait_for_signal() {
    std::signal(SIGINT, [](int) { g_stop = true; });
    std::signal(SIGTERM, [](int) { g_stop = true; });
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
}

}  // namespace sdsec::tools
