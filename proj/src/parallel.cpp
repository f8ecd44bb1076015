#include "mwlil/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace mwlil {

int resolve_threads(int requested) {
    if (const char* env = std::getenv("MWLIL_THREADS"); env && *env) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (*end != '\0' || v < 1 || v > 4096)
            throw std::invalid_argument("MWLIL_THREADS must be a positive integer, got '" +
                                        std::string(env) + "'");
        return static_cast<int>(v);
    }
    if (requested < 0) throw std::invalid_argument("thread count must be >= 0");
    if (requested == 0) return std::max(1u, std::thread::hardware_concurrency());
    return requested;
}

void parallel_for(std::int64_t count, int threads, const std::function<void(std::int64_t)>& body) {
    if (count <= 0) return;
    const auto workers = static_cast<std::int64_t>(std::clamp<std::int64_t>(threads, 1, count));
    if (workers == 1) {
        for (std::int64_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::int64_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto run = [&] {
        for (;;) {
            if (failed.load(std::memory_order_relaxed)) return;
            const std::int64_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                failed = true;
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::int64_t t = 1; t < workers; ++t) pool.emplace_back(run);
    run();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace mwlil
