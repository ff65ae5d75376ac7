#include "roughsing/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace roughsing {

namespace {
std::atomic<int> g_threads{1};
thread_local bool g_inside_pool = false;
}

void set_thread_count(int n) { g_threads.store(std::max(1, n)); }

int thread_count() { return g_threads.load(); }

void parallel_for(std::size_t begin, std::size_t end,
                  const std::function<void(std::size_t)>& body) {
    const std::size_t count = end > begin ? end - begin : 0;
    const int workers = static_cast<int>(std::min<std::size_t>(
        static_cast<std::size_t>(thread_count()), count));
    // nested calls run serially inside their worker
    if (workers <= 1 || g_inside_pool) {
        for (std::size_t i = begin; i < end; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    std::mutex fail_mutex;
    std::exception_ptr failure;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            g_inside_pool = true;
            try {
                for (std::size_t i = begin + static_cast<std::size_t>(w); i < end;
                     i += static_cast<std::size_t>(workers))
                    body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(fail_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

} // namespace roughsing
