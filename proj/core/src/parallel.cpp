// SPDX-License-Identifier: Apache-2.0
#include <shoprl/parallel.hpp>

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace shoprl
{

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn)
{
    if (n == 0)
        return;
    if (threads <= 1 || n == 1)
    {
        for (std::size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }

    std::atomic<std::size_t> next { 0 };
    std::atomic<bool> stop { false };
    std::mutex errorMutex;
    std::exception_ptr error;
    std::size_t errorIndex = n;

    auto worker = [&] {
        for (;;)
        {
            auto const i = next.fetch_add(1);
            if (i >= n || stop.load())
                return;
            try
            {
                fn(i);
            }
            catch (...)
            {
                std::lock_guard lock(errorMutex);
                if (i < errorIndex)
                {
                    errorIndex = i;
                    error = std::current_exception();
                }
                stop.store(true);
            }
        }
    };

    auto const extra = std::min(threads, n) - 1;
    {
        std::vector<std::jthread> pool;
        pool.reserve(extra);
        for (std::size_t t = 0; t < extra; ++t)
            pool.emplace_back(worker);
        worker();
    }
    if (error)
        std::rethrow_exception(error);
}

} // namespace shoprl
