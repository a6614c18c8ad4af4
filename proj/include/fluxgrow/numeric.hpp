#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace fluxgrow
{
    inline constexpr double pi = std::numbers::pi;

    /// ln(n!) via log-gamma; exact for the small arguments used throughout.
    inline double log_factorial(int n)
    {
        if (n < 0)
            throw std::domain_error("log_factorial: negative argument " + std::to_string(n));
        return std::lgamma(static_cast<double>(n) + 1.0);
    }

    inline double factorial(int n) { return std::exp(log_factorial(n)); }

    /// ln(n! / k!) for n, k >= 0.
    inline double log_factorial_ratio(int n, int k) { return log_factorial(n) - log_factorial(k); }

    /// Runs fn(i) for i in [0, count) on up to `jobs` threads. Each index must
    /// write only to its own output slot; the first exception is rethrown.
    template <typename Fn>
    void parallel_for(std::size_t count, unsigned jobs, Fn&& fn)
    {
        jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(count)));
        if (jobs <= 1)
        {
            for (std::size_t i = 0; i < count; ++i)
                fn(i);
            return;
        }

        std::exception_ptr failure;
        std::mutex failure_mutex;
        std::vector<std::thread> workers;
        workers.reserve(jobs);
        for (unsigned w = 0; w < jobs; ++w)
        {
            workers.emplace_back([&, w] {
                for (std::size_t i = w; i < count; i += jobs)
                {
                    try
                    {
                        fn(i);
                    }
                    catch (...)
                    {
                        std::lock_guard lock(failure_mutex);
                        if (!failure)
                            failure = std::current_exception();
                        return;
                    }
                }
            });
        }
        for (auto& t : workers)
            t.join();
        if (failure)
            std::rethrow_exception(failure);
    }

    /// Default worker count; callers override through the CLI `--jobs` flag.
    inline unsigned default_jobs()
    {
        unsigned hw = std::thread::hardware_concurrency();
        return hw == 0 ? 1u : hw;
    }
} // namespace fluxgrow
