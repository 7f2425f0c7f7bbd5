#include "pm/common.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdio>
#include <cstdlib>
#include <mutex>
#include <thread>

namespace pm {

int thread_limit() {
    static const int limit = [] {
        int hw = static_cast<int>(std::thread::hardware_concurrency());
        if (hw <= 0) hw = 1;
        if (const char* env = std::getenv("PM_THREADS")) {
            const long v = std::strtol(env, nullptr, 10);
            if (v >= 1 && v < hw) hw = static_cast<int>(v);
            if (v >= hw) hw = static_cast<int>(v);
        }
        return hw;
    }();
    return limit;
}

namespace {

thread_local bool inside_parallel_region = false;

// Persistent worker pool; the calling thread participates in every region.
// Iterations are claimed through an atomic counter, which is safe because
// parallel_for bodies write disjoint outputs by contract.
class WorkerPool {
public:
    explicit WorkerPool(int extra_workers) {
        for (int w = 0; w < extra_workers; ++w)
            threads_.emplace_back([this] {
                inside_parallel_region = true;
                std::uint64_t seen = 0;
                for (;;) {
                    const std::function<void(std::size_t)>* body = nullptr;
                    std::size_t n = 0;
                    {
                        std::unique_lock<std::mutex> lock(mu_);
                        cv_.wait(lock, [&] { return stop_ || epoch_ != seen; });
                        if (stop_) return;
                        seen = epoch_;
                        body = body_;
                        n = n_;
                    }
                    run_share(*body, n);
                    if (pending_.fetch_sub(1) == 1) {
                        std::lock_guard<std::mutex> lock(mu_);
                        done_cv_.notify_all();
                    }
                }
            });
    }

    ~WorkerPool() {
        {
            std::lock_guard<std::mutex> lock(mu_);
            stop_ = true;
        }
        cv_.notify_all();
        for (auto& t : threads_) t.join();
    }

    void run(std::size_t n, const std::function<void(std::size_t)>& body) {
        {
            std::lock_guard<std::mutex> lock(mu_);
            body_ = &body;
            n_ = n;
            // block claiming keeps the atomic counter off the hot path
            grain_ = std::max<std::size_t>(1, n / (8 * (threads_.size() + 1)));
            next_.store(0);
            pending_.store(threads_.size());
            ++epoch_;
        }
        cv_.notify_all();
        run_share(body, n);
        std::unique_lock<std::mutex> lock(mu_);
        done_cv_.wait(lock, [&] { return pending_.load() == 0; });
    }

private:
    void run_share(const std::function<void(std::size_t)>& body, std::size_t n) {
        const std::size_t grain = grain_;
        for (;;) {
            const std::size_t begin = next_.fetch_add(grain);
            if (begin >= n) return;
            const std::size_t end = std::min(n, begin + grain);
            for (std::size_t i = begin; i < end; ++i) body(i);
        }
    }

    std::vector<std::thread> threads_;
    std::mutex mu_;
    std::condition_variable cv_, done_cv_;
    const std::function<void(std::size_t)>* body_ = nullptr;
    std::size_t n_ = 0;
    std::size_t grain_ = 1;
    std::atomic<std::size_t> next_{0};
    std::atomic<std::size_t> pending_{0};
    std::uint64_t epoch_ = 0;
    bool stop_ = false;
};

WorkerPool& shared_pool() {
    static WorkerPool pool(thread_limit() - 1);
    return pool;
}

}  // namespace

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
    // nested regions run serially to avoid oversubscription
    if (thread_limit() <= 1 || n <= 1 || inside_parallel_region) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    inside_parallel_region = true;
    shared_pool().run(n, body);
    inside_parallel_region = false;
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace pm
