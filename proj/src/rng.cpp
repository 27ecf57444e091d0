#include "piw/rng.hpp"

#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace piw {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> ids) {
    std::uint64_t h = splitmix64(master);
    for (std::uint64_t id : ids) h = splitmix64(h ^ splitmix64(id));
    return h;
}

double Rng::gaussian() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double x, y, s;
    do {
        x = 2.0 * uniform() - 1.0;
        y = 2.0 * uniform() - 1.0;
        s = x * x + y * y;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = y * f;
    has_spare_ = true;
    return x * f;
}

Eigen::MatrixXd gaussian_matrix(Rng& rng, int n, int p) {
    Eigen::MatrixXd z(n, p);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) z(i, j) = rng.gaussian();
    return z;
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
    if (threads <= 0) {
        unsigned hw = std::thread::hardware_concurrency();
        threads = hw == 0 ? 1 : static_cast<int>(hw);
    }
    std::size_t nthreads = std::min<std::size_t>(static_cast<std::size_t>(threads), count);
    if (nthreads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (std::size_t t = 0; t < nthreads; ++t) {
        std::size_t lo = count * t / nthreads;
        std::size_t hi = count * (t + 1) / nthreads;
        pool.emplace_back([&, lo, hi]() {
            try {
                for (std::size_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

double pairwise_sum(const double* v, std::size_t count) {
    if (count <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < count; ++i) s += v[i];
        return s;
    }
    const std::size_t half = count / 2;
    return pairwise_sum(v, half) + pairwise_sum(v + half, count - half);
}

double pairwise_sum(const std::vector<double>& v) { return pairwise_sum(v.data(), v.size()); }

}  // namespace piw
