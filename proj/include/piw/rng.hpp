#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace piw {

// splitmix64 finalizer; the workhorse behind seed derivation.
std::uint64_t splitmix64(std::uint64_t x);

// Deterministic seed stream: hash the master seed with a list of ids
// (table id, cell id, replication index, ...). Same inputs always give the
// same seed, so Monte-Carlo results are independent of scheduling.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> ids);

// mt19937_64 plus a Marsaglia-polar Gaussian with one cached spare.
// All stochastic code in the library draws through this type only, which
// pins the consumption order and makes every result bit-reproducible.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // uniform double in [0, 1), 53 random bits
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double gaussian();

  private:
    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// n x p matrix of iid standard normals, filled row-major.
Eigen::MatrixXd gaussian_matrix(Rng& rng, int n, int p);

// Runs fn(i) for i in [0, count) on up to `threads` threads (0 = hardware
// default). fn must write its result into a slot indexed by i; chunking is
// contiguous, so results cannot depend on the thread count.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn);

// Fixed-order pairwise summation; keeps accumulated rounding below 1e-12
// relative even for long Monte-Carlo loss vectors.
double pairwise_sum(const double* v, std::size_t count);
double pairwise_sum(const std::vector<double>& v);

}  // namespace piw
