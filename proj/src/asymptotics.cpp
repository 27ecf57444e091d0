#include "piw/asymptotics.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "piw/errors.hpp"
#include "piw/mapest.hpp"
#include "piw/rng.hpp"

namespace piw {

std::pair<double, double> centering_constants(int n, int p) {
    if (n < 1 || p < 1) throw InvalidInput("centering_constants: n and p must be positive");
    const double sn = std::sqrt(static_cast<double>(n));
    const double sp = std::sqrt(static_cast<double>(p));
    const double mu = (1.0 + sp / sn) * (1.0 + sp / sn);
    const double sigma = (sn + sp) / n * std::cbrt(1.0 / sn + 1.0 / sp);
    return {mu, sigma};
}

AsymptoticFrame make_frame(int n, int p, int q, double m) {
    if (n < 1 || p < 1) throw InvalidInput("make_frame: n and p must be positive");
    if (q < 1) throw InvalidInput("make_frame: q must be a positive integer");
    if (!(m >= p)) throw InvalidInput("make_frame: m must be >= p");
    AsymptoticFrame f;
    f.n = n;
    f.p = p;
    f.q = q;
    f.m = m;
    std::tie(f.mu, f.sigma) = centering_constants(n, p);
    f.gamma = static_cast<double>(n) / p;
    f.kappa = m / p;
    return f;
}

double centered_stat_mle(double lmax, int n, int p) {
    auto [mu, sigma] = centering_constants(n, p);
    return (lmax - mu) / sigma;
}

double centered_stat_map(double lmax_map, const AsymptoticFrame& f) {
    const double k = f.n + f.p + f.q * f.m + 1.0;
    return (lmax_map - f.n / k * f.mu) / (static_cast<double>(f.n) / (f.n + f.p) * f.sigma);
}

double centered_stat_map_proof(double lmax_map, const AsymptoticFrame& f) {
    const double k = f.n + f.p + f.q * f.m + 1.0;
    return (lmax_map - f.n / k * f.mu) / (f.n / (f.n + f.p + f.q * f.m) * f.sigma);
}

double predicted_limit(double gamma, double kappa, int q) {
    if (q < 1) throw InvalidInput("predicted_limit: q must be a positive integer");
    if (!(kappa >= 1.0)) throw InvalidInput("predicted_limit: kappa must be >= 1");
    if (std::isinf(gamma)) return 1.0;
    if (!(gamma > 0.0)) throw InvalidInput("predicted_limit: gamma must be positive");
    return 1.0 + (2.0 * std::sqrt(gamma) - q * kappa) / (1.0 + gamma + q * kappa);
}

double ks_distance(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw InvalidInput("ks_distance: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        if (a[i] < b[j]) {
            ++i;
        } else if (b[j] < a[i]) {
            ++j;
        } else {
            const double v = a[i];
            while (i < a.size() && a[i] == v) ++i;
            while (j < b.size() && b[j] == v) ++j;
        }
        d = std::max(d, std::abs(i / na - j / nb));
    }
    return d;
}

TwReport tw_matching_experiment(int p, int n, int q, double m, double alpha, int reps,
                                std::uint64_t seed, int threads) {
    if (reps < 200) throw InvalidInput("tw_matching_experiment: need at least 200 replications");
    if (n < 2) throw InsufficientData("tw_matching_experiment: need n >= 2");
    if (p < 2) throw InvalidInput("tw_matching_experiment: need p >= 2");
    if (!(alpha > 0.0)) throw InvalidInput("tw_matching_experiment: alpha must be positive");

    const AsymptoticFrame f = make_frame(n, p, q, m);
    const double k = n + p + q * m + 1.0;
    const double center = n / k * f.mu;
    const double scale = n / (n + p + q * m) * f.sigma;
    const double n_ = static_cast<double>(n);

    std::vector<double> stat_mle(reps), stat_map(reps), lmap(reps);
    parallel_for(static_cast<std::size_t>(reps), threads, [&](std::size_t r) {
        Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(r)}));
        Matrix x = gaussian_matrix(rng, n, p);
        Vector mean = x.colwise().mean();
        Matrix xc = x.rowwise() - mean.transpose();
        Matrix s = (xc.transpose() * xc) / n_;
        Eigen::SelfAdjointEigenSolver<Matrix> es(s, Eigen::EigenvaluesOnly);
        const double lmax = es.eigenvalues().maxCoeff();

        const double ell = lmax / alpha;
        double mapped;
        if (q == 2) {
            const double nl = n_ * ell;
            mapped = alpha * (nl + std::sqrt(nl * nl + 8.0 * k)) / (2.0 * k);
        } else {
            mapped = alpha / solve_eigen_equation(ell, n, p, m, q, 1e-13);
        }
        lmap[r] = mapped;
        stat_mle[r] = (lmax - f.mu) / f.sigma;
        stat_map[r] = (mapped - center) / scale;
    });

    TwReport rep;
    rep.reps = reps;
    rep.mean_lmax_map = pairwise_sum(lmap) / reps;
    rep.ks = ks_distance(stat_mle, stat_map);
    rep.samples_mle = std::move(stat_mle);
    rep.samples_map = std::move(stat_map);
    return rep;
}

}  // namespace piw
