#include "piw/mapest.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "piw/errors.hpp"

namespace piw {

namespace {

struct RootDetail {
    double lambda;
    double residual;
    int iterations;
};

// Bisection for q l^q + n ell l - K = 0 on [0, U]. The bracket is valid for
// every admissible input: f(0) = -K < 0 and U >= 1 + K/q forces f(U) > 0.
RootDetail solve_root(double ell, double n_, double k, int q, double tol) {
    const double res_tol = 1e-12 * k;
    const double u = 1.0 + std::max(n_ * ell, k) / q;
    double lo = 0.0, hi = u;
    double mid = 0.5 * u;
    double fmid = 0.0;
    int it = 0;
    for (; it < 200; ++it) {
        mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;  // interval collapsed to adjacent doubles
        fmid = q * std::pow(mid, q) + n_ * ell * mid - k;
        if (fmid == 0.0) break;
        (fmid < 0.0 ? lo : hi) = mid;
        if (hi - lo <= tol * u && std::abs(fmid) <= res_tol) break;
    }
    return {mid, std::abs(fmid), it};
}

void check_solver_inputs(double ell, int n, int p, double m, int q, double tol) {
    if (n < 1 || p < 1) throw InvalidInput("eigenvalue equation: n and p must be positive");
    if (q < 1) throw InvalidInput("eigenvalue equation: q must be a positive integer");
    if (!(m >= p)) throw InvalidInput("eigenvalue equation: m must be >= p");
    if (!(ell >= 0.0) || !std::isfinite(ell))
        throw InvalidInput("eigenvalue equation: sample eigenvalue must be finite and >= 0");
    if (!(tol > 0.0) || tol > 1e-3)
        throw InvalidInput("eigenvalue equation: tol must lie in (0, 1e-3]");
}

double piw_point(double ell, double n_, double k, int q, double alpha, double tol) {
    if (q == 2) {
        const double nl = n_ * ell;
        return alpha * (nl + std::sqrt(nl * nl + 8.0 * k)) / (2.0 * k);
    }
    return alpha / solve_root(ell, n_, k, q, tol).lambda;
}

}  // namespace

std::pair<Vector, SymPD> sample_covariance(const Matrix& x) {
    if (x.rows() < 2) throw InsufficientData("sample_covariance: need at least 2 observations");
    if (x.cols() < 1) throw InvalidMatrix("sample_covariance: no variables");
    if (!x.allFinite()) throw InvalidMatrix("sample_covariance: non-finite entries");
    Vector mean = x.colwise().mean();
    Matrix xc = x.rowwise() - mean.transpose();
    Matrix s = (xc.transpose() * xc) / static_cast<double>(x.rows());
    return {std::move(mean), SymPD(s)};
}

SymPD iw_map(const SymPD& s, int n, const SymPD& psi, double m) {
    const int p = s.dim();
    if (psi.dim() != p) throw DimensionError("iw_map: S and Psi dimensions differ");
    if (n < 1) throw InvalidInput("iw_map: n must be >= 1");
    if (!(m >= p)) throw InvalidInput("iw_map: m must be >= p");
    if (!(psi.eigenvalues().minCoeff() > 0.0))
        throw NotPositiveDefinite("iw_map: Psi must be strictly positive definite");
    Matrix est = (n * s.mat() + psi.mat()) / (n + m + p + 1.0);
    return SymPD(est, SymPD::Strictness::Strict);
}

double solve_eigen_equation(double ell, int n, int p, double m, int q, double tol) {
    check_solver_inputs(ell, n, p, m, q, tol);
    const double k = n + p + q * m + 1.0;
    RootDetail d = solve_root(ell, static_cast<double>(n), k, q, tol);
    if (!(d.residual <= 1e-10 * k))
        throw SolverError("eigenvalue equation: bisection failed to reach residual tolerance");
    return d.lambda;
}

MapSolution piw_map(const SymPD& s, int n, const PiwPrior& prior, double tol) {
    const int p = s.dim();
    if (prior.dim() != p) throw DimensionError("piw_map: S and prior dimensions differ");
    if (n < 1) throw InvalidInput("piw_map: n must be >= 1");
    if (!(tol > 0.0) || tol > 1e-3) throw InvalidInput("piw_map: tol must lie in (0, 1e-3]");

    const int q = prior.q;
    const double k = n + p + q * prior.m + 1.0;
    const double n_ = static_cast<double>(n);

    // Scalar Psi = alpha I shares the eigenframe with S, so reuse its
    // decomposition instead of whitening explicitly.
    Vector ell;
    Matrix frame;
    if (prior.alpha) {
        ell = s.eigenvalues() / *prior.alpha;
        frame = s.eigenvectors();
    } else {
        SymPD w = whiten(s, prior.psi);
        ell = w.eigenvalues();
        frame = w.eigenvectors();
    }
    ell = ell.cwiseMax(0.0);  // semidefinite S can round to -1e-16

    Vector mu(p), res(p);
    std::vector<int> iters(p);
    for (int i = 0; i < p; ++i) {
        double lam;
        if (q == 2) {
            const double nl = n_ * ell[i];
            mu[i] = (nl + std::sqrt(nl * nl + 8.0 * k)) / (2.0 * k);
            lam = 1.0 / mu[i];
            iters[i] = 0;
        } else {
            RootDetail d = solve_root(ell[i], n_, k, q, tol);
            lam = d.lambda;
            mu[i] = 1.0 / lam;
            iters[i] = d.iterations;
        }
        res[i] = std::abs(q * std::pow(lam, q) + n_ * ell[i] * lam - k);
        if (!(res[i] <= 1e-10 * k))
            throw SolverError("piw_map: eigenvalue solver residual out of tolerance");
    }

    Matrix b = frame * mu.asDiagonal() * frame.transpose();
    Matrix sig;
    if (prior.alpha) {
        sig = *prior.alpha * b;
    } else {
        Matrix half = prior.psi.power(0.5);
        sig = half * b * half;
    }
    return {SymPD(sig, SymPD::Strictness::Strict), std::move(ell), std::move(mu), std::move(res),
            std::move(iters)};
}

FloorShrink floor_shrink(const PiwPrior& prior, int n) {
    if (n < 1) throw InvalidInput("floor_shrink: n must be >= 1");
    if (!prior.alpha)
        throw NotDiagonalScalePrior("floor_shrink: requires a scalar scale matrix alpha*I");
    const double k = n + prior.dim() + prior.q * prior.m + 1.0;
    return {*prior.alpha * std::pow(prior.q / k, 1.0 / prior.q), n / k};
}

PriorParams params_from_floor_shrink(double floor, double shrink_factor, int q, int n, int p) {
    if (!(floor > 0.0)) throw InvalidInput("params_from_floor_shrink: floor must be positive");
    if (!(shrink_factor > 0.0) || shrink_factor > 1.0)
        throw InvalidInput("params_from_floor_shrink: shrink factor must lie in (0, 1]");
    if (q < 1) throw InvalidInput("params_from_floor_shrink: q must be a positive integer");
    if (n < 1 || p < 1) throw InvalidInput("params_from_floor_shrink: n and p must be positive");
    const double s = shrink_factor * n / (n + p + static_cast<double>(q) * p + 1.0);
    double m = (n / s - n - p - 1.0) / q;
    m = std::max(m, static_cast<double>(p));  // shrink_factor = 1 gives m = p up to rounding
    const double alpha = floor * std::pow(n / (s * q), 1.0 / q);
    return {alpha, m};
}

Vector regularization_curve(const CurveDesc& desc, int n, int p, const Vector& grid) {
    if (n < 1 || p < 1) throw InvalidInput("regularization_curve: n and p must be positive");
    for (int i = 0; i < grid.size(); ++i)
        if (!(grid[i] >= 0.0) || !std::isfinite(grid[i]))
            throw InvalidInput("regularization_curve: grid points must be finite and >= 0");

    Vector out(grid.size());
    if (desc.kind == CurveDesc::Kind::Linear) {
        if (!std::isfinite(desc.a) || !std::isfinite(desc.b))
            throw InvalidInput("regularization_curve: non-finite linear coefficients");
        out = desc.a * grid.array() + desc.b;
        return out;
    }
    if (desc.q < 1) throw InvalidInput("regularization_curve: q must be a positive integer");
    if (!(desc.alpha > 0.0)) throw InvalidInput("regularization_curve: alpha must be positive");
    if (!(desc.m >= p)) throw InvalidInput("regularization_curve: m must be >= p");
    const double k = n + p + desc.q * desc.m + 1.0;
    for (int i = 0; i < grid.size(); ++i)
        out[i] = piw_point(grid[i] / desc.alpha, n, k, desc.q, desc.alpha, 1e-13);
    return out;
}

double match_linear_regularizer(double a, double b, double floor, double L) {
    if (!(L > 0.0)) throw InvalidInput("match_linear_regularizer: L must be positive");
    if (!(a > 0.0)) throw InvalidInput("match_linear_regularizer: slope a must be positive");
    if (!(b >= 0.0) || !(floor >= 0.0))
        throw InvalidInput("match_linear_regularizer: b and floor must be >= 0");
    double integral;  // int_0^L sqrt(l^2 + b) dl
    if (b == 0.0) {
        integral = 0.5 * L * L;
    } else {
        const double s = std::sqrt(L * L + b);
        integral = 0.5 * (L * s + b * std::log((L + s) / std::sqrt(b)));
    }
    return a + 2.0 * a * integral / (L * L) - 2.0 * floor / L;
}

double quantile_lmax_mle(const SymPD& sigma, int n, double prob, int reps, std::uint64_t seed,
                         int threads) {
    if (n < 2) throw InsufficientData("quantile_lmax_mle: need n >= 2");
    if (!(prob > 0.0) || !(prob < 1.0))
        throw InvalidInput("quantile_lmax_mle: prob must lie in (0, 1)");
    if (reps < 100) throw InvalidInput("quantile_lmax_mle: need at least 100 replications");

    const int p = sigma.dim();
    const Matrix half = sigma.power(0.5);
    std::vector<double> vals(static_cast<std::size_t>(reps));
    parallel_for(static_cast<std::size_t>(reps), threads, [&](std::size_t r) {
        Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(r)}));
        Matrix x = gaussian_matrix(rng, n, p) * half;
        Vector mean = x.colwise().mean();
        Matrix xc = x.rowwise() - mean.transpose();
        Matrix s = (xc.transpose() * xc) / static_cast<double>(n);
        Eigen::SelfAdjointEigenSolver<Matrix> es(s, Eigen::EigenvaluesOnly);
        vals[r] = es.eigenvalues().maxCoeff();
    });

    std::sort(vals.begin(), vals.end());
    const double h = prob * (reps - 1);
    const auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= vals.size()) return vals.back();
    const double frac = h - static_cast<double>(lo);
    return vals[lo] + frac * (vals[lo + 1] - vals[lo]);
}

}  // namespace piw
