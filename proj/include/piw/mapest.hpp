#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "piw/matcore.hpp"
#include "piw/piwprior.hpp"
#include "piw/rng.hpp"

namespace piw {

// MAP estimate with eigenpair diagnostics, everything spectral reported in
// the whitened scale (Psi^{-1/2} . Psi^{-1/2}).
struct MapSolution {
    SymPD sigma_hat;                     // estimate in the original scale
    Vector eigen_s;                      // eigenvalues of whitened S, descending
    Vector eigen_map;                    // regularized eigenvalues of whitened sigma_hat
    Vector residuals;                    // |q l^q + n ell l - (n+p+qm+1)| at l = 1/eigen_map_i
    std::vector<int> solver_iterations;  // 0 where the q=2 closed form applied
};

struct FloorShrink {
    double floor;   // beta = alpha (q/(n+p+qm+1))^{1/q}
    double shrink;  // gamma = n/(n+p+qm+1)
};

struct PriorParams {
    double alpha;
    double m;
};

// Mean and covariance with divisor n (not n-1); S may be singular when n <= p.
std::pair<Vector, SymPD> sample_covariance(const Matrix& x);

// Inverse Wishart MAP: (nS + Psi)/(n + m + p + 1).
SymPD iw_map(const SymPD& s, int n, const SymPD& psi, double m);

// Power inverse Wishart MAP: whiten, solve the per-eigenvalue stationarity
// equation, invert, rotate back, un-whiten. q = 2 uses the closed form.
MapSolution piw_map(const SymPD& s, int n, const PiwPrior& prior, double tol = 1e-13);

// Unique positive root of q l^q + n ell l - (n+p+qm+1) = 0 via bisection on
// [0, U] with the Cauchy bound U = 1 + max(n ell, n+p+qm+1)/q. Terminates on
// interval width <= tol*U, then keeps halving until the residual is also at
// solver precision, so the MapSolution residual contract holds for any input.
double solve_eigen_equation(double ell, int n, int p, double m, int q, double tol = 1e-13);

// Floor and shrinkage of a scalar-scale prior (Psi = alpha I).
FloorShrink floor_shrink(const PiwPrior& prior, int n);

// Inversion of the floor/shrink map used by the simulation protocol:
// target shrinkage s = shrink_factor * n/(n+p+qp+1) (maximum at m = p),
// m = (n/s - n - p - 1)/q, alpha = floor * (n/(s q))^{1/q}.
PriorParams params_from_floor_shrink(double floor, double shrink_factor, int q, int n, int p);

// Eigenvalue-map descriptor: either a PIW prior (q, m, alpha) or a linear
// map a*lambda + b.
struct CurveDesc {
    enum class Kind { Piw, Linear } kind;
    int q = 2;
    double m = 0.0;
    double alpha = 1.0;
    double a = 1.0;
    double b = 0.0;

    static CurveDesc piw(int q, double m, double alpha) {
        return {Kind::Piw, q, m, alpha, 0.0, 0.0};
    }
    static CurveDesc linear(double a, double b) { return {Kind::Linear, 0, 0.0, 0.0, a, b}; }
};

// Pointwise evaluation of the regularization map lambda(S) -> lambda_hat.
// p enters through the constant n+p+qm+1 of the PIW eigenvalue equation.
Vector regularization_curve(const CurveDesc& desc, int n, int p, const Vector& grid);

// Slope a' of the linear regularizer with intercept b' = floor whose average
// over [0, L] matches the q=2 PIW map lambda -> a(lambda + sqrt(lambda^2+b)):
//   a' = a + (2a/L^2) * int_0^L sqrt(l^2+b) dl - 2 floor / L.
double match_linear_regularizer(double a, double b, double floor, double L);

// Monte-Carlo prob-quantile of lambda_max(S) under Gaussian sampling from
// (0, Sigma), S with divisor n. Deterministic given seed; thread-count
// independent.
double quantile_lmax_mle(const SymPD& sigma, int n, double prob, int reps, std::uint64_t seed,
                         int threads = 0);

}  // namespace piw
