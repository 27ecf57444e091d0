#pragma once

#include <optional>
#include <vector>

#include "piw/matcore.hpp"

namespace piw {

// Power inverse Wishart prior on p x p covariance matrices, with density
// proportional to
//   exp(-1/2 tr((Psi^{-1/2} B Psi^{-1/2})^{-q})) |Psi|^{qm/2} / |B|^{qm/2 + p/2 + 1/2}.
// q = 1 recovers the inverse Wishart. The normalization constant has no known
// closed form for q > 1 and is never computed; all densities here are
// log-densities up to that additive constant.
//
// alpha is set iff Psi is exactly a positive multiple of the identity
// (detected at construction); scalar priors unlock the floor/shrink calculus
// and fast whitening paths.
struct PiwPrior {
    PiwPrior(SymPD psi, double m, int q);

    static PiwPrior scalar(int p, double alpha, double m, int q);

    int dim() const { return psi.dim(); }

    SymPD psi;
    double m;
    int q;
    std::optional<double> alpha;
};

// Log of the unnormalized density at B (strictly PD, same dimension).
double log_unnormalized_density(const PiwPrior& prior, const SymPD& b);

// Mode of the distribution: (q/(qm + p + 1))^{1/q} * Psi.
SymPD prior_mode(const PiwPrior& prior);

// Log ratio of the PIW(q, m_q) density to the inverse Wishart(m_1) density at
// identity scale, evaluated on a grid of eigenvalue tuples and normalized to
// 0 at the all-ones tuple:
//   sum_i [ -1/2 (lambda_i^{-q} - lambda_i^{-1}) - ((q m_q - m_1)/2) log lambda_i ].
std::vector<double> log_density_ratio_curve(int q, double m_q, double m_1,
                                            const std::vector<Vector>& eigen_grid);

// p = 1 convenience overload: scalar lambda grid.
std::vector<double> log_density_ratio_curve(int q, double m_q, double m_1,
                                            const std::vector<double>& lambda_grid);

}  // namespace piw
