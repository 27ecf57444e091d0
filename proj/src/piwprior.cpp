#include "piw/piwprior.hpp"

#include <cmath>

namespace piw {

namespace {

std::optional<double> detect_scalar(const SymPD& psi) {
    const Matrix& m = psi.mat();
    const double a = m(0, 0);
    if (!(a > 0.0)) return std::nullopt;
    for (int i = 0; i < psi.dim(); ++i)
        for (int j = 0; j < psi.dim(); ++j) {
            const double expected = i == j ? a : 0.0;
            if (m(i, j) != expected) return std::nullopt;
        }
    return a;
}

}  // namespace

PiwPrior::PiwPrior(SymPD psi_in, double m_in, int q_in)
    : psi(std::move(psi_in)), m(m_in), q(q_in) {
    if (q < 1) throw InvalidInput("q must be a positive integer");
    if (!(m >= psi.dim())) throw InvalidInput("degrees of freedom m must satisfy m >= p");
    if (!(psi.eigenvalues()(psi.dim() - 1) > 0.0))
        throw NotPositiveDefinite("Psi must be strictly positive definite");
    alpha = detect_scalar(psi);
}

PiwPrior PiwPrior::scalar(int p, double alpha_in, double m_in, int q_in) {
    if (p < 1) throw InvalidInput("dimension must be positive");
    if (!(alpha_in > 0.0)) throw InvalidInput("alpha must be positive");
    return PiwPrior(SymPD(alpha_in * Matrix::Identity(p, p), SymPD::Strictness::Strict), m_in,
                    q_in);
}

double log_unnormalized_density(const PiwPrior& prior, const SymPD& b) {
    const int p = prior.dim();
    if (b.dim() != p) throw DimensionError("density: B and Psi dimensions differ");
    // "singular within tolerance" guard: B must be invertible well clear of
    // machine precision for B^{-q} to mean anything
    const Vector& lb = b.eigenvalues();
    if (!(lb(p - 1) > 1e-14 * lb(0)) || !(lb(p - 1) > 0.0))
        throw NotPositiveDefinite("density: B is singular within tolerance");

    Vector whitened_eigs;
    if (prior.alpha) {
        whitened_eigs = lb / *prior.alpha;
    } else {
        whitened_eigs = whiten(b, prior.psi).eigenvalues();
    }
    double tr_inv_q = 0.0;
    for (int i = 0; i < p; ++i) tr_inv_q += std::pow(whitened_eigs(i), -prior.q);

    const double qm_half = 0.5 * prior.q * prior.m;
    return -0.5 * tr_inv_q + qm_half * prior.psi.log_det() -
           (qm_half + 0.5 * (p + 1)) * b.log_det();
}

SymPD prior_mode(const PiwPrior& prior) {
    const double c =
        std::pow(static_cast<double>(prior.q) / (prior.q * prior.m + prior.dim() + 1),
                 1.0 / prior.q);
    return SymPD(c * prior.psi.mat(), SymPD::Strictness::Strict);
}

std::vector<double> log_density_ratio_curve(int q, double m_q, double m_1,
                                            const std::vector<Vector>& eigen_grid) {
    if (q < 1) throw InvalidInput("q must be a positive integer");
    const double penalty = 0.5 * (q * m_q - m_1);
    std::vector<double> out;
    out.reserve(eigen_grid.size());
    for (const Vector& tuple : eigen_grid) {
        double v = 0.0;
        for (Eigen::Index i = 0; i < tuple.size(); ++i) {
            const double l = tuple(i);
            if (!(l > 0.0)) throw InvalidInput("ratio curve grid values must be positive");
            v += -0.5 * (std::pow(l, -q) - 1.0 / l) - penalty * std::log(l);
        }
        out.push_back(v);
    }
    return out;
}

std::vector<double> log_density_ratio_curve(int q, double m_q, double m_1,
                                            const std::vector<double>& lambda_grid) {
    std::vector<Vector> tuples;
    tuples.reserve(lambda_grid.size());
    for (double l : lambda_grid) tuples.push_back(Vector::Constant(1, l));
    return log_density_ratio_curve(q, m_q, m_1, tuples);
}

}  // namespace piw
