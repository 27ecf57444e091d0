#pragma once

#include <Eigen/Dense>

#include "piw/errors.hpp"

namespace piw {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Symmetric positive (semi)definite matrix with an eager spectral cache.
//
// Construction symmetrizes ((A + A^T)/2), then eigendecomposes once.
// Eigenvalues are stored descending; each eigenvector column is sign-fixed so
// its first nonzero entry is positive, making downstream output reproducible.
// Strict mode demands lambda_min > 0; semidefinite mode tolerates
// lambda_min >= -tol_psd * lambda_max (round-off negatives).
class SymPD {
  public:
    enum class Strictness { SemiDefinite, Strict };

    explicit SymPD(const Matrix& a, Strictness strictness = Strictness::SemiDefinite,
                   double tol_psd = 1e-10);

    int dim() const { return static_cast<int>(mat_.rows()); }
    const Matrix& mat() const { return mat_; }
    const Vector& eigenvalues() const { return eigenvalues_; }   // descending
    const Matrix& eigenvectors() const { return eigenvectors_; } // columns match eigenvalues

    double trace() const { return mat_.trace(); }
    // sum of log eigenvalues; requires strict positive definiteness
    double log_det() const;
    // V diag(lambda^r) V^T without re-decomposing
    Matrix power(double r) const;
    // x -> mat^{-1} x through the spectral cache
    Vector solve(const Vector& rhs) const;

  private:
    Matrix mat_;
    Vector eigenvalues_;
    Matrix eigenvectors_;
};

// Spectral decomposition of a symmetric matrix (PD not required): descending
// eigenvalues and sign-fixed orthonormal eigenvectors.
std::pair<Vector, Matrix> sym_eig(const Matrix& a);

// V diag(lambda^r) V^T. Strict positive definiteness is required whenever
// r is negative or fractional.
Matrix pd_power(const SymPD& a, double r);

// Psi^{-1/2} S Psi^{-1/2}, the congruence reducing general-scale estimation
// to the identity-scale case.
SymPD whiten(const SymPD& s, const SymPD& psi);

// A <= B in the positive-semidefinite order:
// lambda_min(B - A) >= -tol * (1 + largest-magnitude eigenvalue of B).
bool psd_order_leq(const SymPD& a, const SymPD& b, double tol = 1e-9);

}  // namespace piw
