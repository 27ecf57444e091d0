#include "piw/matcore.hpp"

#include <cmath>

namespace piw {

namespace {

void fix_column_signs(Matrix& v) {
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
        const double scale = v.col(j).cwiseAbs().maxCoeff();
        if (scale == 0.0) continue;
        for (Eigen::Index i = 0; i < v.rows(); ++i) {
            const double x = v(i, j);
            if (std::abs(x) > 1e-12 * scale) {
                if (x < 0.0) v.col(j) = -v.col(j);
                break;
            }
        }
    }
}

std::pair<Vector, Matrix> eig_descending(const Matrix& sym) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
    if (solver.info() != Eigen::Success) throw InvalidMatrix("eigendecomposition failed");
    Vector lambda = solver.eigenvalues().reverse();
    Matrix v = solver.eigenvectors().rowwise().reverse();
    fix_column_signs(v);
    return {std::move(lambda), std::move(v)};
}

}  // namespace

SymPD::SymPD(const Matrix& a, Strictness strictness, double tol_psd) {
    if (a.rows() != a.cols()) throw DimensionError("matrix must be square");
    if (a.size() == 0) throw InvalidMatrix("matrix must be nonempty");
    if (!a.allFinite()) throw InvalidMatrix("matrix has non-finite entries");
    mat_ = 0.5 * (a + a.transpose());
    auto [lambda, v] = eig_descending(mat_);
    eigenvalues_ = std::move(lambda);
    eigenvectors_ = std::move(v);
    const double lmax = eigenvalues_(0);
    const double lmin = eigenvalues_(dim() - 1);
    if (strictness == Strictness::Strict) {
        if (!(lmin > 0.0)) throw NotPositiveDefinite("matrix is not strictly positive definite");
    } else {
        if (lmin < -tol_psd * lmax)
            throw NotPositiveDefinite("matrix is not positive semidefinite");
    }
}

double SymPD::log_det() const {
    double s = 0.0;
    for (int i = 0; i < dim(); ++i) {
        const double l = eigenvalues_(i);
        if (!(l > 0.0)) throw NotPositiveDefinite("log_det requires strictly positive eigenvalues");
        s += std::log(l);
    }
    return s;
}

Matrix SymPD::power(double r) const {
    const bool fractional = r != std::floor(r);
    if ((r < 0.0 || fractional) && !(eigenvalues_(dim() - 1) > 0.0))
        throw NotPositiveDefinite("matrix power requires strict positive definiteness");
    Vector powered(dim());
    for (int i = 0; i < dim(); ++i) powered(i) = std::pow(eigenvalues_(i), r);
    return eigenvectors_ * powered.asDiagonal() * eigenvectors_.transpose();
}

Vector SymPD::solve(const Vector& rhs) const {
    if (rhs.size() != dim()) throw DimensionError("solve: size mismatch");
    if (!(eigenvalues_(dim() - 1) > 0.0))
        throw NotPositiveDefinite("solve requires strict positive definiteness");
    Vector y = eigenvectors_.transpose() * rhs;
    y.array() /= eigenvalues_.array();
    return eigenvectors_ * y;
}

std::pair<Vector, Matrix> sym_eig(const Matrix& a) {
    if (a.rows() != a.cols()) throw DimensionError("sym_eig: matrix must be square");
    if (!a.allFinite()) throw InvalidMatrix("sym_eig: non-finite entries");
    return eig_descending(0.5 * (a + a.transpose()));
}

Matrix pd_power(const SymPD& a, double r) { return a.power(r); }

SymPD whiten(const SymPD& s, const SymPD& psi) {
    if (s.dim() != psi.dim()) throw DimensionError("whiten: dimension mismatch");
    if (!(psi.eigenvalues()(psi.dim() - 1) > 0.0))
        throw NotPositiveDefinite("whiten: scale matrix must be strictly positive definite");
    const Matrix inv_sqrt = psi.power(-0.5);
    return SymPD(inv_sqrt * s.mat() * inv_sqrt);
}

bool psd_order_leq(const SymPD& a, const SymPD& b, double tol) {
    if (a.dim() != b.dim()) throw DimensionError("psd_order_leq: dimension mismatch");
    auto [lambda, v] = sym_eig(b.mat() - a.mat());
    (void)v;
    const double bmag =
        std::max(std::abs(b.eigenvalues()(0)), std::abs(b.eigenvalues()(b.dim() - 1)));
    return lambda(lambda.size() - 1) >= -tol * (1.0 + bmag);
}

}  // namespace piw
