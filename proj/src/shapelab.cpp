#include "piw/shapelab.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <utility>

#include <Eigen/Dense>

#include "piw/csv_io.hpp"
#include "piw/errors.hpp"
#include "piw/mapest.hpp"

namespace piw {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2 pi)

std::vector<std::string> default_ids(int n) {
    std::vector<std::string> ids(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) ids[i] = std::to_string(i);
    return ids;
}

}  // namespace

ShapeDataset make_shape_dataset(Matrix interior, std::vector<std::string> ids) {
    if (interior.cols() < 2 || interior.cols() % 2 != 0)
        throw InvalidInput("shape dataset: need an even, positive number of coordinate columns");
    if (interior.rows() < 1) throw InvalidInput("shape dataset: no rows");
    if (!interior.allFinite()) throw InvalidMatrix("shape dataset: non-finite entries");
    ShapeDataset ds;
    ds.point_count = static_cast<int>(interior.cols()) / 2 + 2;
    if (ids.empty())
        ds.ids = default_ids(static_cast<int>(interior.rows()));
    else if (static_cast<int>(ids.size()) == interior.rows())
        ds.ids = std::move(ids);
    else
        throw InvalidInput("shape dataset: id count does not match row count");
    ds.data = std::move(interior);
    return ds;
}

ShapeDataset load_shapes_csv(const std::string& path, const std::vector<std::string>& exclude) {
    std::vector<std::string> ids;
    Matrix raw = read_matrix_csv(path, &ids);
    const int cols = static_cast<int>(raw.cols());
    if (cols < 6 || cols % 2 != 0)
        throw InvalidInput("shape csv: need an even number (>= 6) of coordinate columns");
    const int k = cols / 2;

    // Drop the registration-fixed endpoints x_1, x_k, y_1, y_k.
    Matrix interior(raw.rows(), 2 * (k - 2));
    interior.leftCols(k - 2) = raw.middleCols(1, k - 2);
    interior.rightCols(k - 2) = raw.middleCols(k + 1, k - 2);

    std::set<std::string> drop(exclude.begin(), exclude.end());
    std::vector<int> keep;
    std::vector<std::string> kept_ids, excluded;
    for (int i = 0; i < interior.rows(); ++i) {
        if (drop.count(ids[static_cast<std::size_t>(i)])) {
            excluded.push_back(ids[static_cast<std::size_t>(i)]);
        } else {
            keep.push_back(i);
            kept_ids.push_back(ids[static_cast<std::size_t>(i)]);
        }
    }
    if (keep.empty()) throw InsufficientData("shape csv: all rows excluded");

    Matrix data(static_cast<int>(keep.size()), interior.cols());
    for (std::size_t r = 0; r < keep.size(); ++r) data.row(static_cast<int>(r)) = interior.row(keep[r]);

    ShapeDataset ds = make_shape_dataset(std::move(data), std::move(kept_ids));
    ds.point_count = k;
    ds.excluded_ids = std::move(excluded);
    return ds;
}

SymPD build_ar1_block_psi(double rho, int half_dim, double alpha) {
    if (!(std::abs(rho) < 1.0)) throw InvalidInput("ar1 scale: need |rho| < 1");
    if (half_dim < 1) throw InvalidInput("ar1 scale: block dimension must be positive");
    if (!(alpha > 0.0)) throw InvalidInput("ar1 scale: alpha must be positive");
    Matrix r(half_dim, half_dim);
    for (int i = 0; i < half_dim; ++i)
        for (int j = 0; j < half_dim; ++j) r(i, j) = std::pow(rho, std::abs(i - j));
    Matrix psi = Matrix::Zero(2 * half_dim, 2 * half_dim);
    psi.topLeftCorner(half_dim, half_dim) = r;
    psi.bottomRightCorner(half_dim, half_dim) = r;
    return SymPD(alpha * psi, SymPD::Strictness::Strict);
}

Vector eblup_predict(const Vector& mean, const SymPD& sigma_hat,
                     const std::vector<int>& observed_idx, const Vector& x_obs) {
    const int p = sigma_hat.dim();
    if (mean.size() != p) throw DimensionError("eblup: mean and covariance dimensions differ");
    if (observed_idx.empty()) throw InvalidInput("eblup: no observed coordinates");
    if (static_cast<int>(observed_idx.size()) != x_obs.size())
        throw DimensionError("eblup: observed index/value count mismatch");
    std::vector<bool> seen(static_cast<std::size_t>(p), false);
    for (int idx : observed_idx) {
        if (idx < 0 || idx >= p) throw InvalidInput("eblup: observed index out of range");
        if (seen[static_cast<std::size_t>(idx)]) throw InvalidInput("eblup: duplicate observed index");
        seen[static_cast<std::size_t>(idx)] = true;
    }
    std::vector<int> missing;
    for (int i = 0; i < p; ++i)
        if (!seen[static_cast<std::size_t>(i)]) missing.push_back(i);
    if (missing.empty()) return Vector(0);

    const int o = static_cast<int>(observed_idx.size());
    const int mcount = static_cast<int>(missing.size());
    const Matrix& sig = sigma_hat.mat();
    Matrix s_oo(o, o), s_mo(mcount, o);
    Vector mu_o(o), mu_m(mcount), r(o);
    for (int a = 0; a < o; ++a) {
        mu_o[a] = mean[observed_idx[static_cast<std::size_t>(a)]];
        r[a] = x_obs[a] - mu_o[a];
        for (int b = 0; b < o; ++b)
            s_oo(a, b) = sig(observed_idx[static_cast<std::size_t>(a)],
                             observed_idx[static_cast<std::size_t>(b)]);
    }
    for (int a = 0; a < mcount; ++a) {
        mu_m[a] = mean[missing[static_cast<std::size_t>(a)]];
        for (int b = 0; b < o; ++b)
            s_mo(a, b) = sig(missing[static_cast<std::size_t>(a)],
                             observed_idx[static_cast<std::size_t>(b)]);
    }

    auto [lam, v] = sym_eig(s_oo);
    const double lmin = lam.minCoeff();
    const double lmax = lam.maxCoeff();
    if (!(lmin > 0.0) || lmax / lmin > 1e12)
        throw SingularBlock("eblup: observed block is numerically singular");
    Vector w = v * (v.transpose() * r).cwiseQuotient(lam);
    return mu_m + s_mo * w;
}

double loo_cv_core(const Matrix& data, const SymPD& psi, int q, double m) {
    const int n = static_cast<int>(data.rows());
    const int p = static_cast<int>(data.cols());
    if (n < 3) throw InsufficientData("loo score: need at least 3 observations");
    if (psi.dim() != p) throw DimensionError("loo score: scale matrix dimension mismatch");
    const PiwPrior prior(psi, m, q);

    double score = 0.0;
    Matrix train(n - 1, p);
    for (int i = 0; i < n; ++i) {
        int t = 0;
        for (int j = 0; j < n; ++j)
            if (j != i) train.row(t++) = data.row(j);
        auto [mean, s] = sample_covariance(train);
        MapSolution sol = piw_map(s, n - 1, prior);
        Vector r = data.row(i).transpose() - mean;
        const double quad = r.dot(sol.sigma_hat.solve(r));
        score += -0.5 * (p * kLog2Pi + sol.sigma_hat.log_det() + quad);
    }
    return score;
}

double loo_cv_score(const ShapeDataset& data, double rho, double alpha, int q, double m) {
    const int p = data.p();
    if (p < 2 || p % 2 != 0) throw InvalidInput("loo score: need an even number of columns");
    SymPD psi = build_ar1_block_psi(rho, p / 2, alpha);
    return loo_cv_core(data.data, psi, q, m < 0.0 ? static_cast<double>(p) : m);
}

CvResult cv_grid_search(const ShapeDataset& data, const std::vector<double>& rho_grid,
                        const std::vector<double>& alpha_grid, int q, double m) {
    if (rho_grid.empty() || alpha_grid.empty())
        throw InvalidInput("cv grid search: empty parameter grid");
    CvResult res;
    bool have_best = false;
    double best_score = 0.0;
    for (double rho : rho_grid) {
        for (double alpha : alpha_grid) {
            const double score = loo_cv_score(data, rho, alpha, q, m);
            res.table.push_back({rho, alpha, score});
            const bool better =
                !have_best || score > best_score ||
                (score == best_score &&
                 (alpha < res.alpha_star ||
                  (alpha == res.alpha_star && rho < res.rho_star)));
            if (better) {
                have_best = true;
                best_score = score;
                res.rho_star = rho;
                res.alpha_star = alpha;
            }
        }
    }
    return res;
}

FitReport summarize_fit(const ShapeDataset& data, const PiwPrior& prior) {
    const int p = data.p();
    if (prior.dim() != p) throw DimensionError("summarize_fit: prior dimension mismatch");
    auto [mean, s] = sample_covariance(data.data);
    const int n = data.n();
    MapSolution sol = piw_map(s, n, prior);

    FitReport rep;
    rep.mean = std::move(mean);
    rep.sigma_map = sol.sigma_hat.mat();
    rep.sigma_mle = s.mat();
    rep.variances = rep.sigma_map.diagonal();
    Vector d = rep.variances.cwiseSqrt();
    rep.correlation = rep.sigma_map.array() / (d * d.transpose()).array();
    rep.correlation.diagonal().setOnes();
    const double k = n + p + prior.q * prior.m + 1.0;
    rep.beta = std::pow(prior.q / k, 1.0 / prior.q);
    rep.gamma = n / k;
    rep.floor_curve = rep.beta * prior.psi.mat().diagonal();
    rep.cap_curve = rep.floor_curve + rep.gamma * rep.sigma_mle.diagonal();
    rep.eigenvalues = sol.sigma_hat.eigenvalues();
    rep.leading_eigenvectors = sol.sigma_hat.eigenvectors().leftCols(std::min(4, p));
    rep.trace_map = rep.sigma_map.trace();
    rep.trace_mle = rep.sigma_mle.trace();
    return rep;
}

}  // namespace piw
