#pragma once

#include <string>
#include <vector>

#include "piw/matcore.hpp"
#include "piw/piwprior.hpp"

namespace piw {

// Planar landmark dataset, rows = specimens, columns = interior landmark
// coordinates ordered x_2..x_{k-1}, y_2..y_{k-1} (the two endpoints of each
// outline are registration-fixed and carry no variation).
struct ShapeDataset {
    Matrix data;
    std::vector<std::string> ids;
    std::vector<std::string> excluded_ids;
    int point_count = 0;  // landmarks per outline, endpoints included

    int n() const { return static_cast<int>(data.rows()); }
    int p() const { return static_cast<int>(data.cols()); }
};

// Wraps an already interior-only coordinate matrix (columns x-block then
// y-block of equal length).
ShapeDataset make_shape_dataset(Matrix interior, std::vector<std::string> ids = {});

// Reads a landmark CSV (optional header, optional leading id column) with
// 2k coordinate columns x_1..x_k, y_1..y_k, drops the endpoint columns
// x_1, x_k, y_1, y_k, and removes the rows whose id is listed in exclude.
ShapeDataset load_shapes_csv(const std::string& path, const std::vector<std::string>& exclude = {});

// Psi = alpha * blockdiag(R, R) with R the AR(1) correlation matrix
// R_ij = rho^|i-j| of order half_dim.
SymPD build_ar1_block_psi(double rho, int half_dim, double alpha);

// Conditional mean of the missing coordinates given the observed ones under
// N(mean, sigma_hat): mu_M + Sigma_MO Sigma_OO^{-1} (x_obs - mu_O), computed
// through a spectral solve of the observed block. A rank-deficient or
// numerically singular observed block (condition > 1e12) raises SingularBlock.
Vector eblup_predict(const Vector& mean, const SymPD& sigma_hat,
                     const std::vector<int>& observed_idx, const Vector& x_obs);

// Leave-one-out log predictive score under the plug-in Gaussian with the MAP
// covariance refit on each fold: sum_i log N(x_i; mean_{-i}, sigma_hat_{-i}).
double loo_cv_core(const Matrix& data, const SymPD& psi, int q, double m);

// Same with Psi = build_ar1_block_psi(rho, p/2, alpha); m < 0 means m = p.
double loo_cv_score(const ShapeDataset& data, double rho, double alpha, int q = 2, double m = -1.0);

struct CvEntry {
    double rho;
    double alpha;
    double score;
};

struct CvResult {
    double rho_star = 0.0;
    double alpha_star = 0.0;
    std::vector<CvEntry> table;  // in rho-major, alpha-minor input order
};

// Exhaustive grid search maximizing loo_cv_score. Exact score ties resolve
// to the smaller alpha, then the smaller rho, so the winner does not depend
// on grid ordering.
CvResult cv_grid_search(const ShapeDataset& data, const std::vector<double>& rho_grid,
                        const std::vector<double>& alpha_grid, int q = 2, double m = -1.0);

struct FitReport {
    Vector mean;
    Matrix sigma_map;
    Matrix sigma_mle;
    Matrix correlation;   // from sigma_map, unit diagonal by construction
    Vector variances;     // diag(sigma_map)
    Vector floor_curve;   // beta * diag(Psi)
    Vector cap_curve;     // beta * diag(Psi) + gamma * diag(S)
    Vector eigenvalues;   // of sigma_map, descending
    Matrix leading_eigenvectors;  // first min(4, p) columns
    double trace_map = 0.0;
    double trace_mle = 0.0;
    double beta = 0.0;   // (q/(n+p+qm+1))^{1/q}, Psi-relative
    double gamma = 0.0;  // n/(n+p+qm+1)
};

FitReport summarize_fit(const ShapeDataset& data, const PiwPrior& prior);

}  // namespace piw
