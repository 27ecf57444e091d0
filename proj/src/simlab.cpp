#include "piw/simlab.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "piw/csv_io.hpp"
#include "piw/errors.hpp"
#include "piw/mapest.hpp"
#include "piw/piwprior.hpp"
#include "piw/rng.hpp"

namespace piw {

namespace {

std::vector<std::pair<int, int>> full_grid() {
    std::vector<std::pair<int, int>> grid;
    for (int p : {10, 50, 100})
        for (int n : {p / 2, p, 2 * p}) grid.emplace_back(p, n);
    return grid;
}

double mle_risk_exact(int p, int n) {
    const double pd = p, nd = n;
    return pd / nd + (nd - 1.0) * pd * pd / (nd * nd);
}

}  // namespace

std::string Scenario::label() const {
    return kind == ScenarioKind::Identity ? "identity" : "spiked";
}

Scenario make_identity_scenario(int p, int n) {
    if (p < 1 || n < 1) throw InvalidInput("scenario: p and n must be positive");
    return {ScenarioKind::Identity, p, n, SymPD(Matrix::Identity(p, p), SymPD::Strictness::Strict),
            std::nullopt};
}

Vector spiked_diag_unit(int p) {
    if (p < 10 || p % 10 != 0)
        throw InvalidInput("spiked profile: p must be a positive multiple of 10");
    const int k = p / 10;
    Vector d(p);
    for (int i = 1; i <= p; ++i)
        d[i - 1] = i <= k ? std::pow(i, -0.7) : std::pow(k, -0.6) * std::pow(i, -0.1);
    return d;
}

double calibrate_sigma2(int p, int n) {
    if (n < 1) throw InvalidInput("calibrate_sigma2: n must be positive");
    const Vector d = spiked_diag_unit(p);
    const double trd = d.sum();
    const double trd2 = d.squaredNorm();
    const double nd = n;
    const double denom = trd2 / nd + (nd - 1.0) * trd * trd / (nd * nd);
    return std::sqrt(mle_risk_exact(p, n) / denom);
}

Scenario make_spiked_scenario(int p, int n) {
    if (n < 1) throw InvalidInput("scenario: n must be positive");
    const double s2 = calibrate_sigma2(p, n);
    Matrix sig = (s2 * spiked_diag_unit(p)).asDiagonal();
    return {ScenarioKind::Spiked, p, n, SymPD(sig, SymPD::Strictness::Strict), s2};
}

double quadratic_loss(const Matrix& sigma, const Matrix& estimate) {
    if (sigma.rows() != sigma.cols() || sigma.rows() != estimate.rows() ||
        sigma.cols() != estimate.cols())
        throw DimensionError("quadratic_loss: shape mismatch");
    return (estimate - sigma).squaredNorm();
}

double quadratic_loss(const SymPD& sigma, const SymPD& estimate) {
    return quadratic_loss(sigma.mat(), estimate.mat());
}

double analytic_risk_linear(const SymPD& sigma, int n, double a, double b) {
    if (n < 2) throw InsufficientData("analytic_risk_linear: need n >= 2");
    if (!std::isfinite(a) || !std::isfinite(b))
        throw InvalidInput("analytic_risk_linear: non-finite coefficients");
    const double tr = sigma.trace();
    const double tr2 = sigma.mat().squaredNorm();
    const double p = sigma.dim();
    const double c = (n - 1.0) / n;
    return a * a * (c * tr2 + c / n * tr * tr) + 2.0 * a * c * (b * tr - tr2) + b * b * p -
           2.0 * b * tr + tr2;
}

std::string EstimatorDesc::label() const {
    std::ostringstream os;
    switch (kind) {
        case Kind::Mle:
            os << "mle";
            break;
        case Kind::Linear:
            os << "linear(a=" << a << ",b=" << b << ")";
            break;
        case Kind::Piw:
            os << "piw(q=" << q << ",floor=" << floor << ",sf=" << shrink_factor << ")";
            break;
    }
    return os.str();
}

RiskReport mc_risk(const Scenario& scenario, const EstimatorDesc& estimator, int reps,
                   std::uint64_t seed, int threads) {
    if (reps < 100) throw InvalidInput("mc_risk: need at least 100 replications");
    if (scenario.n < 2) throw InsufficientData("mc_risk: need n >= 2");
    const int p = scenario.p;
    const int n = scenario.n;
    const double nd = n;
    const Matrix sig = scenario.sigma_true.mat();
    const Matrix half = scenario.sigma_true.power(0.5);

    std::optional<PiwPrior> prior;
    if (estimator.kind == EstimatorDesc::Kind::Piw) {
        PriorParams pp =
            params_from_floor_shrink(estimator.floor, estimator.shrink_factor, estimator.q, n, p);
        prior.emplace(PiwPrior::scalar(p, pp.alpha, pp.m, estimator.q));
    } else if (estimator.kind == EstimatorDesc::Kind::Linear) {
        if (!std::isfinite(estimator.a) || !std::isfinite(estimator.b))
            throw InvalidInput("mc_risk: non-finite linear coefficients");
    }

    std::vector<double> losses(static_cast<std::size_t>(reps));
    parallel_for(static_cast<std::size_t>(reps), threads, [&](std::size_t r) {
        Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(r)}));
        Matrix x = gaussian_matrix(rng, n, p) * half;
        Vector mean = x.colwise().mean();
        Matrix xc = x.rowwise() - mean.transpose();
        Matrix s = (xc.transpose() * xc) / nd;
        Matrix est;
        switch (estimator.kind) {
            case EstimatorDesc::Kind::Mle:
                est = std::move(s);
                break;
            case EstimatorDesc::Kind::Linear:
                est = estimator.a * s;
                est.diagonal().array() += estimator.b;
                break;
            case EstimatorDesc::Kind::Piw:
                est = piw_map(SymPD(s), n, *prior).sigma_hat.mat();
                break;
        }
        losses[r] = (est - sig).squaredNorm();
    });

    const double mean = pairwise_sum(losses) / reps;
    std::vector<double> sq(losses.size());
    for (std::size_t i = 0; i < losses.size(); ++i) {
        const double d = losses[i] - mean;
        sq[i] = d * d;
    }
    const double var = pairwise_sum(sq) / (reps - 1.0);

    RiskReport rep;
    rep.scenario_kind = scenario.kind;
    rep.p = p;
    rep.n = n;
    rep.estimator = estimator;
    rep.reps = reps;
    rep.seed = seed;
    rep.risk_mc = mean;
    rep.mc_stderr = std::sqrt(var / reps);
    if (estimator.kind == EstimatorDesc::Kind::Mle)
        rep.risk_analytic = analytic_risk_linear(scenario.sigma_true, n, 1.0, 0.0);
    else if (estimator.kind == EstimatorDesc::Kind::Linear)
        rep.risk_analytic = analytic_risk_linear(scenario.sigma_true, n, estimator.a, estimator.b);
    return rep;
}

TableResult reproduce_tables(int which, const std::vector<std::pair<int, int>>& cells_filter,
                             int reps, std::uint64_t seed, int threads) {
    if (which < 1 || which > 3) throw InvalidInput("tables: which must be 1, 2 or 3");
    const auto grid = full_grid();
    for (const auto& f : cells_filter)
        if (std::find(grid.begin(), grid.end(), f) == grid.end())
            throw InvalidInput("tables: requested cell is not on the (p, n) grid");
    auto selected = [&](const std::pair<int, int>& pn) {
        return cells_filter.empty() ||
               std::find(cells_filter.begin(), cells_filter.end(), pn) != cells_filter.end();
    };

    TableResult out;
    out.which = which;
    out.reps = reps;
    out.master_seed = seed;

    if (which == 1) {
        for (const auto& [p, n] : grid)
            if (selected({p, n})) out.analytic.push_back({p, n, mle_risk_exact(p, n)});
        return out;
    }
    if (reps < 100) throw InvalidInput("tables: need at least 100 replications");

    const double floors[3] = {0.8, 1.0, 1.2};
    const double sfs[3] = {1.0, 0.9, 0.8};

    for (std::size_t pi = 0; pi < grid.size(); ++pi) {
        const auto [p, n] = grid[pi];
        if (!selected({p, n})) continue;
        const Scenario sc =
            which == 2 ? make_identity_scenario(p, n) : make_spiked_scenario(p, n);
        const std::uint64_t lseed =
            derive_seed(seed, {static_cast<std::uint64_t>(which), 1000 + pi});
        const double L = quantile_lmax_mle(sc.sigma_true, n, 0.99, 10000, lseed, threads);
        out.quantiles.push_back({{p, n}, L});

        const std::size_t block_begin = out.cells.size();
        for (int qrow = 0; qrow < 2; ++qrow) {
            const int q = qrow == 0 ? 2 : 1;
            for (int fi = 0; fi < 3; ++fi) {
                for (int si = 0; si < 3; ++si) {
                    const std::size_t cell_id = ((pi * 2 + qrow) * 3 + fi) * 3 + si;
                    TableCell cell;
                    cell.p = p;
                    cell.n = n;
                    cell.scenario_kind = sc.kind;
                    cell.q = q;
                    cell.floor = floors[fi];
                    cell.shrink_factor = sfs[si];
                    cell.L = L;
                    cell.cell_seed = derive_seed(seed, {static_cast<std::uint64_t>(which),
                                                        static_cast<std::uint64_t>(cell_id)});
                    EstimatorDesc est;
                    if (q == 2) {
                        est = EstimatorDesc::piw(2, floors[fi], sfs[si]);
                    } else {
                        // q = 1 comparator: linear map matched in average action
                        // over [0, L] to the corresponding q = 2 cell, same floor.
                        PriorParams pp =
                            params_from_floor_shrink(floors[fi], sfs[si], 2, n, p);
                        const double k2 = n + p + 2.0 * pp.m + 1.0;
                        const double a = n / (2.0 * k2);
                        const double b = 8.0 * k2 * pp.alpha * pp.alpha / (static_cast<double>(n) * n);
                        cell.a_prime = match_linear_regularizer(a, b, floors[fi], L);
                        cell.matched_linear = true;
                        est = EstimatorDesc::linear(cell.a_prime, floors[fi]);
                    }
                    cell.report = mc_risk(sc, est, reps, cell.cell_seed, threads);
                    out.cells.push_back(std::move(cell));
                }
            }
        }

        // Bold-face bookkeeping: per-q-row and per-block minima of the MC risk.
        const std::size_t block_end = out.cells.size();
        std::size_t best_block = block_begin;
        for (int qrow = 0; qrow < 2; ++qrow) {
            const std::size_t row_begin = block_begin + static_cast<std::size_t>(qrow) * 9;
            std::size_t best_row = row_begin;
            for (std::size_t i = row_begin; i < row_begin + 9; ++i)
                if (out.cells[i].report.risk_mc < out.cells[best_row].report.risk_mc) best_row = i;
            out.cells[best_row].min_in_row = true;
        }
        for (std::size_t i = block_begin; i < block_end; ++i)
            if (out.cells[i].report.risk_mc < out.cells[best_block].report.risk_mc) best_block = i;
        out.cells[best_block].min_in_block = true;
    }
    return out;
}

std::string table_layout_csv(const TableResult& result) {
    std::ostringstream os;
    if (result.which == 1) {
        os << "p,n=p/2,n=p,n=2p\n";
        std::size_t i = 0;
        while (i < result.analytic.size()) {
            const int p = result.analytic[i].p;
            const int ns[3] = {p / 2, p, 2 * p};
            os << p;
            for (int n : ns) {
                os << ',';
                if (i < result.analytic.size() && result.analytic[i].p == p &&
                    result.analytic[i].n == n)
                    os << format_double(result.analytic[i++].risk);
            }
            os << '\n';
        }
        return os.str();
    }

    os << "p,n,q,f0.8_s1.0,f0.8_s0.9,f0.8_s0.8,f1.0_s1.0,f1.0_s0.9,f1.0_s0.8,"
          "f1.2_s1.0,f1.2_s0.9,f1.2_s0.8\n";
    for (std::size_t i = 0; i < result.cells.size(); ++i) {
        const TableCell& c = result.cells[i];
        if (i % 9 == 0) {
            if (i != 0) os << '\n';
            os << c.p << ',' << c.n << ',' << c.q;
        }
        os << ',' << format_double(c.report.risk_mc);
    }
    if (!result.cells.empty()) os << '\n';
    return os.str();
}

}  // namespace piw
