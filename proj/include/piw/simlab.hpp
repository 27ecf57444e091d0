#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "piw/matcore.hpp"

namespace piw {

enum class ScenarioKind { Identity, Spiked };

struct Scenario {
    ScenarioKind kind;
    int p;
    int n;
    SymPD sigma_true;
    std::optional<double> sigma2;  // spiked calibration constant

    std::string label() const;
};

// Sigma = I.
Scenario make_identity_scenario(int p, int n);

// Decaying two-regime spectrum sigma2 * d_i, calibrated so the MLE risk
// matches the identity scenario at the same (p, n). Requires p divisible
// by 10.
Scenario make_spiked_scenario(int p, int n);

// Unit-sigma2 spiked profile d_i: i^{-0.7} for i <= p/10, then
// (p/10)^{-0.6} i^{-0.1}.
Vector spiked_diag_unit(int p);

// sigma2 solving sigma2^2 * E|D - S|^2-rate = MLE risk at Sigma = I.
double calibrate_sigma2(int p, int n);

// Squared Frobenius loss |Sigma_hat - Sigma|_F^2.
double quadratic_loss(const SymPD& sigma, const SymPD& estimate);
double quadratic_loss(const Matrix& sigma, const Matrix& estimate);

// Exact risk of the linear estimator a S + b I under Gaussian sampling,
// S with divisor n around the sample mean.
double analytic_risk_linear(const SymPD& sigma, int n, double a, double b);

struct EstimatorDesc {
    enum class Kind { Mle, Linear, Piw } kind;
    int q = 2;
    double floor = 1.0;
    double shrink_factor = 1.0;
    double a = 1.0;
    double b = 0.0;

    static EstimatorDesc mle() { return {Kind::Mle}; }
    static EstimatorDesc linear(double a, double b) {
        EstimatorDesc d{Kind::Linear};
        d.a = a;
        d.b = b;
        return d;
    }
    static EstimatorDesc piw(int q, double floor, double shrink_factor) {
        EstimatorDesc d{Kind::Piw};
        d.q = q;
        d.floor = floor;
        d.shrink_factor = shrink_factor;
        return d;
    }
    std::string label() const;
};

struct RiskReport {
    ScenarioKind scenario_kind;
    int p = 0;
    int n = 0;
    EstimatorDesc estimator;
    int reps = 0;
    std::uint64_t seed = 0;
    double risk_mc = 0.0;
    double mc_stderr = 0.0;
    std::optional<double> risk_analytic;  // exact value where one exists
};

// Monte-Carlo risk; deterministic given seed and independent of threads.
RiskReport mc_risk(const Scenario& scenario, const EstimatorDesc& estimator, int reps,
                   std::uint64_t seed, int threads = 0);

// One simulation-study cell. q = 1 rows are run through the matched linear
// regularizer a' lambda + floor with a' chosen on [0, L], L the 0.99
// Monte-Carlo quantile of lambda_max under the cell's true Sigma.
struct TableCell {
    int p = 0;
    int n = 0;
    ScenarioKind scenario_kind = ScenarioKind::Identity;
    int q = 2;
    double floor = 1.0;
    double shrink_factor = 1.0;
    bool matched_linear = false;
    double L = 0.0;
    double a_prime = 0.0;  // only meaningful when matched_linear
    std::uint64_t cell_seed = 0;
    RiskReport report;
    bool min_in_row = false;    // best of the 9 (floor, shrink) cells for this q
    bool min_in_block = false;  // best of all 18 cells in the (p, n) block
};

struct Table1Entry {
    int p = 0;
    int n = 0;
    double risk = 0.0;
};

struct TableResult {
    int which = 1;
    int reps = 0;
    std::uint64_t master_seed = 0;
    std::vector<Table1Entry> analytic;                  // which == 1
    std::vector<TableCell> cells;                       // which == 2 or 3
    std::vector<std::pair<std::pair<int, int>, double>> quantiles;  // (p, n) -> L
};

// which = 1: exact MLE risks over the (p, n) grid. which = 2: identity
// scenario cells. which = 3: spiked scenario cells. cells_filter restricts
// to the listed (p, n) pairs; empty means the full grid p in {10, 50, 100},
// n in {p/2, p, 2p}. Cell seeds derive from (seed, which, cell index), so a
// filtered run reproduces the matching cells of a full run bit for bit.
TableResult reproduce_tables(int which, const std::vector<std::pair<int, int>>& cells_filter,
                             int reps, std::uint64_t seed, int threads = 0);

// Paper-layout CSV rendering of a table result.
std::string table_layout_csv(const TableResult& result);

}  // namespace piw
