#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>
#include <vector>

#include "piw/errors.hpp"
#include "piw/mapest.hpp"
#include "piw/rng.hpp"
#include "piw/simlab.hpp"

using namespace piw;

TEST_CASE("quadratic_loss: hand values") {
    Matrix a = Matrix::Identity(2, 2);
    Matrix b = Matrix::Zero(2, 2);
    b << 2, 1, 1, 0;
    CHECK(quadratic_loss(a, a) == 0.0);
    CHECK(quadratic_loss(a, b) == doctest::Approx(1.0 + 1.0 + 1.0 + 1.0).epsilon(1e-14));
    CHECK(quadratic_loss(SymPD(a), SymPD(Matrix(3.0 * a))) == doctest::Approx(8.0));
    CHECK_THROWS_AS(quadratic_loss(a, Matrix::Identity(3, 3)), DimensionError);
}

TEST_CASE("analytic_risk_linear: exact cases") {
    SymPD sigma(Matrix::Identity(10, 10), SymPD::Strictness::Strict);
    // a = b = 0 estimates zero, so the risk is |Sigma|_F^2 = tr Sigma^2
    CHECK(analytic_risk_linear(sigma, 7, 0.0, 0.0) == doctest::Approx(10.0).epsilon(1e-13));
    // MLE risk at Sigma = I: p/n + (n-1) p^2 / n^2
    const auto mle_risk = [](int p, int n) {
        return static_cast<double>(p) / n +
               (n - 1.0) * static_cast<double>(p) * p / (static_cast<double>(n) * n);
    };
    for (int n : {5, 10, 20}) {
        CHECK(analytic_risk_linear(sigma, n, 1.0, 0.0) ==
              doctest::Approx(mle_risk(10, n)).epsilon(1e-12));
    }
    // identity estimator has zero risk at Sigma = I
    CHECK(analytic_risk_linear(sigma, 7, 0.0, 1.0) == doctest::Approx(0.0));
    CHECK_THROWS_AS(analytic_risk_linear(sigma, 1, 1.0, 0.0), InsufficientData);
}

TEST_CASE("analytic_risk_linear: general Sigma against a wide Monte Carlo band") {
    Matrix d = Matrix::Zero(3, 3);
    d.diagonal() << 2.0, 1.0, 0.5;
    SymPD sigma(d, SymPD::Strictness::Strict);
    const int n = 8, reps = 4000;
    const double a = 0.6, b = 0.3;
    const double exact = analytic_risk_linear(sigma, n, a, b);

    Rng rng(101);
    Matrix half = pd_power(sigma, 0.5);
    double sum = 0.0, sumsq = 0.0;
    for (int r = 0; r < reps; ++r) {
        Matrix x = gaussian_matrix(rng, n, 3) * half;
        auto [mean, s] = sample_covariance(x);
        const double loss =
            quadratic_loss(sigma.mat(), Matrix(a * s.mat() + b * Matrix::Identity(3, 3)));
        sum += loss;
        sumsq += loss * loss;
    }
    const double mc = sum / reps;
    const double se = std::sqrt((sumsq / reps - mc * mc) / (reps - 1.0));
    CHECK(std::abs(mc - exact) < 5.0 * se);
}

TEST_CASE("spiked profile: shape and calibration") {
    CHECK_THROWS_AS(spiked_diag_unit(5), InvalidInput);
    CHECK_THROWS_AS(spiked_diag_unit(12), InvalidInput);

    Vector d = spiked_diag_unit(20);
    CHECK(d(0) == 1.0);  // 1^{-0.7}
    CHECK(d(1) == doctest::Approx(std::pow(2.0, -0.7)).epsilon(1e-14));
    // bulk: (p/10)^{-0.6} i^{-0.1} from i = 3 on
    CHECK(d(2) == doctest::Approx(std::pow(2.0, -0.6) * std::pow(3.0, -0.1)).epsilon(1e-14));
    CHECK(d(19) == doctest::Approx(std::pow(2.0, -0.6) * std::pow(20.0, -0.1)).epsilon(1e-14));
    for (int i = 1; i < 20; ++i) CHECK(d(i) <= d(i - 1) + 1e-15);  // non-increasing

    // frozen calibration constants (quad-precision oracle)
    CHECK(calibrate_sigma2(10, 5) == doctest::Approx(1.1598513120524732).epsilon(1e-13));
    CHECK(calibrate_sigma2(10, 20) == doctest::Approx(1.1598985959176183).epsilon(1e-13));
    CHECK(calibrate_sigma2(50, 50) == doctest::Approx(3.2735879917292340).epsilon(1e-13));
    CHECK(calibrate_sigma2(100, 200) == doctest::Approx(5.1626287381427458).epsilon(1e-13));

    // self-consistency: MLE risk under sigma2*D equals MLE risk under I
    for (auto [p, n] : std::vector<std::pair<int, int>>{{10, 5}, {50, 50}, {100, 200}}) {
        Scenario sp = make_spiked_scenario(p, n);
        Scenario id = make_identity_scenario(p, n);
        REQUIRE(sp.sigma2.has_value());
        const double r_sp = analytic_risk_linear(sp.sigma_true, n, 1.0, 0.0);
        const double r_id = analytic_risk_linear(id.sigma_true, n, 1.0, 0.0);
        CHECK(r_sp == doctest::Approx(r_id).epsilon(1e-12));
        CHECK(sp.sigma_true.mat()(0, 0) == doctest::Approx(*sp.sigma2).epsilon(1e-14));
    }
}

TEST_CASE("scenario labels") {
    CHECK(make_identity_scenario(10, 20).label() == "identity");
    CHECK(make_spiked_scenario(10, 20).label() == "spiked");
    CHECK(EstimatorDesc::mle().label() == "mle");
}

TEST_CASE("mc_risk: MLE agrees with the exact risk") {
    Scenario id = make_identity_scenario(10, 20);
    RiskReport r = mc_risk(id, EstimatorDesc::mle(), 5000, 314);
    REQUIRE(r.risk_analytic.has_value());
    CHECK(*r.risk_analytic == doctest::Approx(0.5 + 19.0 * 100.0 / 400.0).epsilon(1e-12));
    CHECK(std::abs(r.risk_mc - *r.risk_analytic) < 4.0 * r.mc_stderr);
    CHECK(r.mc_stderr > 0.0);
    CHECK(r.mc_stderr < 0.1);
}

TEST_CASE("mc_risk: linear estimator agrees with the exact risk") {
    Scenario sp = make_spiked_scenario(10, 10);
    RiskReport r = mc_risk(sp, EstimatorDesc::linear(0.4, 0.8), 4000, 2718);
    REQUIRE(r.risk_analytic.has_value());
    CHECK(*r.risk_analytic ==
          doctest::Approx(analytic_risk_linear(sp.sigma_true, 10, 0.4, 0.8)).epsilon(1e-13));
    CHECK(std::abs(r.risk_mc - *r.risk_analytic) < 4.0 * r.mc_stderr);
}

TEST_CASE("mc_risk: determinism and thread invariance") {
    Scenario id = make_identity_scenario(10, 5);
    EstimatorDesc est = EstimatorDesc::piw(2, 1.0, 0.8);
    RiskReport a = mc_risk(id, est, 400, 99, 1);
    RiskReport b = mc_risk(id, est, 400, 99, 4);
    CHECK(a.risk_mc == b.risk_mc);
    CHECK(a.mc_stderr == b.mc_stderr);
    RiskReport c = mc_risk(id, est, 400, 100, 1);
    CHECK(a.risk_mc != c.risk_mc);
    CHECK_FALSE(a.risk_analytic.has_value());  // no closed form for the PIW risk

    CHECK_THROWS_AS(mc_risk(id, est, 50, 99), InvalidInput);
}

TEST_CASE("mc_risk: piw beats the MLE on the identity scenario") {
    Scenario id = make_identity_scenario(10, 20);
    RiskReport mle = mc_risk(id, EstimatorDesc::mle(), 1500, 7);
    RiskReport piw = mc_risk(id, EstimatorDesc::piw(2, 1.0, 0.8), 1500, 7);
    CHECK(piw.risk_mc < mle.risk_mc);
}

TEST_CASE("reproduce_tables: which = 1 is the exact MLE risk grid") {
    TableResult t = reproduce_tables(1, {}, 10, 0);
    REQUIRE(t.analytic.size() == 9);
    // row-major in p, then n in {p/2, p, 2p}
    const double expected[9] = {18.0, 10.0, 5.25, 98.0, 50.0, 25.25, 198.0, 100.0, 50.25};
    for (int i = 0; i < 9; ++i)
        CHECK(t.analytic[i].risk == doctest::Approx(expected[i]).epsilon(1e-12));
    CHECK(t.analytic[0].p == 10);
    CHECK(t.analytic[0].n == 5);
    CHECK(t.analytic[8].p == 100);
    CHECK(t.analytic[8].n == 200);

    std::string csv = table_layout_csv(t);
    CHECK(csv.find("p,n=p/2,n=p,n=2p") == 0);
    CHECK(csv.find("\n10,") != std::string::npos);
    CHECK(csv.find("5.25") != std::string::npos);
}

TEST_CASE("reproduce_tables: structure and determinism of a filtered run") {
    const std::vector<std::pair<int, int>> cell{{10, 5}};
    TableResult t = reproduce_tables(2, cell, 200, 12345);
    REQUIRE(t.cells.size() == 18);  // 2 q-rows x 3 floors x 3 shrink factors
    REQUIRE(t.quantiles.size() == 1);
    CHECK(t.quantiles[0].first == std::make_pair(10, 5));
    CHECK(t.quantiles[0].second > 0.0);

    int n_piw = 0, n_lin = 0, row_mins = 0, block_mins = 0;
    std::set<std::uint64_t> seeds;
    for (const TableCell& c : t.cells) {
        CHECK(c.p == 10);
        CHECK(c.n == 5);
        CHECK(c.report.reps == 200);
        CHECK(c.L == t.quantiles[0].second);
        seeds.insert(c.cell_seed);
        if (c.matched_linear) {
            ++n_lin;
            CHECK(c.q == 1);
            CHECK(c.a_prime > 0.0);
            CHECK(c.report.estimator.kind == EstimatorDesc::Kind::Linear);
            CHECK(c.report.estimator.b == c.floor);
            REQUIRE(c.report.risk_analytic.has_value());
            CHECK(std::abs(c.report.risk_mc - *c.report.risk_analytic) <
                  6.0 * c.report.mc_stderr);
        } else {
            ++n_piw;
            CHECK(c.q == 2);
            CHECK(c.report.estimator.kind == EstimatorDesc::Kind::Piw);
        }
        row_mins += c.min_in_row ? 1 : 0;
        block_mins += c.min_in_block ? 1 : 0;
    }
    CHECK(n_piw == 9);
    CHECK(n_lin == 9);
    CHECK(row_mins == 2);    // one per q-row
    CHECK(block_mins == 1);  // one per (p, n) block
    CHECK(seeds.size() == 18);  // distinct seed per cell

    // a filtered rerun reproduces the same numbers bit for bit
    TableResult again = reproduce_tables(2, cell, 200, 12345, 4);
    for (std::size_t i = 0; i < t.cells.size(); ++i) {
        CHECK(t.cells[i].report.risk_mc == again.cells[i].report.risk_mc);
        CHECK(t.cells[i].cell_seed == again.cells[i].cell_seed);
        CHECK(t.cells[i].a_prime == again.cells[i].a_prime);
    }

    // matched slope satisfies the integral-matching identity against the
    // q = 2 parameters of the same (floor, shrink) cell
    for (const TableCell& c : t.cells) {
        if (!c.matched_linear) continue;
        PriorParams pp = params_from_floor_shrink(c.floor, c.shrink_factor, 2, c.n, c.p);
        const double k2 = c.n + c.p + 2.0 * pp.m + 1.0;
        const double a = c.n / (2.0 * k2);
        const double b = 8.0 * k2 * pp.alpha * pp.alpha / (static_cast<double>(c.n) * c.n);
        CHECK(c.a_prime ==
              doctest::Approx(match_linear_regularizer(a, b, c.floor, c.L)).epsilon(1e-13));
    }
}

TEST_CASE("reproduce_tables: filtered cells match the corresponding full-grid cells") {
    // seeds are indexed by grid position, so running one cell or several must
    // not change any cell's numbers
    TableResult one = reproduce_tables(2, {{10, 10}}, 150, 777);
    TableResult two = reproduce_tables(2, {{10, 5}, {10, 10}}, 150, 777);
    REQUIRE(one.cells.size() == 18);
    REQUIRE(two.cells.size() == 36);
    for (int i = 0; i < 18; ++i) {
        const TableCell& a = one.cells[i];
        const TableCell& b = two.cells[18 + i];
        CHECK(a.p == b.p);
        CHECK(a.n == b.n);
        CHECK(a.cell_seed == b.cell_seed);
        CHECK(a.report.risk_mc == b.report.risk_mc);
    }
}

TEST_CASE("reproduce_tables: input validation") {
    CHECK_THROWS_AS(reproduce_tables(4, {}, 200, 0), InvalidInput);
    CHECK_THROWS_AS(reproduce_tables(0, {}, 200, 0), InvalidInput);
    CHECK_THROWS_AS(reproduce_tables(2, {{10, 7}}, 200, 0), InvalidInput);   // off grid
    CHECK_THROWS_AS(reproduce_tables(2, {{30, 30}}, 200, 0), InvalidInput);  // off grid
    CHECK_THROWS_AS(reproduce_tables(2, {{10, 5}}, 50, 0), InvalidInput);    // reps too low
}

TEST_CASE("table_layout_csv: wide layout for simulation tables") {
    TableResult t = reproduce_tables(2, {{10, 5}}, 150, 3);
    std::string csv = table_layout_csv(t);
    CHECK(csv.find("p,n,q,f0.8_s1.0,f0.8_s0.9,f0.8_s0.8,f1.0_s1.0,f1.0_s0.9,f1.0_s0.8,"
                   "f1.2_s1.0,f1.2_s0.9,f1.2_s0.8") == 0);
    // one row per (p, n, q): here 2 rows plus header
    int lines = 0;
    for (char ch : csv)
        if (ch == '\n') ++lines;
    CHECK(lines == 3);
    CHECK(csv.find("\n10,5,2,") != std::string::npos);
    CHECK(csv.find("\n10,5,1,") != std::string::npos);
}
