#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "piw/errors.hpp"
#include "piw/piwprior.hpp"
#include "piw/rng.hpp"

using namespace piw;

namespace {

SymPD random_spd(Rng& rng, int p) {
    Matrix a = gaussian_matrix(rng, p + 3, p);
    Matrix m = a.transpose() * a / static_cast<double>(p + 3);
    m.diagonal().array() += 0.3;
    return SymPD(m, SymPD::Strictness::Strict);
}

// inverse Wishart log density (up to constant), written directly from its
// standard form rather than through the whitening path
double iw_log_density(const SymPD& psi, double m, const SymPD& b) {
    const int p = psi.dim();
    const Matrix binv = pd_power(b, -1.0);
    return -0.5 * (psi.mat() * binv).trace() + 0.5 * m * psi.log_det() -
           0.5 * (m + p + 1) * b.log_det();
}

}  // namespace

TEST_CASE("construction: parameter validation") {
    CHECK_THROWS_AS(PiwPrior::scalar(3, 1.0, 3.0, 0), InvalidInput);   // q < 1
    CHECK_THROWS_AS(PiwPrior::scalar(3, 1.0, 2.5, 2), InvalidInput);   // m < p
    CHECK_THROWS_AS(PiwPrior::scalar(0, 1.0, 3.0, 2), InvalidInput);
    CHECK_THROWS_AS(PiwPrior::scalar(3, 0.0, 3.0, 2), InvalidInput);
    CHECK_THROWS_AS(PiwPrior::scalar(3, -1.0, 3.0, 2), InvalidInput);

    Matrix sing = Matrix::Identity(2, 2);
    sing(1, 1) = 0.0;
    CHECK_THROWS_AS(PiwPrior(SymPD(sing), 4.0, 2), NotPositiveDefinite);

    CHECK_NOTHROW(PiwPrior::scalar(3, 1.0, 3.0, 2));  // m == p is allowed
}

TEST_CASE("scalar scale detection") {
    PiwPrior s = PiwPrior::scalar(4, 2.5, 6.0, 2);
    REQUIRE(s.alpha.has_value());
    CHECK(*s.alpha == 2.5);

    PiwPrior ident(SymPD(Matrix::Identity(3, 3)), 5.0, 1);
    REQUIRE(ident.alpha.has_value());
    CHECK(*ident.alpha == 1.0);

    Matrix diag = Matrix::Identity(3, 3);
    diag(2, 2) = 1.0 + 1e-12;  // not exactly scalar
    CHECK_FALSE(PiwPrior(SymPD(diag), 5.0, 1).alpha.has_value());

    Rng rng(2);
    CHECK_FALSE(PiwPrior(random_spd(rng, 3), 5.0, 2).alpha.has_value());
}

TEST_CASE("q = 1 density coincides with the inverse Wishart") {
    Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        const int p = 2 + trial % 4;
        SymPD psi = random_spd(rng, p);
        SymPD b = random_spd(rng, p);
        const double m = p + rng.uniform() * 5.0;
        PiwPrior prior(psi, m, 1);
        const double got = log_unnormalized_density(prior, b);
        const double want = iw_log_density(psi, m, b);
        CHECK(got == doctest::Approx(want).epsilon(1e-10));
    }
}

TEST_CASE("density: whitened and scalar paths agree") {
    Rng rng(13);
    SymPD b = random_spd(rng, 3);
    PiwPrior scalar_prior = PiwPrior::scalar(3, 1.7, 5.0, 3);
    PiwPrior general(SymPD(Matrix(1.7 * Matrix::Identity(3, 3))), 5.0, 3);
    // same prior, but force the whitening path by breaking exact equality
    Matrix nearly = 1.7 * Matrix::Identity(3, 3);
    nearly(0, 0) = std::nextafter(1.7, 2.0);
    PiwPrior whitened_path(SymPD(nearly), 5.0, 3);
    CHECK_FALSE(whitened_path.alpha.has_value());

    const double a = log_unnormalized_density(scalar_prior, b);
    const double g = log_unnormalized_density(general, b);
    const double w = log_unnormalized_density(whitened_path, b);
    CHECK(a == g);
    CHECK(a == doctest::Approx(w).epsilon(1e-9));
}

TEST_CASE("density: guards") {
    PiwPrior prior = PiwPrior::scalar(2, 1.0, 4.0, 2);
    CHECK_THROWS_AS(log_unnormalized_density(prior, SymPD(Matrix::Identity(3, 3))),
                    DimensionError);

    Matrix near_sing = Matrix::Identity(2, 2);
    near_sing(1, 1) = 5e-15;  // positive but singular within tolerance
    CHECK_THROWS_AS(log_unnormalized_density(prior, SymPD(near_sing)), NotPositiveDefinite);
}

TEST_CASE("prior mode: closed form and argmax property") {
    PiwPrior prior = PiwPrior::scalar(2, 3.0, 4.0, 2);
    SymPD mode = prior_mode(prior);
    const double c = std::sqrt(2.0 / (2.0 * 4.0 + 2.0 + 1.0));  // (q/(qm+p+1))^{1/q}
    CHECK(mode.mat()(0, 0) == doctest::Approx(3.0 * c).epsilon(1e-14));
    CHECK(mode.mat()(0, 1) == 0.0);

    Rng rng(21);
    for (int q : {1, 2, 3}) {
        SymPD psi = random_spd(rng, 3);
        PiwPrior pr(psi, 4.5, q);
        SymPD m = prior_mode(pr);
        const double peak = log_unnormalized_density(pr, m);
        for (double t : {0.5, 0.9, 1.1, 2.0})
            CHECK(peak > log_unnormalized_density(pr, SymPD(Matrix(t * m.mat()))));
        for (int trial = 0; trial < 10; ++trial) {
            Matrix noise = gaussian_matrix(rng, 3, 3);
            Matrix perturbed = m.mat() + 0.05 * (noise + noise.transpose());
            perturbed.diagonal().array() += 0.2;
            CHECK(peak > log_unnormalized_density(pr, SymPD(perturbed)));
        }
    }
}

TEST_CASE("density scaling identity across the scale matrix") {
    // value(Psi, B) = value(I, Psi^{-1/2} B Psi^{-1/2}) - (p+1)/2 log|Psi|
    Rng rng(31);
    for (int q : {1, 2, 4}) {
        const int p = 3;
        SymPD psi = random_spd(rng, p);
        SymPD b = random_spd(rng, p);
        PiwPrior prior(psi, 6.0, q);
        PiwPrior unit(SymPD(Matrix::Identity(p, p)), 6.0, q);
        const double lhs = log_unnormalized_density(prior, b);
        const double rhs = log_unnormalized_density(unit, whiten(b, psi)) -
                           0.5 * (p + 1) * psi.log_det();
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
    }
}

TEST_CASE("ratio curve: normalization, sign, hand value") {
    std::vector<double> grid{1.0, 0.7875, 0.05, 2.0};
    std::vector<double> curve = log_density_ratio_curve(2, 3.0, 3.0, grid);
    REQUIRE(curve.size() == 4);
    CHECK(curve[0] == 0.0);  // normalized at lambda = 1
    CHECK(curve[1] == doctest::Approx(0.18701007204811398).epsilon(1e-12));
    CHECK(curve[2] < -180.0);  // q = 2 punishes tiny eigenvalues far harder than q = 1
    CHECK(curve[3] < 0.0);     // ...and mildly disfavors large ones via the log penalty

    CHECK_THROWS_AS(log_density_ratio_curve(0, 3.0, 3.0, grid), InvalidInput);
    CHECK_THROWS_AS(log_density_ratio_curve(2, 3.0, 3.0, std::vector<double>{0.0}),
                    InvalidInput);
}

TEST_CASE("ratio curve: tuples add coordinate-wise") {
    Vector tuple(3);
    tuple << 0.4, 1.3, 2.2;
    std::vector<Vector> tgrid{tuple};
    std::vector<double> scalar_vals =
        log_density_ratio_curve(3, 4.0, 5.0, std::vector<double>{0.4, 1.3, 2.2});
    std::vector<double> tuple_vals = log_density_ratio_curve(3, 4.0, 5.0, tgrid);
    const double sum = scalar_vals[0] + scalar_vals[1] + scalar_vals[2];
    CHECK(tuple_vals[0] == doctest::Approx(sum).epsilon(1e-13));
}
