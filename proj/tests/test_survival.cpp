#include <doctest.h>

#include <cmath>
#include <random>

#include "driftguard/errors.hpp"
#include "driftguard/rng.hpp"
#include "driftguard/survival.hpp"
#include "support/synthetic.hpp"

using namespace driftguard;
using driftguard::testing::discrete_hazard_corpus;
using driftguard::testing::weibull_aft_corpus;

namespace {

CovariateRow row(const std::string& id, int turn, std::initializer_list<double> zs,
                 bool event = false) {
    CovariateRow r;
    r.session_id = id;
    r.turn = turn;
    int i = 0;
    for (double z : zs) r.z[i++] = z;
    r.event = event;
    return r;
}

}  // namespace

TEST_SUITE("survival") {

TEST_CASE("zero covariates give beta 0 and log PL of minus log risk-set sizes") {
    std::vector<CovariateRow> rows;
    // Four sessions of lengths 2, 3, 3, 4; events at turns 2, 3 (x2).
    for (int t = 1; t <= 2; ++t) rows.push_back(row("a", t, {0, 0, 0, 0}, t == 2));
    for (int t = 1; t <= 3; ++t) rows.push_back(row("b", t, {0, 0, 0, 0}, t == 3));
    for (int t = 1; t <= 3; ++t) rows.push_back(row("c", t, {0, 0, 0, 0}, t == 3));
    for (int t = 1; t <= 4; ++t) rows.push_back(row("d", t, {0, 0, 0, 0}));

    const auto model = fit_cox(rows, {.ridge = 0.0});
    CHECK(model.beta.norm() == doctest::Approx(0.0));

    // Risk sets: |R(2)| = 4, |R(3)| = 3 with two events dividing by the full sum.
    const double expected = -std::log(4.0) - 2.0 * std::log(3.0);
    CHECK(model.diagnostics.log_likelihood == doctest::Approx(expected).epsilon(1e-12));

    // Breslow increments: 1/4 at turn 2, 2/3 at turn 3.
    REQUIRE(model.baseline_steps.size() == 2);
    CHECK(model.baseline_steps[0].second == doctest::Approx(0.25));
    CHECK(model.baseline_steps[1].second == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("symmetric risk set keeps the partial likelihood at one half") {
    std::vector<CovariateRow> rows;
    rows.push_back(row("a", 1, {1.0, 0.5, -0.2, 0.1}, true));
    rows.push_back(row("b", 1, {1.0, 0.5, -0.2, 0.1}));
    const CoxData data = CoxData::from_rows(rows);
    Rng rng = make_rng(3);
    std::normal_distribution<double> gauss;
    for (int i = 0; i < 10; ++i) {
        CovariateVector beta;
        for (int j = 0; j < 4; ++j) beta[j] = gauss(rng);
        CHECK(cox_log_partial_likelihood(data, beta) ==
              doctest::Approx(std::log(0.5)).epsilon(1e-12));
    }
}

TEST_CASE("analytic gradient matches central finite differences") {
    // Oracle: central differences of the log partial likelihood, h = 1e-5.
    const auto rows = discrete_hazard_corpus(50, {0.8, -0.3, 0.5, 0.2}, 0.05, 25, 42);
    const CoxData data = CoxData::from_rows(rows);
    REQUIRE(data.event_count() > 0);

    Rng rng = make_rng(7);
    std::normal_distribution<double> gauss;
    for (int trial = 0; trial < 10; ++trial) {
        CovariateVector beta;
        for (int j = 0; j < 4; ++j) beta[j] = 0.7 * gauss(rng);
        const CovariateVector grad = cox_gradient(data, beta);
        for (int j = 0; j < 4; ++j) {
            CovariateVector hi = beta, lo = beta;
            hi[j] += 1e-5;
            lo[j] -= 1e-5;
            const double fd = (cox_log_partial_likelihood(data, hi) -
                               cox_log_partial_likelihood(data, lo)) /
                              2e-5;
            CHECK(grad[j] == doctest::Approx(fd).epsilon(1e-4));
        }
    }
}

TEST_CASE("known coefficients are recovered from a discrete-hazard corpus") {
    // Oracle: the generator itself, beta* = (1.0, 0.5, 0.8, 0.0).
    const CovariateVector beta_true(1.0, 0.5, 0.8, 0.0);
    const auto rows = discrete_hazard_corpus(500, beta_true, 0.03, 30, 2024);
    const auto model = fit_cox(rows);
    CHECK(model.diagnostics.converged);
    for (int j = 0; j < 4; ++j) {
        CHECK(std::abs(model.beta[j] - beta_true[j]) < 0.15);
    }
}

TEST_CASE("no events is a calibration error") {
    std::vector<CovariateRow> rows;
    for (int t = 1; t <= 3; ++t) rows.push_back(row("a", t, {1, 0, 0, 0}));
    CHECK_THROWS_AS(fit_cox(rows), CalibrationError);
    CHECK_THROWS_AS(fit_aft(rows), CalibrationError);
}

TEST_CASE("row validation catches gaps, double events, and trailing rows") {
    std::vector<CovariateRow> gap = {row("a", 1, {0, 0, 0, 0}), row("a", 3, {0, 0, 0, 0}, true)};
    CHECK_THROWS_AS(CoxData::from_rows(gap), ValidationError);

    std::vector<CovariateRow> twice = {row("a", 1, {0, 0, 0, 0}, true),
                                       row("a", 2, {0, 0, 0, 0}, true)};
    CHECK_THROWS_AS(CoxData::from_rows(twice), ValidationError);

    std::vector<CovariateRow> trailing = {row("a", 1, {0, 0, 0, 0}, true),
                                          row("a", 2, {0, 0, 0, 0})};
    CHECK_THROWS_AS(CoxData::from_rows(trailing), ValidationError);
}

TEST_CASE("separation without ridge is reported with the offending covariate") {
    // The first covariate perfectly orders the two events.
    std::vector<CovariateRow> rows;
    rows.push_back(row("a", 1, {5.0, 0, 0, 0}, true));
    rows.push_back(row("b", 1, {-5.0, 0, 0, 0}));
    rows.push_back(row("b", 2, {-5.0, 0, 0, 0}, true));
    CHECK_THROWS_WITH_AS(fit_cox(rows, {.max_iters = 30, .ridge = 0.0}),
                         doctest::Contains("d_m"), ConvergenceError);
    // A positive ridge restores convergence.
    CHECK_NOTHROW(fit_cox(rows, {.max_iters = 200, .ridge = 1e-2}));
}

TEST_CASE("hazard is the baseline increment at zero coefficients") {
    CoxModel model;
    model.beta = CovariateVector::Zero();
    model.baseline_steps = {{2, 0.01}, {5, 0.03}};
    model.hazard_floor = 1e-4;
    const CovariateVector z(1.0, 2.0, 3.0, 0.5);
    CHECK(model.hazard(2, z) == doctest::Approx(0.01));
    CHECK(model.hazard(5, z) == doctest::Approx(0.03));
    // Non-event turns within the horizon fall back to the floor.
    CHECK(model.hazard(3, z) == doctest::Approx(1e-4));
    // Beyond the horizon the last increment carries forward.
    CHECK(model.hazard(9, z) == doctest::Approx(0.03));
}

TEST_CASE("adding ln 2 to the linear predictor doubles the hazard") {
    CoxModel model;
    model.beta = CovariateVector(1.0, 0.5, 0.8, 0.0);
    model.baseline_steps = {{1, 0.01}};
    const CovariateVector z(0.4, 0.2, -0.1, 0.0);
    const double base = model.hazard(1, z);
    CovariateVector shifted = z;
    shifted[0] += std::log(2.0) / model.beta[0];
    CHECK(model.hazard(1, shifted) == doctest::Approx(2.0 * base).epsilon(1e-12));
}

TEST_CASE("hazard evaluates the exponential link directly") {
    // Oracle: scalar evaluation 0.01 * exp(2.54).
    CoxModel model;
    model.beta = CovariateVector(1.0, 0.5, 0.8, 0.0);
    model.baseline_steps = {{1, 0.01}};
    const CovariateVector z(2.0, 0.6, 0.3, 0.0);
    CHECK(model.hazard(1, z) == doctest::Approx(0.01 * std::exp(2.54)).epsilon(1e-12));
}

TEST_CASE("survival curve is one under zero hazards and multiplies otherwise") {
    CoxModel model;  // no baseline steps
    model.beta = CovariateVector::Zero();
    model.hazard_floor = 0.0;
    // With no steps and a zero floor every hazard is zero.
    std::vector<CovariateVector> path(5, CovariateVector::Zero());
    const auto flat = model.survival_curve(path);
    REQUIRE(flat.size() == 6);
    for (double s : flat) CHECK(s == doctest::Approx(1.0));

    // Constant hazard 0.1 over 5 turns: S(5) = exp(-0.5).
    CoxModel constant;
    constant.beta = CovariateVector::Zero();
    constant.baseline_steps = {{1, 0.1}};
    constant.hazard_floor = 0.1;
    const auto curve = constant.survival_curve(path);
    CHECK(curve[0] == 1.0);
    CHECK(curve[5] == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
    for (std::size_t i = 1; i < curve.size(); ++i) CHECK(curve[i] <= curve[i - 1]);
}

TEST_CASE("a positive hazard floor forces a finite crossing of any threshold") {
    CoxModel model;
    model.beta = CovariateVector::Zero();
    model.hazard_floor = 1e-3;
    const double tau = 0.25;
    const int bound = static_cast<int>(std::ceil(-std::log(tau) / 1e-3));
    std::vector<CovariateVector> path(bound + 1, CovariateVector::Zero());
    const auto curve = model.survival_curve(path);
    int crossing = -1;
    for (std::size_t t = 0; t < curve.size(); ++t) {
        if (curve[t] < tau) {
            crossing = static_cast<int>(t);
            break;
        }
    }
    REQUIRE(crossing > 0);
    CHECK(crossing <= bound);
}

TEST_CASE("proportionality: a constant offset scales hazards uniformly") {
    const auto rows = discrete_hazard_corpus(80, {0.6, 0.2, -0.4, 0.1}, 0.04, 20, 11);
    const auto model = fit_cox(rows);
    Rng rng = make_rng(13);
    std::normal_distribution<double> gauss;
    const double c = 0.8;
    for (int i = 0; i < 50; ++i) {
        CovariateVector z;
        for (int j = 0; j < 4; ++j) z[j] = gauss(rng);
        CovariateVector shifted = z;
        shifted[0] += c / model.beta[0];
        const int t = 1 + (i % 20);
        CHECK(model.hazard(t, shifted) ==
              doctest::Approx(std::exp(c) * model.hazard(t, z)).epsilon(1e-10));
    }
}

TEST_CASE("fit is deterministic for fixed rows and options") {
    const auto rows = discrete_hazard_corpus(60, {0.5, 0.5, 0.5, 0.0}, 0.05, 15, 5);
    const auto a = fit_cox(rows);
    const auto b = fit_cox(rows);
    CHECK(a.beta == b.beta);
    REQUIRE(a.baseline_steps.size() == b.baseline_steps.size());
    for (std::size_t i = 0; i < a.baseline_steps.size(); ++i) {
        CHECK(a.baseline_steps[i] == b.baseline_steps[i]);
    }
}

TEST_CASE("exponential lifetimes fit to a Weibull shape near one") {
    // Oracle: an exponential is Weibull with shape exactly 1.
    const auto rows = weibull_aft_corpus(400, CovariateVector::Zero(), 1.0, 60.0, 400, 77);
    const auto model = fit_aft(rows);
    CHECK(model.diagnostics.converged);
    CHECK(std::abs(model.shape - 1.0) < 0.1);
}

TEST_CASE("an accelerating covariate is recovered within tolerance") {
    // Oracle: the generator with theta* = (-0.7, 0, 0, 0).
    const CovariateVector theta_true(-0.7, 0.0, 0.0, 0.0);
    const auto rows = weibull_aft_corpus(500, theta_true, 1.6, 40.0, 1000, 99);
    const auto model = fit_aft(rows);
    CHECK(std::abs(model.theta[0] - (-0.7)) < 0.15);
    CHECK(std::abs(model.shape - 1.6) < 0.3);
}

TEST_CASE("aft hazard has the Weibull closed form") {
    AftModel model;
    model.theta = CovariateVector(0.5, 0.0, 0.0, 0.0);
    model.shape = 2.0;
    model.scale = 10.0;
    const CovariateVector z(1.0, 0.0, 0.0, 0.0);
    const double lam = 10.0 * std::exp(0.5);
    CHECK(model.hazard(4.0, z) ==
          doctest::Approx((2.0 / lam) * (4.0 / lam)).epsilon(1e-12));
}

TEST_CASE("ensemble takes the maximum and degrades to the cox hazard") {
    CHECK(ensemble_hazard(0.4, std::nullopt, 3, CovariateVector::Zero()) == 0.4);
    AftModel aft;
    aft.shape = 1.0;
    aft.scale = 10.0;  // constant hazard 0.1 under theta = 0
    CHECK(ensemble_hazard(0.0, aft, 3, CovariateVector::Zero()) == doctest::Approx(0.1));
    CHECK(ensemble_hazard(0.3, aft, 3, CovariateVector::Zero()) == doctest::Approx(0.3));
}

}  // TEST_SUITE
