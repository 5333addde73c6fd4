#include <doctest.h>

#include <cmath>
#include <random>

#include "driftguard/errors.hpp"
#include "driftguard/kinematics.hpp"
#include "driftguard/rng.hpp"

using namespace driftguard;

TEST_SUITE("kinematics") {

TEST_CASE("push appends, enforces order, and evicts beyond capacity") {
    DistanceTrace trace(3);
    trace.push(1, 2.0);
    CHECK(trace.size() == 1);
    CHECK(trace.last_distance() == 2.0);

    trace.push(5, 3.0);
    CHECK_THROWS_AS(trace.push(3, 1.0), ValidationError);
    CHECK_THROWS_AS(trace.push(5, 1.0), ValidationError);

    trace.push(6, 4.0);
    trace.push(7, 5.0);  // evicts turn 1
    CHECK(trace.size() == 3);
    CHECK(trace.samples().front().turn_index == 5);

    CHECK_THROWS_AS(trace.push(8, -1.0), ValidationError);
    CHECK_THROWS_AS(DistanceTrace(2), ValidationError);
}

TEST_CASE("constant and linear signals have zero acceleration") {
    DistanceTrace constant(8);
    constant.push(1, 5.0);
    constant.push(2, 5.0);
    constant.push(3, 5.0);
    CHECK(*constant.acceleration() == doctest::Approx(0.0));

    DistanceTrace linear(8);
    linear.push(1, 1.0);
    linear.push(2, 2.0);
    linear.push(3, 3.0);
    CHECK(*linear.acceleration() == doctest::Approx(0.0));
}

TEST_CASE("quadratic signal at unit steps returns the exact second difference") {
    DistanceTrace trace(8);
    for (int t = 1; t <= 3; ++t) trace.push(t, static_cast<double>(t) * t);
    CHECK(*trace.acceleration() == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("non-uniform gaps recover the analytic second derivative of t^2") {
    // Oracle: d^2/dt^2 (t^2) = 2 regardless of sample spacing.
    DistanceTrace trace(8);
    trace.push(1, 1.0);
    trace.push(2, 4.0);
    trace.push(4, 16.0);
    CHECK(*trace.acceleration() == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("exact on arbitrary quadratics over arbitrary turn gaps") {
    Rng rng = make_rng(17);
    std::uniform_real_distribution<double> coef(-3.0, 3.0);
    std::uniform_int_distribution<int> gap(1, 9);
    for (int trial = 0; trial < 100; ++trial) {
        const double alpha = std::abs(coef(rng)) + 0.1;  // keep distances nonnegative
        const double beta = coef(rng);
        const double gamma = std::abs(coef(rng)) * 100.0 + 100.0;
        DistanceTrace trace(8);
        int t = gap(rng);
        for (int k = 0; k < 3; ++k) {
            trace.push(t, alpha * t * t + beta * t + gamma);
            t += gap(rng);
        }
        CHECK(*trace.acceleration() == doctest::Approx(2.0 * alpha).epsilon(1e-9));
    }
}

TEST_CASE("gap robustness: omitting middle samples of a quadratic changes nothing") {
    const auto value = [](int t) { return 0.5 * t * t + 2.0 * t + 30.0; };
    DistanceTrace dense(16);
    for (int t = 1; t <= 9; ++t) dense.push(t, value(t));
    DistanceTrace sparse(16);
    for (int t : {1, 4, 9}) sparse.push(t, value(t));
    CHECK(*dense.acceleration() == doctest::Approx(*sparse.acceleration()).epsilon(1e-12));
    CHECK(*sparse.acceleration() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("convergent geometric traces decelerate, super-linear traces accelerate") {
    const double r = 0.7;
    DistanceTrace geometric(8);
    for (int t = 1; t <= 12; ++t) {
        geometric.push(t, 1.0 - std::pow(r, t));
        if (t >= 3) CHECK(*geometric.acceleration() < 0.0);
    }
    DistanceTrace convex(8);
    for (int t = 1; t <= 12; ++t) {
        convex.push(t, std::pow(static_cast<double>(t), 1.5));
        if (t >= 3) CHECK(*convex.acceleration() > 0.0);
    }
}

TEST_CASE("velocity is the first divided difference") {
    DistanceTrace trace(8);
    trace.push(1, 1.0);
    CHECK_FALSE(trace.velocity().has_value());
    CHECK_FALSE(trace.acceleration().has_value());
    trace.push(2, 3.0);
    CHECK(*trace.velocity() == doctest::Approx(2.0));

    DistanceTrace gapped(8);
    gapped.push(1, 3.0);
    gapped.push(3, 7.0);
    CHECK(*gapped.velocity() == doctest::Approx(2.0));
}

}  // TEST_SUITE
