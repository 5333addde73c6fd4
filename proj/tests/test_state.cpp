#include <doctest.h>

#include <random>

#include "driftguard/errors.hpp"
#include "driftguard/rng.hpp"
#include "driftguard/state.hpp"

using namespace driftguard;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> xs) {
    Eigen::VectorXd v(xs.size());
    int i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

}  // namespace

TEST_SUITE("state") {

TEST_CASE("fuse concatenates semantic then behavioral") {
    const SessionShape shape{2, 1};
    const StateVector s = fuse(shape, vec({1, 2}), vec({3}), 1, 0.0);
    CHECK(s.dimension() == 3);
    CHECK(s.values()[0] == 1.0);
    CHECK(s.values()[1] == 2.0);
    CHECK(s.values()[2] == 3.0);
    CHECK(s.semantic().size() == 2);
    CHECK(s.behavioral().size() == 1);
    CHECK(s.behavioral()[0] == 3.0);
}

TEST_CASE("fuse zero inputs give the zero vector") {
    const StateVector s = fuse({2, 1}, vec({0, 0}), vec({0}), 1, 0.0);
    CHECK(s.values().isZero(0.0));
    CHECK(s.dimension() == 3);
}

TEST_CASE("fuse validates dimensions against the session shape") {
    const Eigen::VectorXd sem = Eigen::VectorXd::Zero(4);
    const Eigen::VectorXd beh = Eigen::VectorXd::Zero(2);
    CHECK_NOTHROW(fuse({4, 2}, sem, beh, 1, 0.0));
    CHECK_THROWS_WITH_AS(fuse({4, 1}, sem, beh, 1, 0.0),
                         doctest::Contains("dimension mismatch"), ValidationError);
}

TEST_CASE("fuse rejects non-finite components naming the index") {
    Eigen::VectorXd sem = vec({0, 1});
    sem[1] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_WITH_AS(fuse({2, 1}, sem, vec({0}), 1, 0.0),
                         doctest::Contains("index 1"), ValidationError);
    Eigen::VectorXd beh = vec({std::numeric_limits<double>::infinity()});
    CHECK_THROWS_AS(fuse({2, 1}, vec({0, 1}), beh, 1, 0.0), ValidationError);
}

TEST_CASE("fuse rejects invalid turn index and timestamp") {
    CHECK_THROWS_AS(fuse({1, 1}, vec({0}), vec({0}), 0, 0.0), ValidationError);
    CHECK_THROWS_AS(fuse({1, 1}, vec({0}), vec({0}), 1, -1.0), ValidationError);
}

TEST_CASE("fuse is injective for a fixed shape") {
    // Distinct (semantic, behavioral) pairs must yield distinct joint vectors.
    Rng rng = make_rng(11);
    std::normal_distribution<double> gauss;
    const SessionShape shape{3, 2};
    std::vector<StateVector> seen;
    for (int i = 0; i < 200; ++i) {
        Eigen::VectorXd sem(3), beh(2);
        for (int j = 0; j < 3; ++j) sem[j] = gauss(rng);
        for (int j = 0; j < 2; ++j) beh[j] = gauss(rng);
        const StateVector s = fuse(shape, sem, beh, 1, 0.0);
        // The split is recoverable, so fusion loses nothing.
        CHECK(s.semantic() == sem);
        CHECK(s.behavioral() == beh);
        for (const auto& t : seen) CHECK(t.values() != s.values());
        seen.push_back(s);
    }
}

}  // TEST_SUITE
