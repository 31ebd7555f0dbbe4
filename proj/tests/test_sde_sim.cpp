#include <cmath>
#include <random>

#include "bsdegame/families.hpp"
#include "bsdegame/sde_sim.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace bsdegame;

namespace {

const TimePartition kUnit100 = TimePartition::uniform(0.0, 1.0, 100);

fixtures::Spec1d brownian() {
    fixtures::Spec1d s;
    s.sigma = fixtures::unit_sigma;
    return s;
}

// E[max_i |B_{t_i}|^2] over the given knots from an independent generator.
fixtures::Sample brownian_sup_square(std::size_t steps, std::size_t paths, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double sd = std::sqrt(1.0 / static_cast<double>(steps));
    std::vector<double> sups(paths);
    for (std::size_t m = 0; m < paths; ++m) {
        double b = 0.0, sup = 0.0;
        for (std::size_t i = 0; i < steps; ++i) {
            b += sd * normal(rng);
            sup = std::max(sup, b * b);
        }
        sups[m] = sup;
    }
    return fixtures::sample_of(sups);
}

}  // namespace

TEST_CASE("zero coefficients keep every path at the start") {
    const GameSpec spec = fixtures::Spec1d{}.build();
    const PathBundle b = simulate(spec, {0.0, Vec{0.7}}, kUnit100, constant_rule({0, 0}), 50, 1);
    for (const Vec& x : b.states) CHECK(x[0] == 0.7);
}

TEST_CASE("unit diffusion from zero ends with a standard normal law") {
    const GameSpec spec = brownian().build();
    const std::size_t M = 10000;
    const PathBundle b = simulate(spec, {0.0, Vec{0.0}}, kUnit100, constant_rule({0, 0}), M, 2024);
    std::vector<double> xt(M);
    for (std::size_t m = 0; m < M; ++m) xt[m] = b.state(m, 100)[0];
    const auto s = fixtures::sample_of(xt);
    CHECK(std::abs(s.mean) <= 3.0 / std::sqrt(double(M)));
    double var = 0.0;
    for (double x : xt) var += (x - s.mean) * (x - s.mean);
    var /= double(M - 1);
    // Var of the sample variance of N(0,1) data is 2 / (M - 1).
    CHECK(std::abs(var - 1.0) <= 3.0 * std::sqrt(2.0 / double(M - 1)));
}

TEST_CASE("unit drift without noise ends at one") {
    fixtures::Spec1d s;
    s.b = [](double, double, double, double) { return 1.0; };
    const PathBundle b = simulate(s.build(), {0.0, Vec{0.0}}, kUnit100, constant_rule({1, 1}), 10, 3);
    for (std::size_t m = 0; m < 10; ++m) CHECK(b.state(m, 100)[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("path noise depends only on the seed and the path index") {
    const GameSpec spec = make_game("bilinear-1d");
    const auto rule = constant_rule({2, 0});
    const PathBundle small = simulate(spec, {0.0, Vec{0.1}}, kUnit100, rule, 10, 99);
    const PathBundle large = simulate(spec, {0.0, Vec{0.1}}, kUnit100, rule, 40, 99);
    for (std::size_t m = 0; m < 10; ++m) {
        for (std::size_t i = 0; i <= 100; ++i) CHECK(small.state(m, i) == large.state(m, i));
        const auto inc = brownian_increments(kUnit100, 1, 99, m);
        for (std::size_t i = 0; i < 100; ++i) CHECK(inc[i] == small.increment(m, i));
    }
    const PathBundle other = simulate(spec, {0.0, Vec{0.1}}, kUnit100, rule, 10, 100);
    CHECK_FALSE(other.state(0, 100) == small.state(0, 100));
}

TEST_CASE("feedback rules read the nearest grid node") {
    const GameSpec spec = make_game("bilinear-1d");
    const StateGrid grid = StateGrid::uniform_1d(-5.0, 5.0, 11);
    FeedbackTable table(100, grid, {1, 1});
    for (std::size_t i = 0; i < 100; ++i) {
        for (std::size_t node = 0; node < grid.size(); ++node) {
            if (grid.point(node)[0] > 0.0) table.at(i, node) = {0, 2};
        }
    }
    const PathBundle b = simulate(spec, {0.0, Vec{0.0}}, kUnit100, feedback_rule(table), 200, 8);
    for (std::size_t m = 0; m < b.path_count; ++m) {
        for (std::size_t i = 0; i < 100; ++i) CHECK(b.control(m, i) == table.lookup(i, b.state(m, i)));
    }
}

TEST_CASE("paths leaving the state box are counted") {
    fixtures::Spec1d s;
    s.b = [](double, double, double, double) { return 10.0; };
    const PathBundle b = simulate(s.build(), {0.0, Vec{0.0}}, kUnit100, constant_rule({0, 0}), 7, 1);
    CHECK(b.box_exits == 7);
}

TEST_CASE("non-finite states name the path and step") {
    fixtures::Spec1d s;
    s.b = [](double, double x, double, double) { return 1e300 * (1.0 + x * x); };
    try {
        simulate(s.build(), {0.0, Vec{1.0}}, kUnit100, constant_rule({0, 0}), 3, 1);
        FAIL("expected a NumericalError");
    } catch (const NumericalError& e) {
        const std::string what = e.what();
        CHECK(what.find("path") != std::string::npos);
        CHECK(what.find("step") != std::string::npos);
    }
}

TEST_CASE("moment check without coefficients reports |x|^p") {
    const GameSpec spec = fixtures::Spec1d{}.build();
    const PathBundle b = simulate(spec, {0.0, Vec{1.5}}, kUnit100, constant_rule({0, 0}), 20, 1);
    for (int p : {2, 4}) {
        const MomentReport r = moment_check(spec, b, p);
        CHECK(r.empirical == doctest::Approx(std::pow(1.5, p)));
        CHECK(r.within);
    }
    CHECK_THROWS_AS(moment_check(spec, b, 3), UsageError);
}

TEST_CASE("moment constant matches the Gronwall expression") {
    const GameSpec spec = make_game("bilinear-1d");
    // K = L + max over controls of |b(t,0)| + |sigma(t,0)| = 1 + (0.5 * 2 + 1).
    const double K = 3.0;
    CHECK(linear_growth_constant(spec) == doctest::Approx(K));
    for (int p : {2, 4}) {
        const double pd = p;
        const double cp = std::pow(pd / (pd - 1.0), pd) * std::pow(pd * (pd - 1.0) / 2.0, pd / 2.0);
        const double A = std::pow(3.0, pd - 1.0) * std::pow(2.0, pd - 1.0) * std::pow(K, pd) * (1.0 + cp);
        const double expected = std::pow(3.0, pd - 1.0) * std::exp(A);
        if (std::isfinite(expected)) {
            CHECK(gronwall_moment_constant(spec, p) == doctest::Approx(expected));
        } else {
            CHECK(gronwall_moment_constant(spec, p) == expected);
        }
    }
}

TEST_CASE("bilinear-1d second moments agree with a ten times larger ensemble") {
    const GameSpec spec = make_game("bilinear-1d");
    const auto rule = constant_rule({2, 0});
    const PathBundle b = simulate(spec, {0.0, Vec{0.0}}, kUnit100, rule, 10000, 5);
    const MomentReport r = moment_check(spec, b, 2);
    CHECK(r.within);
    const PathBundle big = simulate(spec, {0.0, Vec{0.0}}, kUnit100, rule, 100000, 6);
    const MomentReport o = moment_check(spec, big, 2);
    CHECK(std::abs(r.empirical - o.empirical) <= 3.0 * std::hypot(r.std_error, o.std_error));
}

TEST_CASE("Brownian sup moment matches an independent simulation on the same knots") {
    const GameSpec spec = brownian().build();
    const PathBundle b = simulate(spec, {0.0, Vec{0.0}}, kUnit100, constant_rule({0, 0}), 10000, 77);
    const MomentReport r = moment_check(spec, b, 2);
    const auto oracle = brownian_sup_square(100, 40000, 4242);
    CHECK(std::abs(r.empirical - oracle.mean) <= 3.0 * std::hypot(r.std_error, oracle.se));
    // A finer monitoring grid can only raise the sup.
    const auto fine = brownian_sup_square(2000, 4000, 4243);
    CHECK(fine.mean + 3.0 * fine.se >= r.empirical);
    CHECK(r.within);
}

TEST_CASE("paired paths under common noise stay within the Lipschitz flow bound") {
    fixtures::Spec1d s;
    s.b = [](double, double x, double, double) { return -0.5 * x; };
    s.sigma = fixtures::unit_sigma;
    const PairMomentReport r =
        pair_moment_check(s.build(), {0.0, Vec{0.0}}, Vec{0.5}, kUnit100, constant_rule({0, 0}), 100, 1);
    // Linear drift, additive noise: the gap decays deterministically from 0.5.
    CHECK(r.empirical == doctest::Approx(0.25));
    CHECK(r.ratio == doctest::Approx(1.0));
}
