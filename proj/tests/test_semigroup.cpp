#include <cmath>
#include <random>

#include "bsdegame/families.hpp"
#include "bsdegame/semigroup.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace bsdegame;

namespace {

const StateGrid kGrid = StateGrid::uniform_1d(-5.0, 5.0, 101);
const TimePartition kPart = TimePartition::uniform(0.0, 1.0, 40);

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
    return m;
}

fixtures::Spec1d diffusive() {
    fixtures::Spec1d s;
    s.b = [](double, double x, double u, double v) { return 0.5 * (u - v) - 0.2 * x; };
    s.sigma = [](double, double x, double, double) { return 0.8 + 0.1 * std::cos(x); };
    return s;
}

}  // namespace

TEST_CASE("empty interval returns the terminal field unchanged") {
    const GameSpec spec = make_game("bilinear-1d");
    const auto eta = TerminalField::from_function(kGrid, [](const Vec& x) { return std::sin(x[0]); }, "sin");
    const FeedbackTable table(40, kGrid, {0, 2});
    const TerminalField out = apply(spec, Player::First, table, 17, 17, eta, kPart, kGrid);
    CHECK(out.values == eta.values);
}

TEST_CASE("zero driver is the forward expectation of the terminal") {
    fixtures::Spec1d s = diffusive();
    const GameSpec spec = s.build();
    const FeedbackTable table(40, kGrid, {2, 0});
    const auto eta = TerminalField::from_function(kGrid, [](const Vec& x) { return std::tanh(x[0]); }, "tanh");
    const TerminalField back = apply(spec, Player::First, table, 5, 30, eta, kPart, kGrid);
    const TerminalField fwd = linear_reduction(spec, Player::First, table, 5, 30, eta, kPart, kGrid);
    CHECK(max_abs_diff(back.values, fwd.values) <= 1e-10);
}

TEST_CASE("constant driver adds c times the interval length") {
    const double c = -0.35;
    fixtures::Spec1d s = diffusive();
    const GameSpec zero_driver = s.build();
    s.f2 = [c](double, double, double, double, double, double) { return c; };
    const GameSpec constant_driver = s.build();
    const FeedbackTable table(40, kGrid, {1, 1});
    const auto eta = TerminalField::from_function(kGrid, [](const Vec& x) { return std::exp(-x[0] * x[0]); }, "g");
    const TerminalField base = apply(zero_driver, Player::Second, table, 8, 36, eta, kPart, kGrid);
    const TerminalField shifted = apply(constant_driver, Player::Second, table, 8, 36, eta, kPart, kGrid);
    const double length = kPart.knot(36) - kPart.knot(8);
    for (std::size_t k = 0; k < kGrid.size(); ++k) CHECK(std::abs(shifted.values[k] - base.values[k] - c * length) <= 1e-10);
}

TEST_CASE("flow composes exactly") {
    const GameSpec spec = make_game("bilinear-1d");
    const auto eta = TerminalField::from_function(kGrid, [](const Vec& x) { return std::tanh(x[0]); }, "tanh");
    FeedbackTable table(40, kGrid);
    std::mt19937_64 rng(5);
    for (std::size_t i = 0; i < 40; ++i) {
        for (std::size_t node = 0; node < kGrid.size(); ++node) table.at(i, node) = {rng() % 3, rng() % 3};
    }
    CHECK(flow_check(spec, Player::First, table, 10, 10, 30, eta, kPart, kGrid) == 0.0);
    CHECK(flow_check(spec, Player::First, table, 10, 30, 30, eta, kPart, kGrid) == 0.0);

    // Direct recomposition with the same arithmetic.
    const TerminalField inner = apply(spec, Player::Second, table, 20, 35, eta, kPart, kGrid);
    const TerminalField outer = apply(spec, Player::Second, table, 4, 20, inner, kPart, kGrid);
    const TerminalField direct = apply(spec, Player::Second, table, 4, 35, eta, kPart, kGrid);
    CHECK(max_abs_diff(outer.values, direct.values) <= 1e-12);

    for (int trial = 0; trial < 5; ++trial) {
        std::size_t a = rng() % 39, b = rng() % 39, c = rng() % 39;
        if (a > b) std::swap(a, b);
        if (b > c) std::swap(b, c);
        if (a > b) std::swap(a, b);
        CHECK(flow_check(spec, Player::First, table, a + 1, b + 1, c + 1, eta, kPart, kGrid) <= 1e-12);
    }
}

TEST_CASE("invalid intervals and grids are usage errors") {
    const GameSpec spec = make_game("bilinear-1d");
    const auto eta = TerminalField::from_function(kGrid, [](const Vec& x) { return x[0]; }, "id");
    const FeedbackTable table(40, kGrid);
    CHECK_THROWS_AS(apply(spec, Player::First, table, 20, 10, eta, kPart, kGrid), UsageError);
    const StateGrid other = StateGrid::uniform_1d(-5.0, 5.0, 51);
    const auto eta_other = TerminalField::from_function(other, [](const Vec& x) { return x[0]; }, "id");
    CHECK_THROWS_AS(apply(spec, Player::First, table, 0, 10, eta_other, kPart, kGrid), UsageError);
}
