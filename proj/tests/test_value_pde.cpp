#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "bsdegame/families.hpp"
#include "bsdegame/quadrature.hpp"
#include "bsdegame/value_pde.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace bsdegame;

namespace {

const StateGrid kGrid = StateGrid::uniform_1d(-5.0, 5.0, 101);
const TimePartition kPart = TimePartition::uniform(0.0, 1.0, 50);

ValueOptions no_audit() {
    ValueOptions o;
    o.run_audit = false;
    return o;
}

// Forward Euler estimate of E[Phi(X_T) + sum f(t_i, X_i) dt] from (t_k, x).
fixtures::Sample forward_estimate(const std::function<double(double)>& drift, const std::function<double(double)>& f,
                                  const std::function<double(double)>& phi, const TimePartition& part,
                                  std::size_t k, double x0, std::size_t paths, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> out(paths);
    for (auto& value : out) {
        double x = x0, acc = 0.0;
        for (std::size_t i = k; i < part.steps(); ++i) {
            const double dt = part.dt(i);
            acc += f(x) * dt;
            x += drift(x) * dt + std::sqrt(dt) * normal(rng);
        }
        value = acc + phi(x);
    }
    return fixtures::sample_of(out);
}

}  // namespace

TEST_CASE("no dynamics and no running cost leave the terminal payoff") {
    fixtures::Spec1d s;
    s.phi1 = [](double x) { return std::tanh(x); };
    s.phi2 = [](double x) { return std::cos(x); };
    const ValueField f = compute_values(s.build(), kPart, kGrid);
    for (std::size_t i = 0; i < kPart.size(); ++i) {
        for (std::size_t node = 0; node < kGrid.size(); ++node) {
            const double x = kGrid.point(node)[0];
            CHECK(std::abs(f.w(Player::First, i, node) - std::tanh(x)) <= 1e-12);
            CHECK(std::abs(f.w(Player::Second, i, node) - std::cos(x)) <= 1e-12);
        }
    }
}

TEST_CASE("control-free values are the plain BSDE solution and match forward simulation") {
    const GameSpec spec = make_game("control-free");
    const ValueField f = compute_values(spec, kPart, kGrid);
    REQUIRE(f.audit);
    CHECK(f.audit->max_gap == 0.0);
    for (Player j : {Player::First, Player::Second}) {
        const BackwardSolution sol = solve_markov(spec, j, FeedbackTable(50, kGrid, {1, 2}), kPart, kGrid);
        for (std::size_t k = 0; k < sol.Y.size(); ++k) CHECK(f.W[player_index(j)][k] == sol.Y[k]);
    }
    const auto drift = [](double x) { return -0.5 * x; };
    const auto run1 = [](double x) { return 0.5 * std::sin(x); };
    const auto phi1 = [](double x) { return std::tanh(x); };
    for (double x0 : {-1.0, 0.5}) {
        const auto mc = forward_estimate(drift, run1, phi1, kPart, 0, x0, 10000, 17);
        CHECK(std::abs(f.value_at(Player::First, 0, Vec{x0}) - mc.mean) <= 3.0 * mc.se);
    }
}

TEST_CASE("zero-sum fixture gives opposite values") {
    const GameSpec spec = make_game("antisymmetric");
    const ValueField f = compute_values(spec, TimePartition::uniform(0.0, 1.0, 100), kGrid);
    double worst = 0.0;
    for (std::size_t k = 0; k < f.W[0].size(); ++k) worst = std::max(worst, std::abs(f.W[0][k] + f.W[1][k]));
    CHECK(worst <= 1e-6);
}

TEST_CASE("coarse partitions with L * mesh >= 1 are refused") {
    fixtures::Spec1d s;
    s.L = 60.0;
    CHECK_THROWS_AS(compute_values(s.build(), kPart, kGrid, no_audit()), UsageError);
}

TEST_CASE("feedback tables are the saddle and punishing selections") {
    const GameSpec spec = make_game("bilinear-1d");
    const ValueField f = compute_values(spec, kPart, kGrid);
    const GaussHermite gh(7, 1);
    const SchemeOptions opts;
    const std::size_t nv = spec.V.size();
    for (std::size_t i : {0u, 17u, 49u}) {
        for (std::size_t node : {0u, 37u, 50u, 88u}) {
            const auto G1 = one_step_table(spec, Player::First, kPart, i, kGrid, node, f.slice(Player::First, i + 1), gh, opts);
            const auto G2 = one_step_table(spec, Player::Second, kPart, i, kGrid, node, f.slice(Player::Second, i + 1), gh, opts);
            // Player 1 max-min of G1, smallest index on ties.
            double best = -std::numeric_limits<double>::infinity();
            std::size_t best_u = 0;
            for (std::size_t u = 0; u < spec.U.size(); ++u) {
                double worst = std::numeric_limits<double>::infinity();
                for (std::size_t v = 0; v < nv; ++v) worst = std::min(worst, G1[u * nv + v]);
                if (worst > best) {
                    best = worst;
                    best_u = u;
                }
            }
            CHECK(f.w(Player::First, i, node) == best);
            CHECK(f.saddle[0].at(i, node).u == best_u);
            // Player 1 punishes player 2 with argmin_u max_v G2.
            double low = std::numeric_limits<double>::infinity();
            std::size_t low_u = 0;
            for (std::size_t u = 0; u < spec.U.size(); ++u) {
                double high = -std::numeric_limits<double>::infinity();
                for (std::size_t v = 0; v < nv; ++v) high = std::max(high, G2[u * nv + v]);
                if (high < low) {
                    low = high;
                    low_u = u;
                }
            }
            CHECK(f.punish(Player::First, i, node) == low_u);
        }
    }
}

TEST_CASE("lower and upper recursions coincide when the controls separate") {
    const ValueField f = compute_values(make_game("separable"), kPart, kGrid);
    for (Player j : {Player::First, Player::Second}) {
        CHECK(f.recursion_gap[player_index(j)] <= 1e-12);
        CHECK(f.grid_slack(j) <= 1e-12);
    }
}

TEST_CASE("pennies values bracket without coinciding and the audit is attached") {
    const ValueField f = compute_values(make_game("pennies"), kPart, kGrid);
    REQUIRE(f.audit);
    CHECK(f.audit->flagged);
    CHECK(f.recursion_gap[0] > 0.0);
    for (std::size_t k = 0; k < f.W[0].size(); ++k) CHECK(f.W[0][k] <= f.W_upper[0][k] + 1e-12);
}

TEST_CASE("recomposition on a sub-interval reproduces the field") {
    const GameSpec spec = make_game("bilinear-1d");
    const ValueField full = compute_values(spec, kPart, kGrid, no_audit());
    ValueOptions o = no_audit();
    const std::size_t k = 30;
    o.terminal = std::array<std::vector<double>, 2>{
        std::vector<double>(full.slice(Player::First, k).begin(), full.slice(Player::First, k).end()),
        std::vector<double>(full.slice(Player::Second, k).begin(), full.slice(Player::Second, k).end())};
    const ValueField head = compute_values(spec, kPart.slice(0, k), kGrid, o);
    for (std::size_t i = 0; i <= k; ++i) {
        for (std::size_t node = 0; node < kGrid.size(); ++node) {
            CHECK(std::abs(head.w(Player::First, i, node) - full.w(Player::First, i, node)) <= 1e-12);
            CHECK(std::abs(head.w(Player::Second, i, node) - full.w(Player::Second, i, node)) <= 1e-12);
        }
    }
}

TEST_CASE("regularity constants") {
    SUBCASE("constant payoff") {
        fixtures::Spec1d s;
        s.sigma = fixtures::unit_sigma;
        s.phi1 = [](double) { return 0.4; };
        s.phi2 = [](double) { return -2.0; };
        const GameSpec spec = s.build();
        const RegularityReport r = regularity_check(compute_values(spec, kPart, kGrid), spec);
        for (std::size_t p = 0; p < 2; ++p) {
            CHECK(r.lipschitz_x[p] <= 1e-12);
            CHECK(r.holder_t[p] <= 1e-12);
        }
    }
    SUBCASE("smoothed tanh contracts") {
        fixtures::Spec1d s;
        s.sigma = fixtures::unit_sigma;
        s.phi1 = [](double x) { return std::tanh(x); };
        const GameSpec spec = s.build();
        const ValueField f = compute_values(spec, kPart, kGrid);
        const RegularityReport r = regularity_check(f, spec);
        // Difference quotients of E tanh(x + sqrt(T - t) N) on the same nodes.
        double oracle = 0.0;
        const auto h = [](double x) { return std::tanh(x); };
        for (std::size_t i = 0; i < kPart.size(); ++i) {
            const double sd = std::sqrt(1.0 - kPart.knot(i));
            std::vector<double> g(kGrid.size());
            for (std::size_t node = 0; node < kGrid.size(); ++node) {
                const double x = kGrid.point(node)[0];
                g[node] = sd > 0.0 ? fixtures::gaussian_mean(h, x, sd) : h(x);
            }
            for (std::size_t node = 0; node + 1 < kGrid.size(); ++node) {
                oracle = std::max(oracle, std::abs(g[node + 1] - g[node]) / kGrid.spacing(0));
            }
        }
        CHECK(oracle <= 1.0);
        CHECK(r.lipschitz_x[0] <= 1.0 + 1e-9);
        CHECK(r.lipschitz_x[0] == doctest::Approx(oracle).epsilon(1e-3));
    }
    SUBCASE("bilinear-1d constants are finite and below the reference") {
        const GameSpec spec = make_game("bilinear-1d");
        const RegularityReport r = regularity_check(compute_values(spec, kPart, kGrid), spec);
        for (std::size_t p = 0; p < 2; ++p) {
            CHECK(std::isfinite(r.lipschitz_x[p]));
            CHECK(std::isfinite(r.holder_t[p]));
        }
        CHECK(r.within_reference);
    }
}

TEST_CASE("values CSV") {
    const GameSpec spec = make_game("bilinear-1d");
    const StateGrid grid = StateGrid::uniform_1d(-1.0, 1.0, 5);
    const ValueField f = compute_values(spec, TimePartition::uniform(0.0, 1.0, 4), grid, no_audit());
    std::ostringstream os;
    write_values_csv(f, spec, os);
    const std::string text = os.str();
    CHECK(text.find("knot,t,node,x1,W1,W2,W1_upper,W2_upper,saddle1_u,saddle1_v,saddle2_u,saddle2_v,punish1_u,punish2_v\n") !=
          std::string::npos);
    CHECK(std::count(text.begin(), text.end(), '\n') == 2 + 5 * 5);
}
