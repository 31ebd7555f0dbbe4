#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "bsdegame/families.hpp"
#include "bsdegame/nash_engine.hpp"
#include "bsdegame/quadrature.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace bsdegame;

namespace {

const StateGrid kGrid = StateGrid::uniform_1d(-5.0, 5.0, 101);
const TimePartition kPart = TimePartition::uniform(0.0, 1.0, 50);
const StartPoint kStart{0.0, Vec{0.0}};

}  // namespace

TEST_CASE("control-free: the saddle pair qualifies with zero slack") {
    const GameSpec spec = make_game("control-free");
    // Player 2's lattice value at x = 0 carries an interpolation bias of about 0.025 at 101 nodes.
    const StateGrid grid = StateGrid::uniform_1d(-5.0, 5.0, 401);
    const ValueField f = compute_values(spec, kPart, grid);
    const Construction c = construct_equilibrium(spec, f, 0.05);
    CHECK(c.diagnostics.saddle_selected == 50 * grid.size());
    CHECK(c.diagnostics.scan_selected == 0);
    for (std::size_t p = 0; p < 2; ++p) {
        for (double s : c.diagnostics.slack[p]) CHECK(std::abs(s) <= 1e-12);
    }
    const EquilibriumCertificate cert = verify_certificate(spec, c.controls, f, 0.05, kStart, 2000, 7);
    for (std::size_t p = 0; p < 2; ++p) {
        for (double q : cert.probability[p]) CHECK(q == 1.0);
    }
    CHECK(cert.passed);
}

TEST_CASE("zero-sum: the construction picks the saddle and payoffs cancel") {
    const GameSpec spec = make_game("antisymmetric");
    const ValueField f = compute_values(spec, kPart, kGrid);
    const Construction c = construct_equilibrium(spec, f, 0.05);
    for (std::size_t i = 0; i < 50; ++i) {
        for (std::size_t node = 0; node < kGrid.size(); ++node) {
            CHECK(c.controls.at(i, node) == IndexPair{f.saddle[0].at(i, node).u, f.saddle[1].at(i, node).v});
        }
    }
    for (std::size_t p = 0; p < 2; ++p) {
        for (double s : c.diagnostics.slack[p]) CHECK(std::abs(s) <= 1e-8);
    }
    const EquilibriumCertificate cert = verify_certificate(spec, c.controls, f, 0.05, kStart, 10000, 7);
    CHECK(cert.passed);
    CHECK(std::abs(cert.payoff[0] + cert.payoff[1]) <= 2e-2);
    CHECK(std::abs(cert.mc_mean[0] + cert.mc_mean[1]) <= 2e-2);
}

TEST_CASE("bilinear-1d: every node has a qualifying pair") {
    const GameSpec spec = make_game("bilinear-1d");
    const ValueField f = compute_values(spec, kPart, kGrid);
    const double eps = 0.05;
    const Construction c = construct_equilibrium(spec, f, eps);
    // Exhaustive per-node scan.
    const GaussHermite gh(7, 1);
    const SchemeOptions opts;
    const std::size_t nv = spec.V.size();
    std::size_t nodes_with_pair = 0;
    for (std::size_t i = 0; i < 50; ++i) {
        for (std::size_t node = 0; node < kGrid.size(); ++node) {
            const auto G1 = one_step_table(spec, Player::First, kPart, i, kGrid, node, f.slice(Player::First, i + 1), gh, opts);
            const auto G2 = one_step_table(spec, Player::Second, kPart, i, kGrid, node, f.slice(Player::Second, i + 1), gh, opts);
            const double w1 = f.w(Player::First, i, node), w2 = f.w(Player::Second, i, node);
            bool any = false;
            for (std::size_t k = 0; k < G1.size(); ++k) any = any || (G1[k] >= w1 - eps && G2[k] >= w2 - eps);
            nodes_with_pair += any;
            const IndexPair chosen = c.controls.at(i, node);
            CHECK(G1[chosen.u * nv + chosen.v] >= w1 - eps);
            CHECK(G2[chosen.u * nv + chosen.v] >= w2 - eps);
        }
    }
    CHECK(nodes_with_pair == 50 * kGrid.size());
    CHECK(c.diagnostics.min_slack[0] >= -eps);
    CHECK(c.diagnostics.min_slack[1] >= -eps);
}

TEST_CASE("flagged Isaacs audit blocks the construction") {
    const GameSpec spec = make_game("pennies");
    const ValueField f = compute_values(spec, kPart, kGrid);
    CHECK_THROWS_AS(construct_equilibrium(spec, f, 0.05), UsageError);
}

TEST_CASE("playing player 1's worst pair fails the certificate") {
    const GameSpec spec = make_game("bilinear-1d");
    const ValueField f = compute_values(spec, kPart, kGrid);
    const GaussHermite gh(7, 1);
    FeedbackTable worst(50, kGrid);
    for (std::size_t i = 0; i < 50; ++i) {
        for (std::size_t node = 0; node < kGrid.size(); ++node) {
            const auto G1 = one_step_table(spec, Player::First, kPart, i, kGrid, node, f.slice(Player::First, i + 1), gh, {});
            std::size_t arg = 0;
            for (std::size_t k = 1; k < G1.size(); ++k) {
                if (G1[k] < G1[arg]) arg = k;
            }
            worst.at(i, node) = {arg / spec.V.size(), arg % spec.V.size()};
        }
    }
    const double eps = 0.05;
    const auto slack = table_slack(spec, f, worst);
    double min_slack = std::numeric_limits<double>::infinity();
    for (double s : slack[0]) min_slack = std::min(min_slack, s);
    CHECK(min_slack < 0.0);
    const EquilibriumCertificate cert = verify_certificate(spec, worst, f, eps, kStart, 2000, 7);
    CHECK(cert.min_probability[0] < 1.0 - eps);
    CHECK_FALSE(cert.passed);
}

TEST_CASE("certificate replay is deterministic") {
    const GameSpec spec = make_game("bilinear-1d");
    const ValueField f = compute_values(spec, kPart, kGrid);
    const Construction c = construct_equilibrium(spec, f, 0.05);
    const auto a = verify_certificate(spec, c.controls, f, 0.05, kStart, 1000, 3);
    const auto b = verify_certificate(spec, c.controls, f, 0.05, kStart, 1000, 3);
    std::ostringstream sa, sb;
    write_certificate_csv(a, kPart, sa);
    write_certificate_csv(b, kPart, sb);
    CHECK(sa.str() == sb.str());
    CHECK(sa.str().find("knot,t,p1,p2,threshold\n") != std::string::npos);
    CHECK(a.probability_std_error == doctest::Approx(std::sqrt(0.05 * 0.95 / 1000.0)));
    CHECK(a.probability_threshold == doctest::Approx(0.95 - 3.0 * a.probability_std_error));
}

TEST_CASE("deviation test") {
    SUBCASE("no deviations") {
        const GameSpec spec = make_game("bilinear-1d");
        const ValueField f = compute_values(spec, kPart, kGrid);
        const Construction c = construct_equilibrium(spec, f, 0.05);
        const DeviationReport r = deviation_test(spec, c.controls, f, {}, 0.05, kStart, 200, 1);
        CHECK(r.passed);
        CHECK(r.max_gain[0] == -std::numeric_limits<double>::infinity());
        CHECK(r.max_gain[1] == -std::numeric_limits<double>::infinity());
        CHECK_FALSE(r.argmax[0]);
    }
    SUBCASE("controls without effect give zero gain") {
        const GameSpec spec = make_game("control-free");
        const ValueField f = compute_values(spec, kPart, kGrid);
        const Construction c = construct_equilibrium(spec, f, 0.05);
        const auto devs = constant_deviations(Player::Second, kPart, spec.V.size());
        std::vector<Deviation> differing;
        for (const auto& d : devs) {
            try {
                check_deviation(d, c.controls, spec.V.size());
                differing.push_back(d);
            } catch (const UsageError&) {
            }
        }
        REQUIRE_FALSE(differing.empty());
        const DeviationReport r = deviation_test(spec, c.controls, f, differing, 0.05, kStart, 500, 2);
        for (const auto& o : r.outcomes) {
            CHECK(o.mc_gain == 0.0);
            CHECK(std::abs(o.lattice_gain) <= 1e-12);
        }
        CHECK(r.passed);
    }
    SUBCASE("bilinear-1d deviations gain at most 0.1") {
        const GameSpec spec = make_game("bilinear-1d");
        const ValueField f = compute_values(spec, kPart, kGrid);
        const Construction c = construct_equilibrium(spec, f, 0.05);
        auto devs = standard_deviation_set(spec, c.controls, kPart, 10);
        REQUIRE(devs.size() >= 20);
        // Twenty spread over both players and both kinds.
        std::vector<Deviation> picked;
        for (std::size_t k = 0; k < devs.size() && picked.size() < 20; k += devs.size() / 20) picked.push_back(devs[k]);
        const DeviationReport r = deviation_test(spec, c.controls, f, picked, 0.05, kStart, 1000, 7);
        CHECK(r.max_gain[0] <= 0.1);
        CHECK(r.max_gain[1] <= 0.1);
        CHECK(r.passed);
        std::ostringstream os;
        write_deviations_csv(r, os);
        const std::string text = os.str();
        CHECK(std::count(text.begin(), text.end(), '\n') == 2 + static_cast<long>(picked.size()));
    }
    SUBCASE("inputs are validated") {
        const GameSpec spec = make_game("bilinear-1d");
        const ValueField f = compute_values(spec, kPart, kGrid);
        const Construction c = construct_equilibrium(spec, f, 0.05);
        Deviation d = constant_deviations(Player::First, kPart, 3)[0];
        d.forced.resize(10);
        CHECK_THROWS_AS(deviation_test(spec, c.controls, f, {d}, 0.05, kStart, 10, 1), UsageError);
    }
}
