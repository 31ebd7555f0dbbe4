#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "bsdegame/controls.hpp"
#include "bsdegame/game_model.hpp"
#include "bsdegame/grid.hpp"

namespace bsdegame {

struct StartPoint {
    double t = 0.0;
    Vec x;
};

/// What a control rule may look at when choosing the pair for `step`:
/// the states at knots 0..step and the pairs already played on cells 0..step-1.
struct RuleContext {
    std::size_t path = 0;
    std::size_t step = 0;
    double t = 0.0;
    std::span<const Vec> states;
    std::span<const IndexPair> history;
};

using ControlRule = std::function<IndexPair(const RuleContext&)>;

ControlRule constant_rule(IndexPair pair);
ControlRule feedback_rule(FeedbackTable table);

/// Seeded ensemble of Euler–Maruyama trajectories.
struct PathBundle {
    TimePartition partition;
    StartPoint start;
    std::uint64_t seed = 0;
    std::size_t path_count = 0;
    std::size_t state_dim = 0;
    std::size_t noise_dim = 0;
    std::vector<Vec> states;          ///< path-major, steps+1 per path
    std::vector<Vec> noise;           ///< Brownian increments, steps per path
    std::vector<IndexPair> controls;  ///< steps per path
    std::size_t box_exits = 0;        ///< paths that left the game's state box

    std::size_t steps() const noexcept { return partition.steps(); }
    const Vec& state(std::size_t path, std::size_t knot) const { return states[path * (steps() + 1) + knot]; }
    const Vec& increment(std::size_t path, std::size_t step) const { return noise[path * steps() + step]; }
    const IndexPair& control(std::size_t path, std::size_t step) const { return controls[path * steps() + step]; }
    std::span<const Vec> path_states(std::size_t path) const {
        return {states.data() + path * (steps() + 1), steps() + 1};
    }
    std::span<const IndexPair> path_controls(std::size_t path) const {
        return {controls.data() + path * steps(), steps()};
    }
};

/// Derives the per-path generator seed; the noise of path m depends only on (seed, m).
std::uint64_t path_seed(std::uint64_t seed, std::size_t path);

/// Brownian increments for one path, N(0, dt_i I_d) per step.
std::vector<Vec> brownian_increments(const TimePartition& partition, std::size_t noise_dim,
                                     std::uint64_t seed, std::size_t path);

/// X_{i+1} = X_i + b dt + sigma dB with the rule's controls held on each cell.
///
/// Throws NumericalError naming the path and step when a state becomes
/// non-finite. Paths leaving spec.state_box are counted in box_exits.
PathBundle simulate(const GameSpec& spec, const StartPoint& start, const TimePartition& partition,
                    const ControlRule& rule, std::size_t path_count, std::uint64_t seed);

/// Linear-growth constant K with |b|, |sigma| <= K (1 + |x|), from L and sampled values at x = 0.
double linear_growth_constant(const GameSpec& spec);

/// C_p from the Gronwall/BDG argument for E sup |X|^p <= C_p (1 + |x|^p).
double gronwall_moment_constant(const GameSpec& spec, int p);

struct MomentReport {
    int p = 2;
    double empirical = 0.0;  ///< mean over paths of max over knots of |X|^p
    double std_error = 0.0;
    double constant = 0.0;   ///< C_p
    double bound = 0.0;      ///< C_p (1 + |x|^p)
    bool within = true;
};

MomentReport moment_check(const GameSpec& spec, const PathBundle& bundle, int p);

struct PairMomentReport {
    double empirical = 0.0;  ///< E sup |X - X'|^2 under common noise
    double std_error = 0.0;
    double start_distance_sq = 0.0;
    double ratio = 0.0;      ///< empirical / |x - x'|^2, the observed C_2
};

/// Simulates from x and x' with identical noise and controls chosen by `rule`.
PairMomentReport pair_moment_check(const GameSpec& spec, const StartPoint& a, const Vec& x_other,
                                   const TimePartition& partition, const ControlRule& rule,
                                   std::size_t path_count, std::uint64_t seed);

/// CSV: one row per (path, knot); '#' header lines carry seed and knots.
void write_paths_csv(const PathBundle& bundle, const GameSpec& spec, std::ostream& out);

}  // namespace bsdegame
