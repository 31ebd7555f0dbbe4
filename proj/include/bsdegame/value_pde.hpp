#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "bsdegame/bsde_solver.hpp"
#include "bsdegame/hamiltonian.hpp"

namespace bsdegame {

/// Zero-sum security values W_1, W_2 on a partition x grid with their feedback tables.
///
/// W_1: player I maximizes, player II minimizes f_1's BSDE value.
/// W_2: player II maximizes, player I minimizes f_2's BSDE value.
/// W holds the max-min recursion; W_upper the min-max recursion.
struct ValueField {
    TimePartition partition;
    StateGrid grid;
    BoundaryPolicy boundary = BoundaryPolicy::Clamp;
    std::array<std::vector<double>, 2> W;        ///< knot-major
    std::array<std::vector<double>, 2> W_upper;  ///< knot-major
    std::array<FeedbackTable, 2> saddle;         ///< (u*, v*) of each player's max-min recursion
    std::vector<std::size_t> punish_1;           ///< u minimizing max_v G_2, step-major
    std::vector<std::size_t> punish_2;           ///< v minimizing max_u G_1, step-major
    std::array<std::vector<double>, 2> node_gap; ///< one-step min-max minus max-min, step-major
    std::array<std::vector<double>, 2> slack;    ///< accumulated grid slack per knot
    std::array<double, 2> recursion_gap{};       ///< max |W_upper - W|
    std::optional<IsaacsAudit> audit;

    std::size_t nodes() const noexcept { return grid.size(); }
    double w(Player j, std::size_t knot, std::size_t node) const {
        return W[player_index(j)][knot * nodes() + node];
    }
    std::span<const double> slice(Player j, std::size_t knot) const {
        return {W[player_index(j)].data() + knot * nodes(), nodes()};
    }
    double value_at(Player j, std::size_t knot, const Vec& x) const {
        return grid.interpolate(slice(j, knot), x, boundary);
    }
    /// Punishing control of `punisher` against the other player at (step, node).
    std::size_t punish(Player punisher, std::size_t step, std::size_t node) const {
        return (punisher == Player::First ? punish_1 : punish_2)[step * nodes() + node];
    }
    /// Bound on the accumulated difference between the two recursions for player j.
    double grid_slack(Player j) const { return slack[player_index(j)].front(); }
};

struct ValueOptions {
    SchemeOptions scheme;
    bool run_audit = true;
    std::size_t audit_samples = 1000;
    std::uint64_t audit_seed = 1234;
    /// Replaces Phi_j on the last knot when set (used for sub-interval recomposition).
    std::optional<std::array<std::vector<double>, 2>> terminal;
};

/// Values G_j[next](x) at knot i for every pair, row-major (u * |V| + v).
std::vector<double> one_step_table(const GameSpec& spec, Player j, const TimePartition& partition, std::size_t i,
                                   const StateGrid& grid, std::size_t node, std::span<const double> next,
                                   const GaussHermite& gh, const SchemeOptions& opts);

/// Backward max-min dynamic programming for both players.
///
/// Refuses (UsageError) when L * mesh >= 1. The Isaacs audit is attached and
/// only warned about; both recursions are always run.
ValueField compute_values(const GameSpec& spec, const TimePartition& partition, const StateGrid& grid,
                          const ValueOptions& opts = {});

struct RegularityReport {
    std::array<double, 2> lipschitz_x{};  ///< max |W(t,x) - W(t,x')| / |x - x'| over adjacent nodes
    std::array<double, 2> holder_t{};     ///< max |W(t,x) - W(t',x)| / ((1+|x|) |t - t'|^{1/2})
    double reference = 0.0;               ///< constant built from L, M, T for comparison
    bool within_reference = true;
};

RegularityReport regularity_check(const ValueField& field, const GameSpec& spec);

/// CSV: knot, t, node, x..., W1, W2, W1_upper, W2_upper, saddle labels, punish labels.
void write_values_csv(const ValueField& field, const GameSpec& spec, std::ostream& out);

}  // namespace bsdegame
