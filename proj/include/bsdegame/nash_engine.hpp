#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "bsdegame/bsde_solver.hpp"
#include "bsdegame/sde_sim.hpp"
#include "bsdegame/strategies.hpp"
#include "bsdegame/value_pde.hpp"

namespace bsdegame {

/// No pair satisfies both one-step inequalities at some node.
class ConstructionError : public NumericalError {
public:
    ConstructionError(std::size_t step, std::size_t node, double best_slack_1, double best_slack_2,
                      const std::string& message)
        : NumericalError(message), step(step), node(node), best_slack{best_slack_1, best_slack_2} {}
    std::size_t step;
    std::size_t node;
    std::array<double, 2> best_slack;
};

struct ConstructionDiagnostics {
    double epsilon = 0.0;
    std::size_t saddle_selected = 0;   ///< nodes where the coupled saddle pair qualified
    std::size_t scan_selected = 0;     ///< nodes resolved by the exhaustive scan
    std::array<double, 2> min_slack{}; ///< min over (step, node) of G_j - W_j at the selected pair
    std::array<std::vector<double>, 2> slack;  ///< step-major
};

struct Construction {
    FeedbackTable controls;
    ConstructionDiagnostics diagnostics;
};

/// Picks, at every (step, node), a pair with W_j - eps <= G_j[W_j(next)] for j = 1, 2.
///
/// The pair (u* of player 1's saddle, v* of player 2's saddle) is tried first,
/// then U x V in lexicographic order. Throws UsageError when the attached
/// Isaacs audit is flagged and ConstructionError when a node has no pair.
Construction construct_equilibrium(const GameSpec& spec, const ValueField& values, double epsilon,
                                   const SchemeOptions& opts = {});

/// Per-node slack G_j[W_j(next)] - W_j under an arbitrary table, step-major.
std::array<std::vector<double>, 2> table_slack(const GameSpec& spec, const ValueField& values,
                                               const FeedbackTable& controls, const SchemeOptions& opts = {});

struct EquilibriumCertificate {
    StartPoint start;
    double epsilon = 0.0;
    std::size_t path_count = 0;
    std::uint64_t seed = 0;
    std::array<double, 2> payoff{};          ///< e_j, lattice value at the start
    std::array<double, 2> mc_mean{};         ///< mean of Phi_j(X_T) + sum f_j dt
    std::array<double, 2> mc_std_error{};
    std::array<bool, 2> consistent{};        ///< |mc_mean - e_j| <= 3 se
    std::array<std::vector<double>, 2> probability;  ///< per knot P[Y_j >= W_j - eps]
    double probability_std_error = 0.0;      ///< sqrt(eps (1 - eps) / M)
    double probability_threshold = 0.0;      ///< 1 - eps - 3 se
    std::array<double, 2> min_probability{};
    std::size_t box_exits = 0;
    std::optional<std::array<double, 2>> deviation_gain;  ///< filled by attach_deviations
    bool passed = false;
};

/// Simulates M paths under the feedback and checks the per-knot
/// probabilities and the start-value consistency.
EquilibriumCertificate verify_certificate(const GameSpec& spec, const FeedbackTable& controls,
                                          const ValueField& values, double epsilon, const StartPoint& start,
                                          std::size_t path_count, std::uint64_t seed, const SchemeOptions& opts = {});

struct DeviationOutcome {
    std::string label;
    Player deviator = Player::First;
    double lattice_payoff = 0.0;
    double lattice_gain = 0.0;   ///< deterministic, augmented lattice
    double mc_gain = 0.0;        ///< mean paired difference with common noise
    double mc_std_error = 0.0;
    double detected_fraction = 0.0;
    double efficacy = -std::numeric_limits<double>::infinity();  ///< max Y_pun - W_dev at detection knots
};

struct DeviationReport {
    double epsilon = 0.0;
    std::size_t path_count = 0;
    std::uint64_t seed = 0;
    std::array<double, 2> nominal_payoff{};
    std::vector<DeviationOutcome> outcomes;
    std::array<double, 2> max_gain{-std::numeric_limits<double>::infinity(),
                                   -std::numeric_limits<double>::infinity()};
    std::array<std::optional<std::size_t>, 2> argmax;      ///< index into outcomes, by MC gain
    std::array<std::optional<std::size_t>, 2> lattice_argmax;
    std::array<double, 2> margin{};   ///< 3 se + 2 grid slack
    std::array<double, 2> grid_slack{};
    double max_efficacy = -std::numeric_limits<double>::infinity();
    bool efficacy_ok = true;
    bool passed = true;
};

/// Augmented two-mode lattice for one deviation: mode 0 before detection,
/// mode 1 after (punisher plays its punishing feedback).
struct ModalSolution {
    std::vector<double> nominal_mode;   ///< knot-major
    std::vector<double> punished_mode;
    std::vector<Vec> nominal_z;
    std::vector<Vec> punished_z;
};

ModalSolution solve_modal(const GameSpec& spec, const Deviation& d, const FeedbackTable& nominal,
                          const ValueField& values, const SchemeOptions& opts = {});

/// Plays every deviation against the other player's punishment strategy.
///
/// Passes iff, for both players, max MC gain <= eps + 3 se + 2 grid slack.
DeviationReport deviation_test(const GameSpec& spec, const FeedbackTable& nominal, const ValueField& values,
                               const std::vector<Deviation>& deviations, double epsilon, const StartPoint& start,
                               std::size_t path_count, std::uint64_t seed, const SchemeOptions& opts = {});

/// Single-cell deviations on a coarse sub-partition plus constant deviations, for both players.
std::vector<Deviation> standard_deviation_set(const GameSpec& spec, const FeedbackTable& nominal,
                                              const TimePartition& partition, std::size_t coarse_cells);

/// CSV: knot, t, P1, P2, threshold.
void write_certificate_csv(const EquilibriumCertificate& cert, const TimePartition& partition, std::ostream& out);
/// CSV: label, deviator, lattice_payoff, lattice_gain, mc_gain, mc_std_error, detected_fraction, efficacy.
void write_deviations_csv(const DeviationReport& report, std::ostream& out);

}  // namespace bsdegame
