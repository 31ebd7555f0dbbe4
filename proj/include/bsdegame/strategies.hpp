#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bsdegame/controls.hpp"
#include "bsdegame/game_model.hpp"
#include "bsdegame/grid.hpp"
#include "bsdegame/value_pde.hpp"

namespace bsdegame {

enum class Side { I, II };  ///< I chooses u, II chooses v

inline Side side_of(Player p) noexcept { return p == Player::First ? Side::I : Side::II; }

/// What a delay strategy sees when choosing its control on cell i.
struct StrategyInput {
    std::size_t cell = 0;
    std::span<const std::size_t> own;       ///< own controls on cells 0..i-1
    std::span<const std::size_t> opponent;  ///< opponent controls on cells 0..i-1
    std::span<const Vec> states;            ///< states at knots 0..i
};

using ResponseFn = std::function<std::size_t(const StrategyInput&)>;

/// Nonanticipative strategy with delay on a fixed partition.
///
/// The response on cell i is only ever handed opponent controls of cells
/// before i, so the delay property holds by construction.
class NADStrategy {
public:
    NADStrategy() = default;
    NADStrategy(TimePartition partition, Side side, ResponseFn respond, std::string name = "strategy");

    static NADStrategy constant(const TimePartition& partition, Side side, std::size_t control);

    const TimePartition& partition() const noexcept { return partition_; }
    Side side() const noexcept { return side_; }
    const std::string& name() const noexcept { return name_; }
    std::size_t cells() const noexcept { return partition_.steps(); }

    /// Checks the input shape, then calls the response rule.
    std::size_t respond(const StrategyInput& in) const;

    /// Full response alpha(w) to an opponent sequence, given the states at every knot.
    std::vector<std::size_t> play(std::span<const std::size_t> opponent, std::span<const Vec> states) const;

private:
    TimePartition partition_;
    Side side_ = Side::I;
    ResponseFn respond_;
    std::string name_;
};

/// State transition used while coupling: x_{i+1} from (i, x_i, pair on cell i).
struct StateSource {
    Vec x0;
    std::function<Vec(std::size_t cell, const Vec& x, IndexPair pair)> step;

    /// States that stay at x0 for ever.
    static StateSource frozen(const Vec& x0, std::size_t steps);
};

/// Euler step of the game's dynamics with one path's fixed Brownian increments.
StateSource euler_state_source(const GameSpec& spec, const TimePartition& partition, const Vec& x0,
                               std::vector<Vec> increments);

enum class CouplingOrder { Jacobi, AlphaFirst, BetaFirst };

struct CouplingResult {
    ControlPair pair;
    std::vector<Vec> states;     ///< knots 0..n
    std::size_t iterations = 0;  ///< cells resolved, always n
    bool fixed_point = false;    ///< alpha(v) == u and beta(u) == v on replay
};

/// Cell-by-cell construction of the unique (u, v) with alpha(v) = u, beta(u) = v.
CouplingResult couple(const NADStrategy& alpha, const NADStrategy& beta, const StateSource& source,
                      CouplingOrder order = CouplingOrder::Jacobi);

struct FixedPointTrace {
    std::size_t v = 0;          ///< candidate constant control of player II
    std::size_t u = 0;          ///< phi(v)
    std::size_t psi_of_u = 0;   ///< psi(phi(v))
    bool consistent = false;    ///< psi(phi(v)) == v
};

struct FixedPointDemo {
    std::size_t set_size = 0;
    std::vector<FixedPointTrace> trace;
    std::size_t candidates_examined = 0;
    bool couple_found = false;
    std::optional<IndexPair> couple;  ///< first consistent (u, v)
    std::string verdict;              ///< "no fixed point" or "couple found"
};

/// Zero-delay strategies alpha(v)_s = phi(v_s), beta(u)_s = psi(u_s) on
/// U = V = {0..k-1}: exhaustive search over constant controls for a couple.
FixedPointDemo no_delay_counterexample(const std::vector<std::size_t>& phi = {0, 1},
                                       const std::vector<std::size_t>& psi = {1, 0});

/// Punishing strategy for `punisher`.
///
/// Plays its component of `nominal` while the opponent's control on every
/// completed cell k equals the nominal entry at (k, X_k). From the cell
/// after the first mismatch it plays the punishing feedback of `values`.
NADStrategy punishment_strategy(Player punisher, const FeedbackTable& nominal, const ValueField& values);

/// First cell where the opponent of `punisher` left the nominal table, if any.
std::optional<std::size_t> detection_cell(Player punisher, const FeedbackTable& nominal,
                                          std::span<const std::size_t> opponent, std::span<const Vec> states);

/// Unilateral deviation: forced control on some cells, nominal feedback elsewhere.
struct Deviation {
    Player deviator = Player::First;
    std::string label;
    std::vector<std::optional<std::size_t>> forced;  ///< one entry per fine cell

    /// Control the deviator plays on `cell` at x.
    std::size_t control(std::size_t cell, const Vec& x, const FeedbackTable& nominal) const;
};

/// The deviation as a delay strategy against the nominal table.
NADStrategy deviation_strategy(const Deviation& d, const FeedbackTable& nominal, const TimePartition& partition);

/// One deviation per (coarse cell, control index) for the deviator: the
/// control is forced on that coarse cell. Throws UsageError when `coarse_cells`
/// does not divide the step count.
std::vector<Deviation> single_cell_deviations(Player deviator, const TimePartition& partition,
                                              std::size_t coarse_cells, std::size_t control_count);

/// One deviation per control index, forced on every cell.
std::vector<Deviation> constant_deviations(Player deviator, const TimePartition& partition,
                                           std::size_t control_count);

/// Throws UsageError unless the deviation has one entry per cell, valid
/// indices, and differs from the nominal table at some (cell, node).
void check_deviation(const Deviation& d, const FeedbackTable& nominal, std::size_t control_count);

}  // namespace bsdegame
