#pragma once

#include <cmath>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bsdegame/controls.hpp"
#include "bsdegame/game_model.hpp"
#include "bsdegame/grid.hpp"
#include "bsdegame/quadrature.hpp"
#include "bsdegame/sde_sim.hpp"

namespace bsdegame {

struct SchemeOptions {
    std::size_t quadrature_order = 7;
    double tolerance = 1e-12;
    std::size_t max_iterations = 100;
    BoundaryPolicy boundary = BoundaryPolicy::Clamp;
};

/// Result of one backward step at a single node.
struct StepResult {
    double y = 0.0;
    Vec z;
    double expectation = 0.0;  ///< quadrature mean of the next slice
    std::size_t iterations = 0;
};

/// Quadrature moments of the next slice seen from x: E[Y'] and E[Y' dB]/dt.
inline void conditional_moments(const StateGrid& grid, std::span<const double> next, const GaussHermite& gh,
                                const Vec& x, const Dynamics& dyn, double dt, BoundaryPolicy boundary,
                                double& ey, Vec& z) {
    const double sqdt = std::sqrt(dt);
    const Vec base = x + dyn.drift * dt;
    ey = 0.0;
    z = Vec(gh.dim());
    for (std::size_t k = 0; k < gh.size(); ++k) {
        const Vec& xi = gh.node(k);
        const Vec xp = base + dyn.diffusion.apply(xi) * sqdt;
        const double val = gh.weight(k) * grid.interpolate(next, xp, boundary);
        ey += val;
        for (std::size_t a = 0; a < gh.dim(); ++a) z[a] += val * xi[a];
    }
    for (std::size_t a = 0; a < gh.dim(); ++a) z[a] /= sqdt;
}

/// Y = E[Y'] + dt f(Y, Z), Z = E[Y' dB]/dt, solved by fixed point from Y = E[Y'].
///
/// `f` is called as f(y, z). Throws NumericalError when the iteration fails
/// to reach `opts.tolerance` within `opts.max_iterations`.
template <typename Driver>
StepResult backward_step(const StateGrid& grid, std::span<const double> next, const GaussHermite& gh,
                         const Vec& x, const Dynamics& dyn, double dt, Driver&& f, const SchemeOptions& opts) {
    StepResult r;
    conditional_moments(grid, next, gh, x, dyn, dt, opts.boundary, r.expectation, r.z);
    double y = r.expectation;
    for (std::size_t it = 1; it <= opts.max_iterations; ++it) {
        const double y_new = r.expectation + dt * f(y, r.z);
        if (!std::isfinite(y_new)) throw NumericalError("backward step produced a non-finite value");
        const double change = std::abs(y_new - y);
        y = y_new;
        if (change <= opts.tolerance) {
            r.y = y;
            r.iterations = it;
            return r;
        }
    }
    throw NumericalError("implicit backward step did not converge in " + std::to_string(opts.max_iterations) +
                         " iterations; refine the time partition so that L*dt < 1");
}

/// Y and Z on a time partition x state grid for one player.
struct BackwardSolution {
    TimePartition partition;
    StateGrid grid;
    Player player = Player::First;
    BoundaryPolicy boundary = BoundaryPolicy::Clamp;
    std::vector<double> Y;  ///< knot-major, grid.size() per knot
    std::vector<Vec> Z;     ///< knot-major; terminal knot is zero
    std::string control_source;               ///< "feedback", "fixed u/v" or "generic"
    std::optional<FeedbackTable> feedback;    ///< controls used, when Markov
    TerminalFn terminal;                      ///< exact terminal map, when known

    std::size_t nodes() const noexcept { return grid.size(); }
    double y(std::size_t knot, std::size_t node) const { return Y[knot * nodes() + node]; }
    const Vec& z(std::size_t knot, std::size_t node) const { return Z[knot * nodes() + node]; }
    std::span<const double> slice(std::size_t knot) const { return {Y.data() + knot * nodes(), nodes()}; }
    /// Interpolated Y at knot for an arbitrary state.
    double value_at(std::size_t knot, const Vec& x) const { return grid.interpolate(slice(knot), x, boundary); }
};

/// Arguments of a generic driver.
struct DriverArgs {
    std::size_t step = 0;
    double t = 0.0;
    const Vec& x;
    double y = 0.0;
    const Vec& z;
};

using GenericDriver = std::function<double(const DriverArgs&)>;
/// One-step kernel: drift and diffusion used from (step, t, x).
using Transition = std::function<Dynamics(std::size_t step, double t, const Vec& x)>;

/// Transition of the game's dynamics under a feedback table.
Transition feedback_transition(const GameSpec& spec, const FeedbackTable& table);

/// Backward recursion of the BSDE with driver f_j under Markov feedback.
///
/// The terminal slice is Phi_j on the nodes. Throws UsageError when the
/// table does not match the partition/grid, NumericalError on
/// non-convergence of the implicit step.
BackwardSolution solve_markov(const GameSpec& spec, Player j, const FeedbackTable& feedback,
                              const TimePartition& partition, const StateGrid& grid,
                              const SchemeOptions& opts = {});

/// Same recursion with a caller-supplied driver, terminal values and kernel.
BackwardSolution solve_generic(const GenericDriver& f, std::span<const double> terminal_values,
                               const TimePartition& partition, const StateGrid& grid,
                               const Transition& transition, std::size_t noise_dim,
                               const SchemeOptions& opts = {});

/// Y and Z interpolated along every path of a bundle.
struct PathValues {
    std::size_t path_count = 0;
    std::size_t knots = 0;
    std::vector<double> Y;  ///< path-major
    std::vector<Vec> Z;

    double y(std::size_t path, std::size_t knot) const { return Y[path * knots + knot]; }
    const Vec& z(std::size_t path, std::size_t knot) const { return Z[path * knots + knot]; }
};

/// Markov evaluation of Y along simulated trajectories.
///
/// Throws UsageError when partitions differ or when a path's control does
/// not equal the solution's feedback at the visited state. At the terminal
/// knot the exact terminal map is used when the solution carries one.
PathValues path_values(const BackwardSolution& solution, const PathBundle& bundle);

/// Both sides of the start-node stability inequality for two solutions
/// whose drivers differ by an additive term phi1 - phi2.
struct StabilityReport {
    double beta = 0.0;
    double lhs = 0.0;          ///< |dY_t|^2 + 1/2 E int e^{beta(s-t)} (|dY|^2 + |dZ|^2) ds
    double rhs = 0.0;          ///< E e^{beta(T-t)} |dxi|^2 + E int e^{beta(s-t)} |dphi|^2 ds
    double violation = 0.0;    ///< max(0, lhs - rhs)
    double lhs_printed = 0.0;  ///< same sums with the weight e^{beta(t-s)}
    double rhs_printed = 0.0;
};

/// Evaluates the stability estimate at `start_node`, taking expectations
/// with the lattice transition law propagated forward from that node.
///
/// `phi_diff(step, node)` returns phi1 - phi2. Requires Clamp boundaries so
/// that the propagated law stays a probability vector.
StabilityReport stability_estimate(const BackwardSolution& first, const BackwardSolution& second,
                                   const std::function<double(std::size_t, std::size_t)>& phi_diff,
                                   const Transition& transition, std::size_t noise_dim, std::size_t start_node,
                                   double lipschitz, const SchemeOptions& opts = {});

/// Lattice law of X at every knot starting from a node: row i holds the
/// probabilities of the grid nodes at knot i.
std::vector<std::vector<double>> propagate_law(const StateGrid& grid, const TimePartition& partition,
                                               const Transition& transition, std::size_t noise_dim,
                                               std::size_t start_node, const SchemeOptions& opts = {});

/// A-priori bounds observed on a solution.
struct AprioriReport {
    double sup_abs = 0.0;         ///< max |Y|
    double crude_bound = 0.0;     ///< M (1 + T) + M
    double growth_constant = 0.0; ///< max |Y| / (1 + |x|)
    double lipschitz_x = 0.0;     ///< max over adjacent nodes |dY| / |dx|
    bool within = true;
};

AprioriReport apriori_check(const BackwardSolution& solution, const GameSpec& spec);

/// CSV: knot, t, node, x..., Y, Z...
void write_solution_csv(const BackwardSolution& solution, std::ostream& out);

}  // namespace bsdegame
