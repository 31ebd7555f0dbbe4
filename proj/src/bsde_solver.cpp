#include "bsdegame/bsde_solver.hpp"

#include <cmath>
#include <sstream>

#include "bsdegame/parallel.hpp"

namespace bsdegame {

namespace {

void check_table(const FeedbackTable& table, const TimePartition& partition, const StateGrid& grid,
                 const GameSpec& spec) {
    if (table.steps() != partition.steps()) throw UsageError("feedback table steps do not match the partition");
    if (!(table.grid() == grid)) throw UsageError("feedback table grid does not match the state grid");
    table.check_indices(spec.U.size(), spec.V.size());
}

// Shared backward sweep: node_step(step, node, next_slice) -> StepResult.
template <typename NodeStep>
void sweep(BackwardSolution& sol, NodeStep&& node_step) {
    const std::size_t n = sol.partition.steps();
    const std::size_t nodes = sol.grid.size();
    for (std::size_t i = n; i-- > 0;) {
        const std::span<const double> next = sol.slice(i + 1);
        double* y = sol.Y.data() + i * nodes;
        Vec* z = sol.Z.data() + i * nodes;
        parallel_for(nodes, [&](std::size_t node) {
            const StepResult r = node_step(i, node, next);
            y[node] = r.y;
            z[node] = r.z;
        });
    }
}

void allocate(BackwardSolution& sol, std::size_t noise_dim) {
    const std::size_t total = sol.partition.size() * sol.grid.size();
    sol.Y.assign(total, 0.0);
    sol.Z.assign(total, Vec(noise_dim));
}

}  // namespace

Transition feedback_transition(const GameSpec& spec, const FeedbackTable& table) {
    return [spec, table](std::size_t step, double t, const Vec& x) {
        const IndexPair pair = table.lookup(step, x);
        return eval_dynamics(spec, t, x, pair.u, pair.v);
    };
}

BackwardSolution solve_markov(const GameSpec& spec, Player j, const FeedbackTable& feedback,
                              const TimePartition& partition, const StateGrid& grid, const SchemeOptions& opts) {
    if (grid.dim() != spec.state_dim) throw UsageError("solve_markov: grid dimension differs from the state dimension");
    check_table(feedback, partition, grid, spec);
    BackwardSolution sol;
    sol.partition = partition;
    sol.grid = grid;
    sol.player = j;
    sol.boundary = opts.boundary;
    sol.control_source = "feedback";
    sol.feedback = feedback;
    sol.terminal = spec.terminal[player_index(j)];
    allocate(sol, spec.noise_dim);

    const std::size_t n = partition.steps();
    for (std::size_t node = 0; node < grid.size(); ++node) {
        sol.Y[n * grid.size() + node] = eval_terminal(spec, j, grid.point(node));
    }
    const GaussHermite gh(opts.quadrature_order, spec.noise_dim);
    sweep(sol, [&](std::size_t i, std::size_t node, std::span<const double> next) {
        const double t = partition.knot(i);
        const Vec x = grid.point(node);
        const IndexPair pair = feedback.at(i, node);
        const Dynamics dyn = eval_dynamics(spec, t, x, pair.u, pair.v);
        return backward_step(grid, next, gh, x, dyn, partition.dt(i),
                             [&](double y, const Vec& z) { return eval_driver(spec, j, t, x, y, z, pair.u, pair.v); },
                             opts);
    });
    return sol;
}

BackwardSolution solve_generic(const GenericDriver& f, std::span<const double> terminal_values,
                               const TimePartition& partition, const StateGrid& grid, const Transition& transition,
                               std::size_t noise_dim, const SchemeOptions& opts) {
    if (terminal_values.size() != grid.size()) throw UsageError("solve_generic: terminal values do not match the grid");
    if (!f || !transition) throw UsageError("solve_generic: driver and transition are required");
    BackwardSolution sol;
    sol.partition = partition;
    sol.grid = grid;
    sol.boundary = opts.boundary;
    sol.control_source = "generic";
    allocate(sol, noise_dim);
    std::copy(terminal_values.begin(), terminal_values.end(), sol.Y.begin() + partition.steps() * grid.size());

    const GaussHermite gh(opts.quadrature_order, noise_dim);
    sweep(sol, [&](std::size_t i, std::size_t node, std::span<const double> next) {
        const double t = partition.knot(i);
        const Vec x = grid.point(node);
        const Dynamics dyn = transition(i, t, x);
        return backward_step(grid, next, gh, x, dyn, partition.dt(i),
                             [&](double y, const Vec& z) { return f(DriverArgs{i, t, x, y, z}); }, opts);
    });
    return sol;
}

PathValues path_values(const BackwardSolution& solution, const PathBundle& bundle) {
    if (!(solution.partition == bundle.partition)) throw UsageError("path_values: partitions differ");
    const std::size_t knots = bundle.partition.size();
    const std::size_t steps = bundle.partition.steps();
    PathValues out;
    out.path_count = bundle.path_count;
    out.knots = knots;
    out.Y.assign(bundle.path_count * knots, 0.0);
    out.Z.assign(bundle.path_count * knots, Vec(bundle.noise_dim));

    if (solution.feedback) {
        for (std::size_t m = 0; m < bundle.path_count; ++m) {
            for (std::size_t i = 0; i < steps; ++i) {
                const IndexPair expected = solution.feedback->lookup(i, bundle.state(m, i));
                if (!(expected == bundle.control(m, i))) {
                    std::ostringstream os;
                    os << "path_values: path " << m << " step " << i << " played (" << bundle.control(m, i).u << ","
                       << bundle.control(m, i).v << ") but the solution's feedback is (" << expected.u << ","
                       << expected.v << ")";
                    throw UsageError(os.str());
                }
            }
        }
    }

    parallel_for(bundle.path_count, [&](std::size_t m) {
        for (std::size_t i = 0; i < knots; ++i) {
            const Vec& x = bundle.state(m, i);
            double& y = out.Y[m * knots + i];
            if (i == steps && solution.terminal) {
                y = solution.terminal(x);
                continue;
            }
            const Stencil st = solution.grid.stencil(x, solution.boundary);
            y = st.apply(solution.slice(i));
            Vec z(bundle.noise_dim);
            for (std::size_t k = 0; k < st.count; ++k) z += solution.z(i, st.nodes[k]) * st.weights[k];
            out.Z[m * knots + i] = z;
        }
    }, 16);
    return out;
}

std::vector<std::vector<double>> propagate_law(const StateGrid& grid, const TimePartition& partition,
                                               const Transition& transition, std::size_t noise_dim,
                                               std::size_t start_node, const SchemeOptions& opts) {
    if (opts.boundary != BoundaryPolicy::Clamp) throw UsageError("propagate_law requires clamped boundaries");
    if (start_node >= grid.size()) throw UsageError("propagate_law: start node out of range");
    const GaussHermite gh(opts.quadrature_order, noise_dim);
    std::vector<std::vector<double>> law(partition.size(), std::vector<double>(grid.size(), 0.0));
    law[0][start_node] = 1.0;
    for (std::size_t i = 0; i < partition.steps(); ++i) {
        const double dt = partition.dt(i), sqdt = std::sqrt(dt), t = partition.knot(i);
        for (std::size_t node = 0; node < grid.size(); ++node) {
            const double mass = law[i][node];
            if (mass == 0.0) continue;
            const Vec x = grid.point(node);
            const Dynamics dyn = transition(i, t, x);
            const Vec base = x + dyn.drift * dt;
            for (std::size_t k = 0; k < gh.size(); ++k) {
                const Stencil st = grid.stencil(base + dyn.diffusion.apply(gh.node(k)) * sqdt, opts.boundary);
                for (std::size_t s = 0; s < st.count; ++s) law[i + 1][st.nodes[s]] += mass * gh.weight(k) * st.weights[s];
            }
        }
    }
    return law;
}

StabilityReport stability_estimate(const BackwardSolution& first, const BackwardSolution& second,
                                   const std::function<double(std::size_t, std::size_t)>& phi_diff,
                                   const Transition& transition, std::size_t noise_dim, std::size_t start_node,
                                   double lipschitz, const SchemeOptions& opts) {
    if (!(first.partition == second.partition) || !(first.grid == second.grid)) {
        throw UsageError("stability_estimate: solutions live on different lattices");
    }
    const TimePartition& part = first.partition;
    const auto law = propagate_law(first.grid, part, transition, noise_dim, start_node, opts);
    StabilityReport r;
    r.beta = 16.0 * (1.0 + lipschitz * lipschitz);
    const double t0 = part.start();
    const std::size_t n = part.steps();

    double lhs_int = 0.0, rhs_int = 0.0, lhs_int_p = 0.0, rhs_int_p = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double ey = 0.0, ephi = 0.0;
        for (std::size_t node = 0; node < first.grid.size(); ++node) {
            const double p = law[i][node];
            if (p == 0.0) continue;
            const double dy = first.y(i, node) - second.y(i, node);
            const double dz = (first.z(i, node) - second.z(i, node)).norm();
            const double dphi = phi_diff(i, node);
            ey += p * (dy * dy + dz * dz);
            ephi += p * dphi * dphi;
        }
        const double s = part.knot(i), dt = part.dt(i);
        const double w = std::exp(r.beta * (s - t0)), w_p = std::exp(r.beta * (t0 - s));
        lhs_int += dt * w * ey;
        rhs_int += dt * w * ephi;
        lhs_int_p += dt * w_p * ey;
        rhs_int_p += dt * w_p * ephi;
    }
    double exi = 0.0;
    for (std::size_t node = 0; node < first.grid.size(); ++node) {
        const double dxi = first.y(n, node) - second.y(n, node);
        exi += law[n][node] * dxi * dxi;
    }
    const double dy0 = first.y(0, start_node) - second.y(0, start_node);
    r.lhs = dy0 * dy0 + 0.5 * lhs_int;
    r.rhs = std::exp(r.beta * (part.end() - t0)) * exi + rhs_int;
    r.violation = std::max(0.0, r.lhs - r.rhs);
    r.lhs_printed = dy0 * dy0 + 0.5 * lhs_int_p;
    r.rhs_printed = std::exp(r.beta * (part.end() - t0)) * exi + rhs_int_p;
    return r;
}

AprioriReport apriori_check(const BackwardSolution& solution, const GameSpec& spec) {
    AprioriReport r;
    const StateGrid& g = solution.grid;
    r.crude_bound = spec.bound * (1.0 + spec.horizon) + spec.bound;
    for (std::size_t i = 0; i < solution.partition.size(); ++i) {
        for (std::size_t node = 0; node < g.size(); ++node) {
            const double y = solution.y(i, node);
            const Vec x = g.point(node);
            r.sup_abs = std::max(r.sup_abs, std::abs(y));
            r.growth_constant = std::max(r.growth_constant, std::abs(y) / (1.0 + x.norm()));
            // Forward neighbour along each axis.
            std::size_t stride = 1;
            for (std::size_t a = g.dim(); a-- > 0;) {
                const std::size_t idx = (node / stride) % g.nodes(a);
                if (idx + 1 < g.nodes(a)) {
                    const double dy = std::abs(solution.y(i, node + stride) - y);
                    r.lipschitz_x = std::max(r.lipschitz_x, dy / g.spacing(a));
                }
                stride *= g.nodes(a);
            }
        }
    }
    r.within = r.sup_abs <= r.crude_bound * (1.0 + 1e-12);
    return r;
}

}  // namespace bsdegame
