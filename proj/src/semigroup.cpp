#include "bsdegame/semigroup.hpp"

#include <cmath>

#include "bsdegame/parallel.hpp"

namespace bsdegame {

namespace {

void check_inputs(const GameSpec& spec, const FeedbackTable& feedback, std::size_t s1, std::size_t s2,
                  const TerminalField& eta, const TimePartition& partition, const StateGrid& grid) {
    if (s1 > s2) throw UsageError("semigroup: s1 must not exceed s2");
    if (s2 >= partition.size()) throw UsageError("semigroup: knot index out of range");
    if (!(eta.grid == grid) || eta.values.size() != grid.size()) {
        throw UsageError("semigroup: terminal field grid does not match the operator grid");
    }
    if (feedback.steps() != partition.steps() || !(feedback.grid() == grid)) {
        throw UsageError("semigroup: feedback table does not match partition/grid");
    }
    feedback.check_indices(spec.U.size(), spec.V.size());
}

}  // namespace

TerminalField TerminalField::from_function(const StateGrid& grid, const TerminalFn& h, std::string label) {
    TerminalField f{grid, std::vector<double>(grid.size()), std::move(label)};
    for (std::size_t node = 0; node < grid.size(); ++node) f.values[node] = h(grid.point(node));
    return f;
}

TerminalField apply(const GameSpec& spec, Player j, const FeedbackTable& feedback, std::size_t s1, std::size_t s2,
                    const TerminalField& eta, const TimePartition& partition, const StateGrid& grid,
                    const SchemeOptions& opts) {
    check_inputs(spec, feedback, s1, s2, eta, partition, grid);
    std::vector<double> current = eta.values, next(grid.size());
    const GaussHermite gh(opts.quadrature_order, spec.noise_dim);
    for (std::size_t i = s2; i-- > s1;) {
        std::swap(current, next);
        const double t = partition.knot(i), dt = partition.dt(i);
        parallel_for(grid.size(), [&](std::size_t node) {
            const Vec x = grid.point(node);
            const IndexPair pair = feedback.at(i, node);
            const Dynamics dyn = eval_dynamics(spec, t, x, pair.u, pair.v);
            current[node] = backward_step(
                                grid, next, gh, x, dyn, dt,
                                [&](double y, const Vec& z) { return eval_driver(spec, j, t, x, y, z, pair.u, pair.v); },
                                opts)
                                .y;
        });
    }
    return TerminalField{grid, std::move(current), "G[" + eta.label + "]"};
}

double flow_check(const GameSpec& spec, Player j, const FeedbackTable& feedback, std::size_t s1, std::size_t s2,
                  std::size_t s3, const TerminalField& eta, const TimePartition& partition, const StateGrid& grid,
                  const SchemeOptions& opts) {
    if (s1 > s2 || s2 > s3) throw UsageError("flow_check: need s1 <= s2 <= s3");
    const TerminalField direct = apply(spec, j, feedback, s1, s3, eta, partition, grid, opts);
    const TerminalField inner = apply(spec, j, feedback, s2, s3, eta, partition, grid, opts);
    const TerminalField composed = apply(spec, j, feedback, s1, s2, inner, partition, grid, opts);
    double worst = 0.0;
    for (std::size_t node = 0; node < grid.size(); ++node) {
        worst = std::max(worst, std::abs(direct.values[node] - composed.values[node]));
    }
    return worst;
}

TerminalField linear_reduction(const GameSpec& spec, Player j, const FeedbackTable& feedback, std::size_t s1,
                               std::size_t s2, const TerminalField& eta, const TimePartition& partition,
                               const StateGrid& grid, const SchemeOptions& opts) {
    check_inputs(spec, feedback, s1, s2, eta, partition, grid);
    TerminalField out{grid, std::vector<double>(grid.size(), 0.0), "linear[" + eta.label + "]"};
    if (s1 == s2) {
        out.values = eta.values;
        return out;
    }
    const TimePartition sub = partition.slice(s1, s2);
    const Transition kernel = [&](std::size_t step, double t, const Vec& x) {
        const IndexPair pair = feedback.lookup(s1 + step, x);
        return eval_dynamics(spec, t, x, pair.u, pair.v);
    };
    const Vec zero_z(spec.noise_dim);
    parallel_for(grid.size(), [&](std::size_t start) {
        const auto law = propagate_law(grid, sub, kernel, spec.noise_dim, start, opts);
        double total = 0.0;
        for (std::size_t node = 0; node < grid.size(); ++node) total += law.back()[node] * eta.values[node];
        for (std::size_t i = 0; i < sub.steps(); ++i) {
            double running = 0.0;
            for (std::size_t node = 0; node < grid.size(); ++node) {
                const double p = law[i][node];
                if (p == 0.0) continue;
                const IndexPair pair = feedback.at(s1 + i, node);
                running += p * eval_driver(spec, j, sub.knot(i), grid.point(node), 0.0, zero_z, pair.u, pair.v);
            }
            total += sub.dt(i) * running;
        }
        out.values[start] = total;
    }, 4);
    return out;
}

}  // namespace bsdegame
