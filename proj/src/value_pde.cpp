#include "bsdegame/value_pde.hpp"

#include <cmath>
#include <limits>

#include "bsdegame/parallel.hpp"

namespace bsdegame {

namespace {

// Max-min and min-max of g(a, b) where a maximizes and b minimizes; ties go
// to the smallest index.
struct MatrixGame {
    double maxmin = 0.0;
    std::size_t maxmin_a = 0, maxmin_b = 0;
    double minmax = 0.0;
    std::size_t minmax_b = 0, minmax_a = 0;
};

template <typename G>
MatrixGame solve_matrix(std::size_t na, std::size_t nb, G&& g) {
    MatrixGame r;
    r.maxmin = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < na; ++a) {
        std::size_t best_b = 0;
        for (std::size_t b = 1; b < nb; ++b) {
            if (g(a, b) < g(a, best_b)) best_b = b;
        }
        if (g(a, best_b) > r.maxmin) {
            r.maxmin = g(a, best_b);
            r.maxmin_a = a;
            r.maxmin_b = best_b;
        }
    }
    r.minmax = std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < nb; ++b) {
        std::size_t best_a = 0;
        for (std::size_t a = 1; a < na; ++a) {
            if (g(a, b) > g(best_a, b)) best_a = a;
        }
        if (g(best_a, b) < r.minmax) {
            r.minmax = g(best_a, b);
            r.minmax_b = b;
            r.minmax_a = best_a;
        }
    }
    return r;
}

}  // namespace

std::vector<double> one_step_table(const GameSpec& spec, Player j, const TimePartition& partition, std::size_t i,
                                   const StateGrid& grid, std::size_t node, std::span<const double> next,
                                   const GaussHermite& gh, const SchemeOptions& opts) {
    const std::size_t nu = spec.U.size(), nv = spec.V.size();
    const double t = partition.knot(i), dt = partition.dt(i);
    const Vec x = grid.point(node);
    std::vector<double> out(nu * nv);
    for (std::size_t u = 0; u < nu; ++u) {
        for (std::size_t v = 0; v < nv; ++v) {
            const Dynamics dyn = eval_dynamics(spec, t, x, u, v);
            out[u * nv + v] =
                backward_step(grid, next, gh, x, dyn, dt,
                              [&](double y, const Vec& z) { return eval_driver(spec, j, t, x, y, z, u, v); }, opts)
                    .y;
        }
    }
    return out;
}

ValueField compute_values(const GameSpec& spec, const TimePartition& partition, const StateGrid& grid,
                          const ValueOptions& opts) {
    spec.check_shape();
    if (grid.dim() != spec.state_dim) throw UsageError("compute_values: grid dimension differs from the state dimension");
    if (spec.lipschitz * partition.mesh() >= 1.0) {
        throw UsageError("compute_values: L * mesh = " + std::to_string(spec.lipschitz * partition.mesh()) +
                         " >= 1; the implicit step may not contract, refine the partition");
    }
    const std::size_t n = partition.steps(), nodes = grid.size();
    const std::size_t nu = spec.U.size(), nv = spec.V.size();

    ValueField f;
    f.partition = partition;
    f.grid = grid;
    f.boundary = opts.scheme.boundary;
    for (std::size_t p = 0; p < 2; ++p) {
        f.W[p].assign(partition.size() * nodes, 0.0);
        f.W_upper[p].assign(partition.size() * nodes, 0.0);
        f.saddle[p] = FeedbackTable(n, grid);
        f.node_gap[p].assign(n * nodes, 0.0);
        f.slack[p].assign(partition.size(), 0.0);
    }
    f.punish_1.assign(n * nodes, 0);
    f.punish_2.assign(n * nodes, 0);

    for (std::size_t p = 0; p < 2; ++p) {
        const Player j = p == 0 ? Player::First : Player::Second;
        for (std::size_t node = 0; node < nodes; ++node) {
            const double phi = opts.terminal ? opts.terminal->at(p).at(node) : eval_terminal(spec, j, grid.point(node));
            f.W[p][n * nodes + node] = phi;
            f.W_upper[p][n * nodes + node] = phi;
        }
    }

    const GaussHermite gh(opts.scheme.quadrature_order, spec.noise_dim);
    for (std::size_t i = n; i-- > 0;) {
        std::array<std::span<const double>, 2> next, next_upper;
        for (std::size_t p = 0; p < 2; ++p) {
            next[p] = {f.W[p].data() + (i + 1) * nodes, nodes};
            next_upper[p] = {f.W_upper[p].data() + (i + 1) * nodes, nodes};
        }
        parallel_for(nodes, [&](std::size_t node) {
            const std::size_t at = i * nodes + node;
            // Player 1: u (rows) maximizes.
            const auto G1 = one_step_table(spec, Player::First, partition, i, grid, node, next[0], gh, opts.scheme);
            const MatrixGame m1 = solve_matrix(nu, nv, [&](std::size_t a, std::size_t b) { return G1[a * nv + b]; });
            f.W[0][at] = m1.maxmin;
            f.saddle[0].at(i, node) = IndexPair{m1.maxmin_a, m1.maxmin_b};
            f.punish_2[at] = m1.minmax_b;
            f.node_gap[0][at] = m1.minmax - m1.maxmin;

            // Player 2: v (columns) maximizes.
            const auto G2 = one_step_table(spec, Player::Second, partition, i, grid, node, next[1], gh, opts.scheme);
            const MatrixGame m2 = solve_matrix(nv, nu, [&](std::size_t a, std::size_t b) { return G2[b * nv + a]; });
            f.W[1][at] = m2.maxmin;
            f.saddle[1].at(i, node) = IndexPair{m2.maxmin_b, m2.maxmin_a};
            f.punish_1[at] = m2.minmax_b;
            f.node_gap[1][at] = m2.minmax - m2.maxmin;

            // Min-max recursions on their own continuation.
            const bool same1 = std::equal(next[0].begin(), next[0].end(), next_upper[0].begin());
            const bool same2 = std::equal(next[1].begin(), next[1].end(), next_upper[1].begin());
            f.W_upper[0][at] =
                same1 ? m1.minmax
                      : solve_matrix(nu, nv, [G = one_step_table(spec, Player::First, partition, i, grid, node,
                                                                 next_upper[0], gh, opts.scheme),
                                              nv](std::size_t a, std::size_t b) { return G[a * nv + b]; })
                            .minmax;
            f.W_upper[1][at] =
                same2 ? m2.minmax
                      : solve_matrix(nv, nu, [G = one_step_table(spec, Player::Second, partition, i, grid, node,
                                                                 next_upper[1], gh, opts.scheme),
                                              nv](std::size_t a, std::size_t b) { return G[b * nv + a]; })
                            .minmax;
        }, 16);

        for (std::size_t p = 0; p < 2; ++p) {
            double worst = 0.0;
            for (std::size_t node = 0; node < nodes; ++node) worst = std::max(worst, f.node_gap[p][i * nodes + node]);
            f.slack[p][i] = worst + f.slack[p][i + 1] / (1.0 - spec.lipschitz * partition.dt(i));
        }
    }

    for (std::size_t p = 0; p < 2; ++p) {
        double worst = 0.0;
        for (std::size_t k = 0; k < f.W[p].size(); ++k) worst = std::max(worst, std::abs(f.W_upper[p][k] - f.W[p][k]));
        f.recursion_gap[p] = worst;
    }
    if (opts.run_audit) f.audit = audit_isaacs(spec, default_query_sampler(), opts.audit_samples, opts.audit_seed);
    return f;
}

RegularityReport regularity_check(const ValueField& field, const GameSpec& spec) {
    RegularityReport r;
    const StateGrid& g = field.grid;
    const TimePartition& part = field.partition;
    const std::size_t nodes = g.size();
    for (std::size_t p = 0; p < 2; ++p) {
        const auto& W = field.W[p];
        double lip = 0.0, hol = 0.0;
        for (std::size_t node = 0; node < nodes; ++node) {
            const double weight = 1.0 + g.point(node).norm();
            for (std::size_t i = 0; i < part.size(); ++i) {
                const double w = W[i * nodes + node];
                std::size_t stride = 1;
                for (std::size_t a = g.dim(); a-- > 0;) {
                    if ((node / stride) % g.nodes(a) + 1 < g.nodes(a)) {
                        lip = std::max(lip, std::abs(W[i * nodes + node + stride] - w) / g.spacing(a));
                    }
                    stride *= g.nodes(a);
                }
                for (std::size_t k = i + 1; k < part.size(); ++k) {
                    const double dt = part.knot(k) - part.knot(i);
                    hol = std::max(hol, std::abs(W[k * nodes + node] - w) / (weight * std::sqrt(dt)));
                }
            }
        }
        r.lipschitz_x[p] = lip;
        r.holder_t[p] = hol;
    }
    const double L = spec.lipschitz, M = spec.bound, T = spec.horizon;
    r.reference = 2.0 * (L + M) * (1.0 + T) * std::exp(L * T);
    r.within_reference = std::max({r.lipschitz_x[0], r.lipschitz_x[1], r.holder_t[0], r.holder_t[1]}) <= r.reference;
    return r;
}

}  // namespace bsdegame
