#include "bsdegame/nash_engine.hpp"

#include <cmath>
#include <sstream>

#include "bsdegame/parallel.hpp"

namespace bsdegame {

namespace {

void check_lattice(const ValueField& values, const FeedbackTable& table) {
    if (table.steps() != values.partition.steps() || !(table.grid() == values.grid)) {
        throw UsageError("controls and value field use different partitions or grids");
    }
}

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

// Fixed summation order by path index.
MeanSe mean_se(const std::vector<double>& xs) {
    MeanSe r;
    const double n = static_cast<double>(xs.size());
    if (xs.empty()) return r;
    double sum = 0.0;
    for (double x : xs) sum += x;
    r.mean = sum / n;
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - r.mean) * (x - r.mean);
        r.se = std::sqrt(ss / (n - 1.0) / n);
    }
    return r;
}

Player player_of(std::size_t p) { return p == 0 ? Player::First : Player::Second; }

// Phi_j(X_T) + sum_i f_j(t_i, X_i, Y_i, Z_i, u_i, v_i) dt_i along one path.
double path_payoff(const GameSpec& spec, Player j, const TimePartition& part, std::span<const Vec> states,
                   std::span<const IndexPair> controls, const std::function<double(std::size_t)>& y_at,
                   const std::function<Vec(std::size_t)>& z_at) {
    double total = eval_terminal(spec, j, states.back());
    for (std::size_t i = 0; i < part.steps(); ++i) {
        total += part.dt(i) *
                 eval_driver(spec, j, part.knot(i), states[i], y_at(i), z_at(i), controls[i].u, controls[i].v);
    }
    return total;
}

}  // namespace

std::array<std::vector<double>, 2> table_slack(const GameSpec& spec, const ValueField& values,
                                               const FeedbackTable& controls, const SchemeOptions& opts) {
    check_lattice(values, controls);
    const std::size_t n = values.partition.steps(), nodes = values.grid.size();
    const GaussHermite gh(opts.quadrature_order, spec.noise_dim);
    std::array<std::vector<double>, 2> slack;
    for (std::size_t p = 0; p < 2; ++p) slack[p].assign(n * nodes, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = values.partition.knot(i), dt = values.partition.dt(i);
        parallel_for(nodes, [&](std::size_t node) {
            const Vec x = values.grid.point(node);
            const IndexPair pair = controls.at(i, node);
            const Dynamics dyn = eval_dynamics(spec, t, x, pair.u, pair.v);
            for (std::size_t p = 0; p < 2; ++p) {
                const Player j = player_of(p);
                const double g = backward_step(values.grid, values.slice(j, i + 1), gh, x, dyn, dt,
                                               [&](double y, const Vec& z) {
                                                   return eval_driver(spec, j, t, x, y, z, pair.u, pair.v);
                                               },
                                               opts)
                                     .y;
                slack[p][i * nodes + node] = g - values.w(j, i, node);
            }
        }, 16);
    }
    return slack;
}

Construction construct_equilibrium(const GameSpec& spec, const ValueField& values, double epsilon,
                                   const SchemeOptions& opts) {
    if (!(epsilon > 0.0)) throw UsageError("construct_equilibrium: epsilon must be positive");
    if (values.audit && values.audit->flagged) {
        std::ostringstream os;
        os << "construct_equilibrium: the Isaacs audit failed (max gap " << values.audit->max_gap
           << "); the construction needs the Isaacs condition";
        throw UsageError(os.str());
    }
    const std::size_t n = values.partition.steps(), nodes = values.grid.size();
    const std::size_t nu = spec.U.size(), nv = spec.V.size();
    const GaussHermite gh(opts.quadrature_order, spec.noise_dim);

    Construction out;
    out.controls = FeedbackTable(n, values.grid);
    auto& diag = out.diagnostics;
    diag.epsilon = epsilon;
    diag.min_slack = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    for (std::size_t p = 0; p < 2; ++p) diag.slack[p].assign(n * nodes, 0.0);
    std::vector<unsigned char> from_saddle(n * nodes, 0);
    std::vector<unsigned char> failed(n * nodes, 0);

    for (std::size_t i = 0; i < n; ++i) {
        parallel_for(nodes, [&](std::size_t node) {
            const std::size_t at = i * nodes + node;
            const auto G1 = one_step_table(spec, Player::First, values.partition, i, values.grid, node,
                                           values.slice(Player::First, i + 1), gh, opts);
            const auto G2 = one_step_table(spec, Player::Second, values.partition, i, values.grid, node,
                                           values.slice(Player::Second, i + 1), gh, opts);
            const double w1 = values.w(Player::First, i, node), w2 = values.w(Player::Second, i, node);
            const auto qualifies = [&](std::size_t u, std::size_t v) {
                return G1[u * nv + v] - w1 >= -epsilon && G2[u * nv + v] - w2 >= -epsilon;
            };
            IndexPair chosen{values.saddle[0].at(i, node).u, values.saddle[1].at(i, node).v};
            bool found = qualifies(chosen.u, chosen.v);
            if (found) {
                from_saddle[at] = 1;
            } else {
                for (std::size_t u = 0; u < nu && !found; ++u) {
                    for (std::size_t v = 0; v < nv && !found; ++v) {
                        if (qualifies(u, v)) {
                            chosen = IndexPair{u, v};
                            found = true;
                        }
                    }
                }
            }
            if (!found) {
                failed[at] = 1;
                return;
            }
            out.controls.at(i, node) = chosen;
            diag.slack[0][at] = G1[chosen.u * nv + chosen.v] - w1;
            diag.slack[1][at] = G2[chosen.u * nv + chosen.v] - w2;
        }, 16);
    }

    for (std::size_t at = 0; at < n * nodes; ++at) {
        if (failed[at]) {
            const std::size_t i = at / nodes, node = at % nodes;
            const auto G1 = one_step_table(spec, Player::First, values.partition, i, values.grid, node,
                                           values.slice(Player::First, i + 1), gh, opts);
            const auto G2 = one_step_table(spec, Player::Second, values.partition, i, values.grid, node,
                                           values.slice(Player::Second, i + 1), gh, opts);
            double best = -std::numeric_limits<double>::infinity();
            std::array<double, 2> best_pair{};
            for (std::size_t k = 0; k < G1.size(); ++k) {
                const double s1 = G1[k] - values.w(Player::First, i, node);
                const double s2 = G2[k] - values.w(Player::Second, i, node);
                if (std::min(s1, s2) > best) {
                    best = std::min(s1, s2);
                    best_pair = {s1, s2};
                }
            }
            std::ostringstream os;
            os << "construct_equilibrium: no pair satisfies both inequalities at step " << i << ", node " << node
               << " (x = " << values.grid.point(node)[0] << "); best slacks " << best_pair[0] << ", " << best_pair[1]
               << " against -eps = " << -epsilon << "; refine the partition or grid";
            throw ConstructionError(i, node, best_pair[0], best_pair[1], os.str());
        }
        if (from_saddle[at]) {
            ++diag.saddle_selected;
        } else {
            ++diag.scan_selected;
        }
        for (std::size_t p = 0; p < 2; ++p) diag.min_slack[p] = std::min(diag.min_slack[p], diag.slack[p][at]);
    }
    return out;
}

EquilibriumCertificate verify_certificate(const GameSpec& spec, const FeedbackTable& controls,
                                          const ValueField& values, double epsilon, const StartPoint& start,
                                          std::size_t path_count, std::uint64_t seed, const SchemeOptions& opts) {
    check_lattice(values, controls);
    if (!(epsilon > 0.0) || epsilon >= 1.0) throw UsageError("verify_certificate: epsilon must lie in (0, 1)");
    if (start.t != values.partition.start()) throw UsageError("verify_certificate: start time must be the first knot");
    const TimePartition& part = values.partition;
    EquilibriumCertificate cert;
    cert.start = start;
    cert.epsilon = epsilon;
    cert.path_count = path_count;
    cert.seed = seed;

    const PathBundle bundle = simulate(spec, start, part, feedback_rule(controls), path_count, seed);
    cert.box_exits = bundle.box_exits;
    const double M = static_cast<double>(path_count);
    cert.probability_std_error = std::sqrt(epsilon * (1.0 - epsilon) / M);
    cert.probability_threshold = 1.0 - epsilon - 3.0 * cert.probability_std_error;
    cert.passed = true;

    for (std::size_t p = 0; p < 2; ++p) {
        const Player j = player_of(p);
        const BackwardSolution sol = solve_markov(spec, j, controls, part, values.grid, opts);
        const PathValues pv = path_values(sol, bundle);
        cert.payoff[p] = sol.value_at(0, start.x);

        cert.probability[p].assign(part.size(), 0.0);
        for (std::size_t i = 0; i < part.size(); ++i) {
            std::size_t hits = 0;
            for (std::size_t m = 0; m < path_count; ++m) {
                const Vec& x = bundle.state(m, i);
                const double w = i == part.steps() ? eval_terminal(spec, j, x) : values.value_at(j, i, x);
                if (pv.y(m, i) >= w - epsilon) ++hits;
            }
            cert.probability[p][i] = static_cast<double>(hits) / M;
        }
        cert.min_probability[p] = *std::min_element(cert.probability[p].begin(), cert.probability[p].end());

        std::vector<double> payoffs(path_count);
        parallel_for(path_count, [&](std::size_t m) {
            payoffs[m] = path_payoff(
                spec, j, part, bundle.path_states(m), bundle.path_controls(m),
                [&](std::size_t i) { return pv.y(m, i); }, [&](std::size_t i) { return pv.z(m, i); });
        }, 64);
        const MeanSe ms = mean_se(payoffs);
        cert.mc_mean[p] = ms.mean;
        cert.mc_std_error[p] = ms.se;
        cert.consistent[p] = std::abs(ms.mean - cert.payoff[p]) <= 3.0 * ms.se;
        cert.passed = cert.passed && cert.consistent[p] && cert.min_probability[p] >= cert.probability_threshold;
    }
    return cert;
}

ModalSolution solve_modal(const GameSpec& spec, const Deviation& d, const FeedbackTable& nominal,
                          const ValueField& values, const SchemeOptions& opts) {
    check_lattice(values, nominal);
    const TimePartition& part = values.partition;
    const StateGrid& grid = values.grid;
    const std::size_t n = part.steps(), nodes = grid.size();
    const Player dev = d.deviator, punisher = other(d.deviator);
    const GaussHermite gh(opts.quadrature_order, spec.noise_dim);

    ModalSolution s;
    s.nominal_mode.assign(part.size() * nodes, 0.0);
    s.punished_mode.assign(part.size() * nodes, 0.0);
    s.nominal_z.assign(part.size() * nodes, Vec(spec.noise_dim));
    s.punished_z.assign(part.size() * nodes, Vec(spec.noise_dim));
    for (std::size_t node = 0; node < nodes; ++node) {
        s.nominal_mode[n * nodes + node] = s.punished_mode[n * nodes + node] = eval_terminal(spec, dev, grid.point(node));
    }
    const auto pair_of = [&](std::size_t dev_control, std::size_t other_control) {
        return dev == Player::First ? IndexPair{dev_control, other_control} : IndexPair{other_control, dev_control};
    };
    for (std::size_t i = n; i-- > 0;) {
        const double t = part.knot(i), dt = part.dt(i);
        const std::span<const double> next_nominal{s.nominal_mode.data() + (i + 1) * nodes, nodes};
        const std::span<const double> next_punished{s.punished_mode.data() + (i + 1) * nodes, nodes};
        parallel_for(nodes, [&](std::size_t node) {
            const Vec x = grid.point(node);
            const IndexPair nom = nominal.at(i, node);
            const std::size_t dev_control = d.forced.at(i) ? *d.forced[i] : (dev == Player::First ? nom.u : nom.v);
            const std::size_t nominal_dev = dev == Player::First ? nom.u : nom.v;
            const std::size_t nominal_other = dev == Player::First ? nom.v : nom.u;
            const auto step_with = [&](IndexPair pair, std::span<const double> next) {
                const Dynamics dyn = eval_dynamics(spec, t, x, pair.u, pair.v);
                return backward_step(grid, next, gh, x, dyn, dt,
                                     [&](double y, const Vec& z) {
                                         return eval_driver(spec, dev, t, x, y, z, pair.u, pair.v);
                                     },
                                     opts);
            };
            const StepResult pun = step_with(pair_of(dev_control, values.punish(punisher, i, node)), next_punished);
            s.punished_mode[i * nodes + node] = pun.y;
            s.punished_z[i * nodes + node] = pun.z;
            const bool detected = dev_control != nominal_dev;
            const StepResult nomr = step_with(pair_of(dev_control, nominal_other), detected ? next_punished : next_nominal);
            s.nominal_mode[i * nodes + node] = nomr.y;
            s.nominal_z[i * nodes + node] = nomr.z;
        }, 16);
    }
    return s;
}

std::vector<Deviation> standard_deviation_set(const GameSpec& spec, const FeedbackTable& nominal,
                                              const TimePartition& partition, std::size_t coarse_cells) {
    std::vector<Deviation> out;
    for (Player j : {Player::First, Player::Second}) {
        const std::size_t count = j == Player::First ? spec.U.size() : spec.V.size();
        auto singles = single_cell_deviations(j, partition, coarse_cells, count);
        auto constants = constant_deviations(j, partition, count);
        for (auto* group : {&singles, &constants}) {
            for (auto& d : *group) {
                try {
                    check_deviation(d, nominal, count);
                    out.push_back(std::move(d));
                } catch (const UsageError&) {
                    // Identical to the nominal controls everywhere; nothing to test.
                }
            }
        }
    }
    return out;
}

DeviationReport deviation_test(const GameSpec& spec, const FeedbackTable& nominal, const ValueField& values,
                               const std::vector<Deviation>& deviations, double epsilon, const StartPoint& start,
                               std::size_t path_count, std::uint64_t seed, const SchemeOptions& opts) {
    check_lattice(values, nominal);
    if (start.t != values.partition.start()) throw UsageError("deviation_test: start time must be the first knot");
    for (const auto& d : deviations) {
        check_deviation(d, nominal, d.deviator == Player::First ? spec.U.size() : spec.V.size());
    }
    const TimePartition& part = values.partition;
    const std::size_t n = part.steps(), knots = part.size();
    DeviationReport rep;
    rep.epsilon = epsilon;
    rep.path_count = path_count;
    rep.seed = seed;

    // Nominal payoffs along paths, shared by every deviation through common noise.
    const PathBundle bundle = simulate(spec, start, part, feedback_rule(nominal), path_count, seed);
    std::array<std::vector<double>, 2> nominal_payoff;
    for (std::size_t p = 0; p < 2; ++p) {
        const Player j = player_of(p);
        const BackwardSolution sol = solve_markov(spec, j, nominal, part, values.grid, opts);
        rep.nominal_payoff[p] = sol.value_at(0, start.x);
        const PathValues pv = path_values(sol, bundle);
        nominal_payoff[p].assign(path_count, 0.0);
        parallel_for(path_count, [&](std::size_t m) {
            nominal_payoff[p][m] = path_payoff(
                spec, j, part, bundle.path_states(m), bundle.path_controls(m),
                [&](std::size_t i) { return pv.y(m, i); }, [&](std::size_t i) { return pv.z(m, i); });
        }, 64);
        rep.grid_slack[p] = values.grid_slack(j);
    }

    std::array<double, 2> argmax_se{};
    for (const auto& d : deviations) {
        const std::size_t p = player_index(d.deviator);
        const Player punisher = other(d.deviator);
        const ModalSolution modal = solve_modal(spec, d, nominal, values, opts);
        DeviationOutcome o;
        o.label = d.label;
        o.deviator = d.deviator;
        o.lattice_payoff = values.grid.interpolate({modal.nominal_mode.data(), values.grid.size()}, start.x, opts.boundary);
        o.lattice_gain = o.lattice_payoff - rep.nominal_payoff[p];

        const NADStrategy dev_strategy = deviation_strategy(d, nominal, part);
        const NADStrategy pun_strategy = punishment_strategy(punisher, nominal, values);
        const NADStrategy& alpha = d.deviator == Player::First ? dev_strategy : pun_strategy;
        const NADStrategy& beta = d.deviator == Player::First ? pun_strategy : dev_strategy;

        std::vector<double> diff(path_count), efficacy(path_count, -std::numeric_limits<double>::infinity());
        std::vector<unsigned char> detected(path_count, 0);
        const std::size_t nodes = values.grid.size();
        parallel_for(path_count, [&](std::size_t m) {
            const StateSource source =
                euler_state_source(spec, part, start.x, brownian_increments(part, spec.noise_dim, seed, m));
            const CouplingResult c = couple(alpha, beta, source);
            const auto& opponent = d.deviator == Player::First ? c.pair.u : c.pair.v;
            const auto k = detection_cell(punisher, nominal, opponent, c.states);
            // Mode at knot i: punished once a mismatch occurred on a cell before i.
            const auto punished_at = [&](std::size_t i) { return k && i > *k; };
            std::vector<IndexPair> pairs(n);
            for (std::size_t i = 0; i < n; ++i) pairs[i] = IndexPair{c.pair.u[i], c.pair.v[i]};
            const auto y_at = [&](std::size_t i) {
                const auto& field = punished_at(i) ? modal.punished_mode : modal.nominal_mode;
                return values.grid.interpolate({field.data() + i * nodes, nodes}, c.states[i], opts.boundary);
            };
            const auto z_at = [&](std::size_t i) {
                const auto& field = punished_at(i) ? modal.punished_z : modal.nominal_z;
                const Stencil st = values.grid.stencil(c.states[i], opts.boundary);
                Vec z(spec.noise_dim);
                for (std::size_t s = 0; s < st.count; ++s) z += field[i * nodes + st.nodes[s]] * st.weights[s];
                return z;
            };
            diff[m] = path_payoff(spec, d.deviator, part, c.states, pairs, y_at, z_at) - nominal_payoff[p][m];
            if (k) {
                detected[m] = 1;
                const std::size_t knot = *k + 1;
                if (knot < knots) {
                    const double w = knot == n ? eval_terminal(spec, d.deviator, c.states[knot])
                                               : values.value_at(d.deviator, knot, c.states[knot]);
                    efficacy[m] = y_at(knot) - w;
                }
            }
        }, 16);
        const MeanSe ms = mean_se(diff);
        o.mc_gain = ms.mean;
        o.mc_std_error = ms.se;
        std::size_t hits = 0;
        for (auto flag : detected) hits += flag;
        o.detected_fraction = static_cast<double>(hits) / static_cast<double>(path_count);
        for (double e : efficacy) o.efficacy = std::max(o.efficacy, e);
        rep.max_efficacy = std::max(rep.max_efficacy, o.efficacy);

        const std::size_t idx = rep.outcomes.size();
        if (!rep.argmax[p] || o.mc_gain > rep.max_gain[p]) {
            rep.max_gain[p] = o.mc_gain;
            rep.argmax[p] = idx;
            argmax_se[p] = o.mc_std_error;
        }
        if (!rep.lattice_argmax[p] || o.lattice_gain > rep.outcomes[*rep.lattice_argmax[p]].lattice_gain) {
            rep.lattice_argmax[p] = idx;
        }
        rep.outcomes.push_back(std::move(o));
    }

    rep.passed = true;
    for (std::size_t p = 0; p < 2; ++p) {
        rep.margin[p] = 3.0 * argmax_se[p] + 2.0 * rep.grid_slack[p];
        if (rep.argmax[p] && rep.max_gain[p] > epsilon + rep.margin[p]) rep.passed = false;
    }
    for (const auto& o : rep.outcomes) {
        if (o.efficacy > epsilon + rep.margin[player_index(o.deviator)]) rep.efficacy_ok = false;
    }
    return rep;
}

}  // namespace bsdegame
