#include "bsdegame/sde_sim.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "bsdegame/parallel.hpp"

namespace bsdegame {

ControlRule constant_rule(IndexPair pair) {
    return [pair](const RuleContext&) { return pair; };
}

ControlRule feedback_rule(FeedbackTable table) {
    return [table = std::move(table)](const RuleContext& ctx) {
        return table.lookup(ctx.step, ctx.states[ctx.step]);
    };
}

std::uint64_t path_seed(std::uint64_t seed, std::size_t path) {
    // splitmix64 finalizer over (seed, path)
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (static_cast<std::uint64_t>(path) + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

std::vector<Vec> brownian_increments(const TimePartition& partition, std::size_t noise_dim,
                                     std::uint64_t seed, std::size_t path) {
    std::mt19937_64 rng(path_seed(seed, path));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<Vec> out;
    out.reserve(partition.steps());
    for (std::size_t i = 0; i < partition.steps(); ++i) {
        const double scale = std::sqrt(partition.dt(i));
        Vec db(noise_dim);
        for (std::size_t k = 0; k < noise_dim; ++k) db[k] = scale * normal(rng);
        out.push_back(db);
    }
    return out;
}

PathBundle simulate(const GameSpec& spec, const StartPoint& start, const TimePartition& partition,
                    const ControlRule& rule, std::size_t path_count, std::uint64_t seed) {
    if (path_count == 0) throw UsageError("simulate: path count must be >= 1");
    if (start.x.size() != spec.state_dim) throw UsageError("simulate: start state has wrong dimension");
    if (start.t != partition.start()) throw UsageError("simulate: start time must equal the first knot");
    if (!rule) throw UsageError("simulate: control rule is empty");

    const std::size_t steps = partition.steps();
    PathBundle bundle;
    bundle.partition = partition;
    bundle.start = start;
    bundle.seed = seed;
    bundle.path_count = path_count;
    bundle.state_dim = spec.state_dim;
    bundle.noise_dim = spec.noise_dim;
    bundle.states.assign(path_count * (steps + 1), Vec(spec.state_dim));
    bundle.noise.assign(path_count * steps, Vec(spec.noise_dim));
    bundle.controls.assign(path_count * steps, IndexPair{});
    std::vector<unsigned char> exited(path_count, 0);

    parallel_for(path_count, [&](std::size_t m) {
        const auto dB = brownian_increments(partition, spec.noise_dim, seed, m);
        Vec* states = bundle.states.data() + m * (steps + 1);
        IndexPair* controls = bundle.controls.data() + m * steps;
        states[0] = start.x;
        for (std::size_t i = 0; i < steps; ++i) {
            const double t = partition.knot(i);
            RuleContext ctx{m, i, t, {states, i + 1}, {controls, i}};
            const IndexPair pair = rule(ctx);
            const Dynamics dyn = eval_dynamics(spec, t, states[i], pair.u, pair.v);
            Vec next = states[i] + dyn.drift * partition.dt(i) + dyn.diffusion.apply(dB[i]);
            if (!next.all_finite()) {
                std::ostringstream os;
                os << "simulate: non-finite state on path " << m << " at step " << i + 1;
                throw NumericalError(os.str());
            }
            if (!exited[m] && !spec.state_box.contains(next)) exited[m] = 1;
            controls[i] = pair;
            states[i + 1] = next;
            bundle.noise[m * steps + i] = dB[i];
        }
    }, 16);

    for (auto e : exited) bundle.box_exits += e;
    return bundle;
}

double linear_growth_constant(const GameSpec& spec) {
    double at_origin = 0.0;
    const Vec zero(spec.state_dim);
    for (double t : {0.0, 0.5 * spec.horizon, spec.horizon}) {
        for (std::size_t ui = 0; ui < spec.U.size(); ++ui) {
            for (std::size_t vi = 0; vi < spec.V.size(); ++vi) {
                const Dynamics dyn = eval_dynamics(spec, t, zero, ui, vi);
                at_origin = std::max(at_origin, dyn.drift.norm() + dyn.diffusion.norm());
            }
        }
    }
    return spec.lipschitz + at_origin;
}

double gronwall_moment_constant(const GameSpec& spec, int p) {
    if (p < 2) throw UsageError("moment order must be >= 2");
    const double K = linear_growth_constant(spec);
    const double T = spec.horizon;
    const double pd = static_cast<double>(p);
    // Doob maximal inequality times the Burkholder constant for the stochastic integral.
    const double c_p = std::pow(pd / (pd - 1.0), pd) * std::pow(pd * (pd - 1.0) / 2.0, pd / 2.0);
    const double A = std::pow(3.0, pd - 1.0) * std::pow(2.0, pd - 1.0) * std::pow(K, pd) *
                     (std::pow(T, pd - 1.0) + c_p * std::pow(T, pd / 2.0 - 1.0));
    return std::pow(3.0, pd - 1.0) * std::exp(A * T);
}

MomentReport moment_check(const GameSpec& spec, const PathBundle& bundle, int p) {
    if (p != 2 && p != 4) throw UsageError("moment_check: p must be 2 or 4");
    MomentReport r;
    r.p = p;
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t m = 0; m < bundle.path_count; ++m) {
        double sup = 0.0;
        for (const Vec& x : bundle.path_states(m)) sup = std::max(sup, std::pow(x.norm(), p));
        sum += sup;
        sum_sq += sup * sup;
    }
    const double M = static_cast<double>(bundle.path_count);
    r.empirical = sum / M;
    r.std_error = bundle.path_count > 1
                      ? std::sqrt(std::max(0.0, (sum_sq / M - r.empirical * r.empirical) / (M - 1.0)))
                      : 0.0;
    r.constant = gronwall_moment_constant(spec, p);
    r.bound = r.constant * (1.0 + std::pow(bundle.start.x.norm(), p));
    r.within = r.empirical <= r.bound;
    return r;
}

PairMomentReport pair_moment_check(const GameSpec& spec, const StartPoint& a, const Vec& x_other,
                                   const TimePartition& partition, const ControlRule& rule,
                                   std::size_t path_count, std::uint64_t seed) {
    const PathBundle first = simulate(spec, a, partition, rule, path_count, seed);
    const PathBundle second = simulate(spec, StartPoint{a.t, x_other}, partition, rule, path_count, seed);
    PairMomentReport r;
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t m = 0; m < path_count; ++m) {
        double sup = 0.0;
        for (std::size_t i = 0; i <= partition.steps(); ++i) {
            const double d = (first.state(m, i) - second.state(m, i)).norm();
            sup = std::max(sup, d * d);
        }
        sum += sup;
        sum_sq += sup * sup;
    }
    const double M = static_cast<double>(path_count);
    r.empirical = sum / M;
    r.std_error = path_count > 1 ? std::sqrt(std::max(0.0, (sum_sq / M - r.empirical * r.empirical) / (M - 1.0)))
                                 : 0.0;
    const double dx = (a.x - x_other).norm();
    r.start_distance_sq = dx * dx;
    r.ratio = dx > 0.0 ? r.empirical / r.start_distance_sq : 0.0;
    return r;
}

}  // namespace bsdegame
