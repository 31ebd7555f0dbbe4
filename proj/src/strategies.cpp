#include "bsdegame/strategies.hpp"

#include <cmath>
#include <sstream>

namespace bsdegame {

namespace {

std::size_t own_of(Side side, IndexPair pair) { return side == Side::I ? pair.u : pair.v; }
std::size_t opponent_of(Side side, IndexPair pair) { return side == Side::I ? pair.v : pair.u; }

}  // namespace

NADStrategy::NADStrategy(TimePartition partition, Side side, ResponseFn respond, std::string name)
    : partition_(std::move(partition)), side_(side), respond_(std::move(respond)), name_(std::move(name)) {
    if (!respond_) throw UsageError("NADStrategy: response rule is empty");
}

NADStrategy NADStrategy::constant(const TimePartition& partition, Side side, std::size_t control) {
    return NADStrategy(partition, side, [control](const StrategyInput&) { return control; },
                       "constant " + std::to_string(control));
}

std::size_t NADStrategy::respond(const StrategyInput& in) const {
    if (in.cell >= cells()) throw UsageError("NADStrategy: cell index beyond the partition");
    if (in.own.size() != in.cell || in.opponent.size() != in.cell || in.states.size() != in.cell + 1) {
        throw UsageError("NADStrategy: history lengths must match the cell index");
    }
    return respond_(in);
}

std::vector<std::size_t> NADStrategy::play(std::span<const std::size_t> opponent, std::span<const Vec> states) const {
    if (opponent.size() != cells() || states.size() != cells() + 1) {
        throw UsageError("NADStrategy::play: sequence lengths must match the partition");
    }
    std::vector<std::size_t> own(cells());
    for (std::size_t i = 0; i < cells(); ++i) {
        own[i] = respond(StrategyInput{i, {own.data(), i}, opponent.first(i), states.first(i + 1)});
    }
    return own;
}

StateSource StateSource::frozen(const Vec& x0, std::size_t) {
    return StateSource{x0, [](std::size_t, const Vec& x, IndexPair) { return x; }};
}

StateSource euler_state_source(const GameSpec& spec, const TimePartition& partition, const Vec& x0,
                               std::vector<Vec> increments) {
    if (increments.size() != partition.steps()) throw UsageError("euler_state_source: one increment per cell required");
    return StateSource{x0, [spec, partition, dB = std::move(increments)](std::size_t i, const Vec& x, IndexPair pair) {
                           const Dynamics dyn = eval_dynamics(spec, partition.knot(i), x, pair.u, pair.v);
                           return x + dyn.drift * partition.dt(i) + dyn.diffusion.apply(dB[i]);
                       }};
}

CouplingResult couple(const NADStrategy& alpha, const NADStrategy& beta, const StateSource& source,
                      CouplingOrder order) {
    if (alpha.side() != Side::I || beta.side() != Side::II) {
        throw UsageError("couple: alpha must be a player I strategy and beta a player II strategy");
    }
    if (!(alpha.partition() == beta.partition())) throw UsageError("couple: strategies use different partitions");
    if (!source.step) throw UsageError("couple: state source has no transition");
    const std::size_t n = alpha.cells();
    CouplingResult r;
    r.pair.u.assign(n, 0);
    r.pair.v.assign(n, 0);
    r.states.assign(1, source.x0);
    r.states.reserve(n + 1);
    for (std::size_t i = 0; i < n; ++i) {
        const std::span<const Vec> states{r.states.data(), i + 1};
        const auto ask_alpha = [&] {
            return alpha.respond(StrategyInput{i, {r.pair.u.data(), i}, {r.pair.v.data(), i}, states});
        };
        const auto ask_beta = [&] {
            return beta.respond(StrategyInput{i, {r.pair.v.data(), i}, {r.pair.u.data(), i}, states});
        };
        std::size_t u = 0, v = 0;
        switch (order) {
            case CouplingOrder::BetaFirst:
                v = ask_beta();
                u = ask_alpha();
                break;
            case CouplingOrder::AlphaFirst:
            case CouplingOrder::Jacobi:
                u = ask_alpha();
                v = ask_beta();
                break;
        }
        r.pair.u[i] = u;
        r.pair.v[i] = v;
        r.states.push_back(source.step(i, r.states.back(), IndexPair{u, v}));
        ++r.iterations;
    }
    r.fixed_point = alpha.play(r.pair.v, r.states) == r.pair.u && beta.play(r.pair.u, r.states) == r.pair.v;
    return r;
}

FixedPointDemo no_delay_counterexample(const std::vector<std::size_t>& phi, const std::vector<std::size_t>& psi) {
    if (phi.empty() || phi.size() != psi.size()) throw UsageError("no_delay_counterexample: phi and psi need equal, nonzero size");
    const std::size_t k = phi.size();
    for (std::size_t i = 0; i < k; ++i) {
        if (phi[i] >= k || psi[i] >= k) throw UsageError("no_delay_counterexample: maps must send {0..k-1} to itself");
    }
    FixedPointDemo demo;
    demo.set_size = k;
    for (std::size_t v = 0; v < k; ++v) {
        FixedPointTrace t{v, phi[v], psi[phi[v]], psi[phi[v]] == v};
        demo.trace.push_back(t);
        ++demo.candidates_examined;
        if (t.consistent && !demo.couple) demo.couple = IndexPair{t.u, v};
    }
    demo.couple_found = demo.couple.has_value();
    demo.verdict = demo.couple_found ? "couple found" : "no fixed point";
    return demo;
}

std::optional<std::size_t> detection_cell(Player punisher, const FeedbackTable& nominal,
                                          std::span<const std::size_t> opponent, std::span<const Vec> states) {
    const Side side = side_of(punisher);
    for (std::size_t k = 0; k < opponent.size(); ++k) {
        if (opponent[k] != opponent_of(side, nominal.lookup(k, states[k]))) return k;
    }
    return std::nullopt;
}

NADStrategy punishment_strategy(Player punisher, const FeedbackTable& nominal, const ValueField& values) {
    if (nominal.steps() != values.partition.steps() || !(nominal.grid() == values.grid)) {
        throw UsageError("punishment_strategy: nominal table and value field use different lattices");
    }
    const Side side = side_of(punisher);
    const auto& table = punisher == Player::First ? values.punish_1 : values.punish_2;
    auto respond = [punisher, side, nominal, table](const StrategyInput& in) -> std::size_t {
        const Vec& x = in.states[in.cell];
        const auto k = detection_cell(punisher, nominal, in.opponent, in.states);
        if (k && in.cell > *k) return table[in.cell * nominal.grid().size() + nominal.grid().nearest(x)];
        return own_of(side, nominal.lookup(in.cell, x));
    };
    return NADStrategy(values.partition, side, respond,
                       punisher == Player::First ? "punish player II" : "punish player I");
}

std::size_t Deviation::control(std::size_t cell, const Vec& x, const FeedbackTable& nominal) const {
    if (forced.at(cell)) return *forced[cell];
    return own_of(side_of(deviator), nominal.lookup(cell, x));
}

NADStrategy deviation_strategy(const Deviation& d, const FeedbackTable& nominal, const TimePartition& partition) {
    if (d.forced.size() != nominal.steps() || partition.steps() != nominal.steps()) {
        throw UsageError("deviation_strategy: deviation, table and partition lengths differ");
    }
    return NADStrategy(partition, side_of(d.deviator),
                       [d, nominal](const StrategyInput& in) { return d.control(in.cell, in.states[in.cell], nominal); },
                       d.label);
}

std::vector<Deviation> single_cell_deviations(Player deviator, const TimePartition& partition,
                                              std::size_t coarse_cells, std::size_t control_count) {
    const std::size_t n = partition.steps();
    if (coarse_cells == 0 || n % coarse_cells != 0) {
        throw UsageError("single_cell_deviations: " + std::to_string(coarse_cells) +
                         " coarse cells do not divide " + std::to_string(n) + " steps");
    }
    const std::size_t width = n / coarse_cells;
    std::vector<Deviation> out;
    for (std::size_t c = 0; c < coarse_cells; ++c) {
        for (std::size_t k = 0; k < control_count; ++k) {
            Deviation d;
            d.deviator = deviator;
            d.forced.assign(n, std::nullopt);
            for (std::size_t i = c * width; i < (c + 1) * width; ++i) d.forced[i] = k;
            std::ostringstream os;
            os << "P" << (deviator == Player::First ? 1 : 2) << " cell " << c << " control " << k;
            d.label = os.str();
            out.push_back(std::move(d));
        }
    }
    return out;
}

std::vector<Deviation> constant_deviations(Player deviator, const TimePartition& partition,
                                           std::size_t control_count) {
    std::vector<Deviation> out;
    for (std::size_t k = 0; k < control_count; ++k) {
        Deviation d;
        d.deviator = deviator;
        d.forced.assign(partition.steps(), k);
        d.label = "P" + std::to_string(deviator == Player::First ? 1 : 2) + " constant control " + std::to_string(k);
        out.push_back(std::move(d));
    }
    return out;
}

void check_deviation(const Deviation& d, const FeedbackTable& nominal, std::size_t control_count) {
    if (d.forced.size() != nominal.steps()) {
        throw UsageError("deviation '" + d.label + "' is not piecewise constant on the partition: " +
                         std::to_string(d.forced.size()) + " cells for " + std::to_string(nominal.steps()) + " steps");
    }
    const Side side = side_of(d.deviator);
    bool differs = false;
    for (std::size_t i = 0; i < d.forced.size(); ++i) {
        if (!d.forced[i]) continue;
        if (*d.forced[i] >= control_count) throw UsageError("deviation '" + d.label + "' uses an invalid control index");
        for (std::size_t node = 0; node < nominal.grid().size() && !differs; ++node) {
            differs = own_of(side, nominal.at(i, node)) != *d.forced[i];
        }
    }
    if (!differs) throw UsageError("deviation '" + d.label + "' never differs from the nominal controls");
}

}  // namespace bsdegame
