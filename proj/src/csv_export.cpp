#include <iomanip>
#include <ostream>

#include "bsdegame/bsde_solver.hpp"
#include "bsdegame/nash_engine.hpp"
#include "bsdegame/sde_sim.hpp"
#include "bsdegame/value_pde.hpp"

namespace bsdegame {

namespace {

// Round-trip precision for every double written.
struct PrecisionGuard {
    explicit PrecisionGuard(std::ostream& os) : os_(os), flags_(os.flags()), precision_(os.precision()) {
        os_ << std::setprecision(17);
    }
    ~PrecisionGuard() {
        os_.flags(flags_);
        os_.precision(precision_);
    }
    std::ostream& os_;
    std::ios::fmtflags flags_;
    std::streamsize precision_;
};

void state_header(std::ostream& out, std::size_t dim) {
    for (std::size_t a = 0; a < dim; ++a) out << ",x" << a + 1;
}

void state_row(std::ostream& out, const Vec& x) {
    for (double c : x) out << ',' << c;
}

}  // namespace

void write_paths_csv(const PathBundle& bundle, const GameSpec& spec, std::ostream& out) {
    PrecisionGuard guard(out);
    out << "# seed=" << bundle.seed << " paths=" << bundle.path_count << " start_t=" << bundle.start.t << '\n';
    out << "# knots=";
    for (std::size_t i = 0; i < bundle.partition.size(); ++i) out << (i ? ";" : "") << bundle.partition.knot(i);
    out << '\n';
    out << "path,knot,t";
    state_header(out, bundle.state_dim);
    out << ",u,v\n";
    for (std::size_t m = 0; m < bundle.path_count; ++m) {
        for (std::size_t i = 0; i < bundle.partition.size(); ++i) {
            out << m << ',' << i << ',' << bundle.partition.knot(i);
            state_row(out, bundle.state(m, i));
            if (i < bundle.steps()) {
                const IndexPair c = bundle.control(m, i);
                out << ',' << spec.U.label(c.u) << ',' << spec.V.label(c.v) << '\n';
            } else {
                out << ",,\n";
            }
        }
    }
}

void write_solution_csv(const BackwardSolution& solution, std::ostream& out) {
    PrecisionGuard guard(out);
    const std::size_t noise_dim = solution.Z.empty() ? 0 : solution.Z.front().size();
    out << "# player=" << (solution.player == Player::First ? 1 : 2) << " controls=" << solution.control_source
        << " boundary=" << to_string(solution.boundary) << '\n';
    out << "knot,t,node";
    state_header(out, solution.grid.dim());
    out << ",Y";
    for (std::size_t a = 0; a < noise_dim; ++a) out << ",Z" << a + 1;
    out << '\n';
    for (std::size_t i = 0; i < solution.partition.size(); ++i) {
        for (std::size_t node = 0; node < solution.nodes(); ++node) {
            out << i << ',' << solution.partition.knot(i) << ',' << node;
            state_row(out, solution.grid.point(node));
            out << ',' << solution.y(i, node);
            for (double z : solution.z(i, node)) out << ',' << z;
            out << '\n';
        }
    }
}

void write_values_csv(const ValueField& field, const GameSpec& spec, std::ostream& out) {
    PrecisionGuard guard(out);
    out << "# boundary=" << to_string(field.boundary) << " grid_slack_1=" << field.grid_slack(Player::First)
        << " grid_slack_2=" << field.grid_slack(Player::Second) << '\n';
    out << "knot,t,node";
    state_header(out, field.grid.dim());
    out << ",W1,W2,W1_upper,W2_upper,saddle1_u,saddle1_v,saddle2_u,saddle2_v,punish1_u,punish2_v\n";
    const std::size_t n = field.partition.steps(), nodes = field.nodes();
    for (std::size_t i = 0; i < field.partition.size(); ++i) {
        for (std::size_t node = 0; node < nodes; ++node) {
            const std::size_t at = i * nodes + node;
            out << i << ',' << field.partition.knot(i) << ',' << node;
            state_row(out, field.grid.point(node));
            out << ',' << field.W[0][at] << ',' << field.W[1][at] << ',' << field.W_upper[0][at] << ','
                << field.W_upper[1][at];
            if (i < n) {
                const IndexPair s1 = field.saddle[0].at(i, node), s2 = field.saddle[1].at(i, node);
                out << ',' << spec.U.label(s1.u) << ',' << spec.V.label(s1.v) << ',' << spec.U.label(s2.u) << ','
                    << spec.V.label(s2.v) << ',' << spec.U.label(field.punish_1[at]) << ','
                    << spec.V.label(field.punish_2[at]);
            } else {
                out << ",,,,,,";
            }
            out << '\n';
        }
    }
}

void write_certificate_csv(const EquilibriumCertificate& cert, const TimePartition& partition, std::ostream& out) {
    PrecisionGuard guard(out);
    out << "# epsilon=" << cert.epsilon << " paths=" << cert.path_count << " seed=" << cert.seed
        << " e1=" << cert.payoff[0] << " e2=" << cert.payoff[1] << '\n';
    out << "knot,t,p1,p2,threshold\n";
    for (std::size_t i = 0; i < partition.size(); ++i) {
        out << i << ',' << partition.knot(i) << ',' << cert.probability[0][i] << ',' << cert.probability[1][i] << ','
            << cert.probability_threshold << '\n';
    }
}

void write_deviations_csv(const DeviationReport& report, std::ostream& out) {
    PrecisionGuard guard(out);
    out << "# epsilon=" << report.epsilon << " paths=" << report.path_count << " seed=" << report.seed << '\n';
    out << "label,deviator,lattice_payoff,lattice_gain,mc_gain,mc_std_error,detected_fraction,efficacy\n";
    for (const auto& o : report.outcomes) {
        out << '"' << o.label << "\"," << (o.deviator == Player::First ? 1 : 2) << ',' << o.lattice_payoff << ','
            << o.lattice_gain << ',' << o.mc_gain << ',' << o.mc_std_error << ',' << o.detected_fraction << ','
            << o.efficacy << '\n';
    }
}

}  // namespace bsdegame
