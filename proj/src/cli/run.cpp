#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>

#include "bsdegame/cli.hpp"
#include "bsdegame/families.hpp"
#include "bsdegame/hamiltonian.hpp"
#include "bsdegame/nash_engine.hpp"
#include "bsdegame/strategies.hpp"
#include "bsdegame/value_pde.hpp"
#include "json.hpp"

namespace bsdegame::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Per-run context: resolved configuration, output directory, artifacts written.
struct Context {
    RunConfig config;
    std::string command;
    fs::path out_dir;
    bool quiet = false;
    std::ostream* out = nullptr;
    std::vector<std::string> artifacts;

    std::ostream& log() {
        static std::ostream null_stream(nullptr);
        return quiet ? null_stream : *out;
    }

    std::ofstream open(const std::string& name) {
        fs::create_directories(out_dir);
        std::ofstream f(out_dir / name, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + (out_dir / name).string());
        artifacts.push_back(name);
        return f;
    }

    void write_json(const std::string& name, const json& doc) {
        auto f = open(name);
        f << doc.dump(2) << '\n';
    }
};

json vec_json(const Vec& x) { return json(std::vector<double>(x.begin(), x.end())); }

TimePartition make_partition(const RunConfig& c, const GameSpec& spec) {
    if (c.end_time && *c.end_time != spec.horizon) {
        throw ConfigError("config field 'partition.end' must equal the horizon T = " + std::to_string(spec.horizon));
    }
    if (!(c.start_time < spec.horizon) || c.start_time < 0.0) {
        throw ConfigError("config field 'partition.start' must lie in [0, T)");
    }
    return TimePartition::uniform(c.start_time, spec.horizon, c.steps);
}

StateGrid make_grid(const RunConfig& c) { return StateGrid(c.grid_lo, c.grid_hi, c.grid_nodes); }

ValueOptions value_options(const RunConfig& c) {
    ValueOptions o;
    o.scheme = c.scheme;
    o.audit_samples = c.isaacs_queries;
    o.audit_seed = c.isaacs_seed;
    return o;
}

json audit_json(const IsaacsAudit& a) {
    json failing = json::array();
    for (std::size_t k = 0; k < a.failing.size(); ++k) {
        const auto& q = a.failing[k];
        failing.push_back({{"t", q.t}, {"x", vec_json(q.x)}, {"y", q.y}, {"p", vec_json(q.p)},
                           {"player", q.j == Player::First ? 1 : 2}, {"gap", a.failing_gaps[k]}});
    }
    return {{"queries", a.queries}, {"seed", a.seed}, {"max_gap", a.max_gap}, {"tolerance", a.tolerance},
            {"flagged", a.flagged}, {"failing", failing}};
}

int cmd_validate(Context& ctx, const GameSpec& spec) {
    const ValidationReport r = validate_spec(spec, ctx.config.validate_samples, ctx.config.seed);
    json checks = json::array();
    for (const auto& c : r.checks) {
        checks.push_back({{"id", c.id}, {"description", c.description}, {"observed", c.observed},
                          {"declared", c.declared}, {"passed", c.passed}, {"informational", c.informational}});
        if (!ctx.quiet) {
            ctx.log() << std::left << std::setw(10) << c.id << (c.informational ? "info" : c.passed ? "pass" : "FAIL")
                      << "  observed " << c.observed << "  declared " << c.declared << "  " << c.description << '\n';
        }
    }
    ctx.write_json("validation.json", {{"family", spec.family_id}, {"samples", r.samples}, {"seed", r.seed},
                                        {"all_passed", r.all_passed}, {"checks", checks}, {"warnings", r.warnings}});
    for (const auto& w : r.warnings) {
        if (!ctx.quiet) ctx.log() << "warning: " << w << '\n';
    }
    return r.all_passed ? kExitPass : kExitFail;
}

int cmd_isaacs(Context& ctx, const GameSpec& spec) {
    const IsaacsAudit a = audit_isaacs(spec, default_query_sampler(), ctx.config.isaacs_queries, ctx.config.isaacs_seed);
    ctx.write_json("isaacs.json", audit_json(a));
    if (!ctx.quiet) {
        ctx.log() << "Isaacs audit over " << a.queries << " queries: max gap " << a.max_gap
                  << (a.flagged ? " (exceeds tolerance; values bracket rather than coincide)" : "") << '\n';
    }
    return a.flagged ? kExitFail : kExitPass;
}

ValueField values_for(Context& ctx, const GameSpec& spec) {
    return compute_values(spec, make_partition(ctx.config, spec), make_grid(ctx.config), value_options(ctx.config));
}

int cmd_values(Context& ctx, const GameSpec& spec) {
    const ValueField f = values_for(ctx, spec);
    const RegularityReport reg = regularity_check(f, spec);
    {
        auto csv = ctx.open("values.csv");
        write_values_csv(f, spec, csv);
    }
    const Vec x0(std::span<const double>(ctx.config.start_state));
    ctx.write_json("values.json",
                   {{"W1_start", f.value_at(Player::First, 0, x0)},
                    {"W2_start", f.value_at(Player::Second, 0, x0)},
                    {"recursion_gap", {f.recursion_gap[0], f.recursion_gap[1]}},
                    {"grid_slack", {f.grid_slack(Player::First), f.grid_slack(Player::Second)}},
                    {"boundary", to_string(f.boundary)},
                    {"regularity",
                     {{"lipschitz_x", {reg.lipschitz_x[0], reg.lipschitz_x[1]}},
                      {"holder_t", {reg.holder_t[0], reg.holder_t[1]}},
                      {"reference", reg.reference}}},
                    {"isaacs", audit_json(*f.audit)}});
    if (!ctx.quiet) {
        ctx.log() << "W1(t0,x0) = " << f.value_at(Player::First, 0, x0) << "  W2(t0,x0) = "
                  << f.value_at(Player::Second, 0, x0) << '\n';
        if (f.audit->flagged) ctx.log() << "warning: Isaacs audit flagged, max gap " << f.audit->max_gap << '\n';
    }
    return kExitPass;
}

void write_table_csv(Context& ctx, const std::string& name, const GameSpec& spec, const FeedbackTable& table,
                     const TimePartition& part) {
    auto csv = ctx.open(name);
    csv << std::setprecision(17) << "step,t,node";
    for (std::size_t a = 0; a < table.grid().dim(); ++a) csv << ",x" << a + 1;
    csv << ",u,v\n";
    for (std::size_t i = 0; i < table.steps(); ++i) {
        for (std::size_t node = 0; node < table.grid().size(); ++node) {
            csv << i << ',' << part.knot(i) << ',' << node;
            for (double c : table.grid().point(node)) csv << ',' << c;
            csv << ',' << spec.U.label(table.at(i, node).u) << ',' << spec.V.label(table.at(i, node).v) << '\n';
        }
    }
}

int cmd_equilibrium(Context& ctx, const GameSpec& spec) {
    const ValueField f = values_for(ctx, spec);
    Construction c;
    try {
        c = construct_equilibrium(spec, f, ctx.config.epsilon, ctx.config.scheme);
    } catch (const ConstructionError& e) {
        ctx.write_json("equilibrium.json", {{"constructed", false}, {"error", e.what()}});
        if (!ctx.quiet) ctx.log() << e.what() << '\n';
        return kExitFail;
    }
    write_table_csv(ctx, "equilibrium.csv", spec, c.controls, f.partition);
    for (Player j : {Player::First, Player::Second}) {
        const BackwardSolution sol = solve_markov(spec, j, c.controls, f.partition, f.grid, ctx.config.scheme);
        auto csv = ctx.open(j == Player::First ? "solution_1.csv" : "solution_2.csv");
        write_solution_csv(sol, csv);
    }
    const auto& d = c.diagnostics;
    ctx.write_json("equilibrium.json", {{"constructed", true},
                                         {"epsilon", d.epsilon},
                                         {"saddle_selected", d.saddle_selected},
                                         {"scan_selected", d.scan_selected},
                                         {"min_slack", {d.min_slack[0], d.min_slack[1]}}});
    if (!ctx.quiet) {
        ctx.log() << "equilibrium constructed: " << d.saddle_selected << " nodes from the saddle pair, "
                  << d.scan_selected << " from the scan; min slack " << d.min_slack[0] << ", " << d.min_slack[1]
                  << '\n';
    }
    return kExitPass;
}

int cmd_verify(Context& ctx, const GameSpec& spec) {
    const ValueField f = values_for(ctx, spec);
    const Construction c = construct_equilibrium(spec, f, ctx.config.epsilon, ctx.config.scheme);
    const StartPoint start{f.partition.start(), Vec(std::span<const double>(ctx.config.start_state))};
    const EquilibriumCertificate cert = verify_certificate(spec, c.controls, f, ctx.config.epsilon, start,
                                                          ctx.config.paths, ctx.config.seed, ctx.config.scheme);
    {
        auto csv = ctx.open("certificate.csv");
        write_certificate_csv(cert, f.partition, csv);
    }
    if (ctx.config.export_paths > 0) {
        const PathBundle b = simulate(spec, start, f.partition, feedback_rule(c.controls),
                                      std::min(ctx.config.export_paths, ctx.config.paths), ctx.config.seed);
        auto csv = ctx.open("paths.csv");
        write_paths_csv(b, spec, csv);
    }
    ctx.write_json("certificate.json",
                   {{"passed", cert.passed},
                    {"epsilon", cert.epsilon},
                    {"paths", cert.path_count},
                    {"seed", cert.seed},
                    {"start", {{"t", start.t}, {"x", vec_json(start.x)}}},
                    {"payoff", {cert.payoff[0], cert.payoff[1]}},
                    {"mc_mean", {cert.mc_mean[0], cert.mc_mean[1]}},
                    {"mc_std_error", {cert.mc_std_error[0], cert.mc_std_error[1]}},
                    {"consistent", {cert.consistent[0], cert.consistent[1]}},
                    {"min_probability", {cert.min_probability[0], cert.min_probability[1]}},
                    {"probability_threshold", cert.probability_threshold},
                    {"box_exits", cert.box_exits}});
    if (!ctx.quiet) {
        ctx.log() << "e1 = " << cert.payoff[0] << " (MC " << cert.mc_mean[0] << " +- " << cert.mc_std_error[0]
                  << "), e2 = " << cert.payoff[1] << " (MC " << cert.mc_mean[1] << " +- " << cert.mc_std_error[1]
                  << ")\nmin knot probability " << cert.min_probability[0] << ", " << cert.min_probability[1]
                  << " against threshold " << cert.probability_threshold << '\n'
                  << "certificate " << (cert.passed ? "PASSED" : "FAILED") << '\n';
        if (cert.box_exits > 0) ctx.log() << "warning: " << cert.box_exits << " paths left the state box\n";
    }
    return cert.passed ? kExitPass : kExitFail;
}

int cmd_deviate(Context& ctx, const GameSpec& spec) {
    const ValueField f = values_for(ctx, spec);
    const Construction c = construct_equilibrium(spec, f, ctx.config.epsilon, ctx.config.scheme);
    const StartPoint start{f.partition.start(), Vec(std::span<const double>(ctx.config.start_state))};
    const auto devs = standard_deviation_set(spec, c.controls, f.partition, ctx.config.coarse_cells);
    const DeviationReport rep = deviation_test(spec, c.controls, f, devs, ctx.config.epsilon, start,
                                               ctx.config.deviate_paths, ctx.config.seed, ctx.config.scheme);
    {
        auto csv = ctx.open("deviations.csv");
        write_deviations_csv(rep, csv);
    }
    json summary = json::array();
    for (std::size_t p = 0; p < 2; ++p) {
        summary.push_back({{"player", p + 1},
                           {"max_gain", rep.argmax[p] ? json(rep.max_gain[p]) : json(nullptr)},
                           {"argmax", rep.argmax[p] ? json(rep.outcomes[*rep.argmax[p]].label) : json(nullptr)},
                           {"lattice_argmax",
                            rep.lattice_argmax[p] ? json(rep.outcomes[*rep.lattice_argmax[p]].label) : json(nullptr)},
                           {"margin", rep.margin[p]},
                           {"grid_slack", rep.grid_slack[p]}});
    }
    ctx.write_json("deviations.json", {{"passed", rep.passed},
                                        {"epsilon", rep.epsilon},
                                        {"paths", rep.path_count},
                                        {"seed", rep.seed},
                                        {"deviations", rep.outcomes.size()},
                                        {"nominal_payoff", {rep.nominal_payoff[0], rep.nominal_payoff[1]}},
                                        {"players", summary},
                                        {"efficacy_ok", rep.efficacy_ok}});
    if (!ctx.quiet) {
        for (std::size_t p = 0; p < 2; ++p) {
            if (!rep.argmax[p]) continue;
            ctx.log() << "player " << p + 1 << ": max gain " << rep.max_gain[p] << " ("
                      << rep.outcomes[*rep.argmax[p]].label << ") against eps + margin = "
                      << rep.epsilon + rep.margin[p] << '\n';
        }
        ctx.log() << rep.outcomes.size() << " deviations, test " << (rep.passed ? "PASSED" : "FAILED") << '\n';
    }
    return rep.passed ? kExitPass : kExitFail;
}

int cmd_demo_fixedpoint(Context& ctx) {
    const FixedPointDemo demo = no_delay_counterexample();
    json trace = json::array();
    for (const auto& t : demo.trace) {
        trace.push_back({{"v", t.v}, {"u", t.u}, {"psi_u", t.psi_of_u}, {"consistent", t.consistent}});
    }
    ctx.write_json("fixedpoint.json", {{"verdict", demo.verdict},
                                        {"candidates_examined", demo.candidates_examined},
                                        {"trace", trace}});
    ctx.log() << "zero-delay strategies on U = V = {0, 1}: phi = identity, psi = negation\n";
    for (const auto& t : demo.trace) {
        ctx.log() << "  v = " << t.v << " -> u = phi(v) = " << t.u << " -> psi(u) = " << t.psi_of_u
                  << (t.consistent ? "  consistent" : "  inconsistent") << '\n';
    }
    ctx.log() << demo.verdict << " (" << demo.candidates_examined << " candidates examined)\n";
    return kExitPass;
}

}  // namespace

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"validate", "isaacs", "values", "equilibrium",
                                                "verify",   "deviate", "demo-fixedpoint"};
    return names;
}

int run(const std::string& command, const RunOverrides& overrides, std::ostream& out, std::ostream& err) {
    const auto& names = command_names();
    if (std::find(names.begin(), names.end(), command) == names.end()) {
        err << "unknown command '" << command << "'\n";
        return kExitUsage;
    }
    Context ctx;
    ctx.command = command;
    ctx.quiet = overrides.quiet;
    ctx.out = &out;
    try {
        if (overrides.config_path) {
            ctx.config = load_config(*overrides.config_path);
        } else if (command != "demo-fixedpoint") {
            err << "command '" << command << "' requires --config\n";
            return kExitUsage;
        }
        if (overrides.seed) ctx.config.seed = *overrides.seed;
        std::string dir = ctx.config.output_dir;
        if (const char* env = std::getenv("BSDEGAME_OUT"); env && *env) dir = env;
        if (overrides.out_dir) dir = *overrides.out_dir;
        ctx.out_dir = dir;

        int status = kExitPass;
        if (command == "demo-fixedpoint") {
            status = cmd_demo_fixedpoint(ctx);
        } else {
            const GameSpec spec = build_game(ctx.config);
            if (command == "validate") status = cmd_validate(ctx, spec);
            if (command == "isaacs") status = cmd_isaacs(ctx, spec);
            if (command == "values") status = cmd_values(ctx, spec);
            if (command == "equilibrium") status = cmd_equilibrium(ctx, spec);
            if (command == "verify") status = cmd_verify(ctx, spec);
            if (command == "deviate") status = cmd_deviate(ctx, spec);
        }

        json manifest{{"command", command},
                      {"version", BSDEGAME_VERSION},
                      {"seed", ctx.config.seed},
                      {"config_hash", fnv1a_hex(ctx.config.canonical)},
                      {"config", ctx.config.canonical.empty() ? json(nullptr) : json::parse(ctx.config.canonical)},
                      {"config_path", overrides.config_path ? json(*overrides.config_path) : json(nullptr)},
                      {"seed_override", overrides.seed.has_value()},
                      {"exit_status", status},
                      {"artifacts", ctx.artifacts}};
        ctx.write_json("manifest_" + command + ".json", manifest);
        return status;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ConstructionError& e) {
        err << "error: " << e.what() << '\n';
        return kExitFail;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFail;
    }
}

}  // namespace bsdegame::cli
