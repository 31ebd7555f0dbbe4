#include <fstream>
#include <set>
#include <sstream>

#include "bsdegame/cli.hpp"
#include "bsdegame/families.hpp"
#include "json.hpp"

namespace bsdegame::cli {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::string& where, const std::set<std::string>& known) {
    for (const auto& [key, _] : obj.items()) {
        if (!known.count(key)) {
            std::string list;
            for (const auto& k : known) list += (list.empty() ? "" : ", ") + k;
            throw ConfigError("config field '" + where + (where.empty() ? "" : ".") + key + "' is not recognised (allowed: " +
                              list + ")");
        }
    }
}

const json& object_at(const json& parent, const std::string& key, const std::string& where) {
    const json& v = parent.at(key);
    if (!v.is_object()) throw ConfigError("config field '" + where + "' must be an object");
    return v;
}

double number(const json& v, const std::string& where) {
    if (!v.is_number()) throw ConfigError("config field '" + where + "' must be a number");
    return v.get<double>();
}

double positive(const json& v, const std::string& where) {
    const double x = number(v, where);
    if (!(x > 0.0)) throw ConfigError("config field '" + where + "' must be positive");
    return x;
}

std::uint64_t count(const json& v, const std::string& where, std::uint64_t min_value = 1) {
    if (!v.is_number_integer() || v.get<long long>() < static_cast<long long>(min_value)) {
        throw ConfigError("config field '" + where + "' must be an integer >= " + std::to_string(min_value));
    }
    return v.get<std::uint64_t>();
}

std::vector<double> numbers(const json& v, const std::string& where) {
    if (!v.is_array() || v.empty()) throw ConfigError("config field '" + where + "' must be a non-empty array of numbers");
    std::vector<double> out;
    for (std::size_t k = 0; k < v.size(); ++k) out.push_back(number(v[k], where + "[" + std::to_string(k) + "]"));
    return out;
}

// Line and column of a byte offset, 1-based.
std::string position(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t k = 0; k < byte && k < text.size(); ++k) {
        if (text[k] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << h;
    return os.str();
}

RunConfig parse_config(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("config parse error at " + position(text, e.byte == 0 ? 0 : e.byte - 1) + ": " + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    reject_unknown(doc, "", {"model", "partition", "grid", "start_state", "epsilon", "paths", "seed", "output_dir",
                             "validate", "isaacs", "deviate", "scheme", "export_paths"});

    RunConfig c;
    if (!doc.contains("model")) throw ConfigError("config field 'model' is required");
    const json& model = object_at(doc, "model", "model");
    reject_unknown(model, "model", {"family", "parameters", "lipschitz", "bound", "U", "V"});
    if (!model.contains("family") || !model["family"].is_string()) {
        throw ConfigError("config field 'model.family' must be a string");
    }
    c.family = model["family"].get<std::string>();
    const ModelFamily& fam = find_family(c.family);
    if (model.contains("parameters")) {
        const json& params = object_at(model, "parameters", "model.parameters");
        for (const auto& [key, value] : params.items()) {
            if (!fam.defaults.count(key)) {
                std::string known;
                for (const auto& [k, _] : fam.defaults) known += (known.empty() ? "" : ", ") + k;
                throw ConfigError("config field 'model.parameters." + key + "' is not a parameter of family '" +
                                  c.family + "' (known: " + known + ")");
            }
            c.parameters[key] = number(value, "model.parameters." + key);
        }
    }
    if (model.contains("lipschitz")) c.lipschitz = positive(model["lipschitz"], "model.lipschitz");
    if (model.contains("bound")) c.bound = positive(model["bound"], "model.bound");
    if (model.contains("U")) c.u_points = numbers(model["U"], "model.U");
    if (model.contains("V")) c.v_points = numbers(model["V"], "model.V");

    if (doc.contains("partition")) {
        const json& p = object_at(doc, "partition", "partition");
        reject_unknown(p, "partition", {"start", "end", "steps"});
        if (p.contains("start")) c.start_time = number(p["start"], "partition.start");
        if (p.contains("end")) c.end_time = number(p["end"], "partition.end");
        if (p.contains("steps")) c.steps = count(p["steps"], "partition.steps");
    }
    if (!doc.contains("grid")) throw ConfigError("config field 'grid' is required");
    {
        const json& g = object_at(doc, "grid", "grid");
        reject_unknown(g, "grid", {"lo", "hi", "nodes"});
        for (const char* key : {"lo", "hi", "nodes"}) {
            if (!g.contains(key)) throw ConfigError(std::string("config field 'grid.") + key + "' is required");
        }
        c.grid_lo = numbers(g["lo"], "grid.lo");
        c.grid_hi = numbers(g["hi"], "grid.hi");
        const json& nodes = g["nodes"];
        if (!nodes.is_array() || nodes.empty()) throw ConfigError("config field 'grid.nodes' must be a non-empty array");
        for (std::size_t k = 0; k < nodes.size(); ++k) {
            c.grid_nodes.push_back(count(nodes[k], "grid.nodes[" + std::to_string(k) + "]", 3));
        }
        if (c.grid_lo.size() != c.grid_hi.size() || c.grid_lo.size() != c.grid_nodes.size()) {
            throw ConfigError("config fields 'grid.lo', 'grid.hi' and 'grid.nodes' must have equal length");
        }
        for (std::size_t a = 0; a < c.grid_lo.size(); ++a) {
            if (!(c.grid_lo[a] < c.grid_hi[a])) throw ConfigError("config field 'grid': lo must be below hi on every axis");
        }
    }
    c.start_state = doc.contains("start_state") ? numbers(doc["start_state"], "start_state")
                                                : std::vector<double>(c.grid_lo.size(), 0.0);
    if (doc.contains("epsilon")) {
        c.epsilon = positive(doc["epsilon"], "epsilon");
        if (c.epsilon >= 1.0) throw ConfigError("config field 'epsilon' must be below 1");
    }
    if (doc.contains("paths")) c.paths = count(doc["paths"], "paths");
    if (doc.contains("seed")) c.seed = count(doc["seed"], "seed", 0);
    if (doc.contains("output_dir")) {
        if (!doc["output_dir"].is_string()) throw ConfigError("config field 'output_dir' must be a string");
        c.output_dir = doc["output_dir"].get<std::string>();
    }
    if (doc.contains("export_paths")) c.export_paths = count(doc["export_paths"], "export_paths", 0);
    if (doc.contains("validate")) {
        const json& v = object_at(doc, "validate", "validate");
        reject_unknown(v, "validate", {"samples"});
        if (v.contains("samples")) c.validate_samples = count(v["samples"], "validate.samples");
    }
    if (doc.contains("isaacs")) {
        const json& v = object_at(doc, "isaacs", "isaacs");
        reject_unknown(v, "isaacs", {"queries", "seed"});
        if (v.contains("queries")) c.isaacs_queries = count(v["queries"], "isaacs.queries");
        if (v.contains("seed")) c.isaacs_seed = count(v["seed"], "isaacs.seed", 0);
    }
    if (doc.contains("deviate")) {
        const json& v = object_at(doc, "deviate", "deviate");
        reject_unknown(v, "deviate", {"coarse_cells", "paths"});
        if (v.contains("coarse_cells")) c.coarse_cells = count(v["coarse_cells"], "deviate.coarse_cells");
        if (v.contains("paths")) c.deviate_paths = count(v["paths"], "deviate.paths");
    }
    if (doc.contains("scheme")) {
        const json& v = object_at(doc, "scheme", "scheme");
        reject_unknown(v, "scheme", {"quadrature_order", "tolerance", "max_iterations", "boundary"});
        if (v.contains("quadrature_order")) c.scheme.quadrature_order = count(v["quadrature_order"], "scheme.quadrature_order");
        if (v.contains("tolerance")) c.scheme.tolerance = positive(v["tolerance"], "scheme.tolerance");
        if (v.contains("max_iterations")) c.scheme.max_iterations = count(v["max_iterations"], "scheme.max_iterations");
        if (v.contains("boundary")) {
            if (!v["boundary"].is_string()) throw ConfigError("config field 'scheme.boundary' must be a string");
            try {
                c.scheme.boundary = boundary_policy_from_string(v["boundary"].get<std::string>());
            } catch (const UsageError& e) {
                throw ConfigError(std::string("config field 'scheme.boundary': ") + e.what());
            }
        }
    }
    c.canonical = doc.dump();
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config(ss.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    } catch (const UsageError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

GameSpec build_game(const RunConfig& c) {
    GameSpec spec = make_game(c.family, c.parameters);
    const auto scalar_set = [](const std::vector<double>& pts, const std::string& prefix) {
        std::vector<Vec> points;
        std::vector<std::string> labels;
        for (std::size_t k = 0; k < pts.size(); ++k) {
            points.push_back(Vec{pts[k]});
            labels.push_back(prefix + std::to_string(k));
        }
        return ControlSet(points, labels);
    };
    if (c.u_points) spec.U = scalar_set(*c.u_points, "u");
    if (c.v_points) spec.V = scalar_set(*c.v_points, "v");
    if (c.lipschitz) spec.lipschitz = *c.lipschitz;
    if (c.bound) spec.bound = *c.bound;
    if (spec.state_dim != c.grid_lo.size()) {
        throw ConfigError("config field 'grid' has " + std::to_string(c.grid_lo.size()) + " axes but family '" +
                          c.family + "' has state dimension " + std::to_string(spec.state_dim));
    }
    if (c.start_state.size() != spec.state_dim) {
        throw ConfigError("config field 'start_state' must have " + std::to_string(spec.state_dim) + " entries");
    }
    spec.check_shape();
    return spec;
}

}  // namespace bsdegame::cli
