#include "bsdegame/families.hpp"

#include <algorithm>
#include <cmath>

namespace bsdegame {

namespace {

double clamp1(double v) { return std::clamp(v, -1.0, 1.0); }

Box symmetric_box(std::size_t n, double half_width) {
    return Box{std::vector<double>(n, -half_width), std::vector<double>(n, half_width)};
}

ControlSet three_point() {
    return ControlSet({Vec{-1.0}, Vec{0.0}, Vec{1.0}}, {"minus", "zero", "plus"});
}

double get(const ParamMap& p, const char* key) { return p.at(key); }

GameSpec base_1d(const ParamMap& p, std::string id) {
    GameSpec g;
    g.state_dim = 1;
    g.noise_dim = 1;
    g.horizon = get(p, "T");
    g.state_box = symmetric_box(1, get(p, "box"));
    g.family_id = std::move(id);
    g.parameters = p;
    return g;
}

GameSpec build_zero(const ParamMap& p) {
    GameSpec g = base_1d(p, "zero");
    g.U = ControlSet({Vec{0.0}}, {"zero"});
    g.V = ControlSet({Vec{0.0}}, {"zero"});
    g.drift = [](double, const Vec&, const Vec&, const Vec&) { return Vec{0.0}; };
    g.diffusion = [](double, const Vec&, const Vec&, const Vec&) { return Mat(1, 1, 0.0); };
    g.driver[0] = g.driver[1] = [](double, const Vec&, double, const Vec&, const Vec&, const Vec&) {
        return 0.0;
    };
    g.terminal[0] = g.terminal[1] = [](const Vec&) { return 0.0; };
    g.lipschitz = 1.0;
    g.bound = 1.0;
    return g;
}

// Dynamics and costs ignore the controls; f_j depends on x only.
GameSpec build_control_free(const ParamMap& p) {
    GameSpec g = base_1d(p, "control-free");
    const double theta = get(p, "theta"), sigma = get(p, "sigma");
    const double a1 = get(p, "a1"), a2 = get(p, "a2");
    g.U = three_point();
    g.V = three_point();
    g.drift = [theta](double, const Vec& x, const Vec&, const Vec&) { return Vec{-theta * x[0]}; };
    g.diffusion = [sigma](double, const Vec&, const Vec&, const Vec&) { return Mat(1, 1, sigma); };
    g.driver[0] = [a1](double, const Vec& x, double, const Vec&, const Vec&, const Vec&) {
        return a1 * std::sin(x[0]);
    };
    g.driver[1] = [a2](double, const Vec& x, double, const Vec&, const Vec&, const Vec&) {
        return a2 * std::cos(x[0]);
    };
    g.terminal[0] = [](const Vec& x) { return std::tanh(x[0]); };
    g.terminal[1] = [](const Vec& x) { return 1.0 / (1.0 + x[0] * x[0]); };
    g.lipschitz = std::max({1.0, std::abs(theta), std::abs(a1), std::abs(a2)});
    g.bound = std::max({1.0, std::abs(a1), std::abs(a2)});
    return g;
}

// Controls enter additively and separately; every (u,v)-dependent term is a
// dyadic rational, so Hamiltonians on dyadic queries are evaluated exactly.
GameSpec build_separable(const ParamMap& p) {
    GameSpec g = base_1d(p, "separable");
    const double gu = get(p, "gain_u"), gv = get(p, "gain_v"), c = get(p, "cost"), sigma = get(p, "sigma");
    g.U = three_point();
    g.V = three_point();
    g.drift = [gu, gv](double, const Vec&, const Vec& u, const Vec& v) { return Vec{gu * u[0] - gv * v[0]}; };
    g.diffusion = [sigma](double, const Vec&, const Vec&, const Vec&) { return Mat(1, 1, sigma); };
    g.driver[0] = [c](double, const Vec&, double y, const Vec&, const Vec& u, const Vec& v) {
        return 0.25 * clamp1(y) + (-c * u[0] * u[0] + 0.25 * v[0]);
    };
    g.driver[1] = [c](double, const Vec&, double, const Vec& z, const Vec& u, const Vec& v) {
        return 0.25 * clamp1(z[0]) + (0.25 * u[0] - c * v[0] * v[0]);
    };
    g.terminal[0] = [](const Vec& x) { return clamp1(x[0]); };
    g.terminal[1] = [](const Vec& x) { return 0.5 * clamp1(-x[0]); };
    g.lipschitz = 1.0;
    g.bound = std::max(1.0, 0.5 + std::abs(c));
    return g;
}

// Matching pennies in the running cost: sup-inf and inf-sup differ on pure grids.
GameSpec build_pennies(const ParamMap& p) {
    GameSpec g = base_1d(p, "pennies");
    const double c = get(p, "coupling");
    g.U = ControlSet({Vec{-1.0}, Vec{1.0}}, {"minus", "plus"});
    g.V = ControlSet({Vec{-1.0}, Vec{1.0}}, {"minus", "plus"});
    g.drift = [](double, const Vec&, const Vec&, const Vec&) { return Vec{0.0}; };
    g.diffusion = [](double, const Vec&, const Vec&, const Vec&) { return Mat(1, 1, 1.0); };
    g.driver[0] = [c](double, const Vec&, double, const Vec&, const Vec& u, const Vec& v) {
        return c * u[0] * v[0];
    };
    g.driver[1] = [c](double, const Vec&, double, const Vec&, const Vec& u, const Vec& v) {
        return -c * u[0] * v[0];
    };
    g.terminal[0] = [](const Vec& x) { return clamp1(x[0]); };
    g.terminal[1] = [](const Vec& x) { return -clamp1(x[0]); };
    g.lipschitz = 1.0;
    g.bound = std::max(1.0, std::abs(c));
    return g;
}

// Zero-sum pair: Phi_2 = -Phi_1 and f_2(t,x,y,z,u,v) = -f_1(t,x,-y,-z,u,v).
GameSpec build_antisymmetric(const ParamMap& p) {
    GameSpec g = base_1d(p, "antisymmetric");
    const double theta = get(p, "theta"), sigma = get(p, "sigma");
    const double lam = get(p, "lambda"), kap = get(p, "kappa"), mu = get(p, "mu");
    const double rho = get(p, "rho"), gam = get(p, "gamma");
    g.U = three_point();
    g.V = three_point();
    g.drift = [theta](double, const Vec& x, const Vec&, const Vec&) { return Vec{-theta * x[0]}; };
    g.diffusion = [sigma](double, const Vec&, const Vec&, const Vec&) { return Mat(1, 1, sigma); };
    auto f1 = [=](double, const Vec& x, double y, const Vec& z, const Vec& u, const Vec& v) {
        return lam * u[0] * std::tanh(x[0]) - kap * u[0] * u[0] + mu * v[0] * std::cos(x[0]) +
               rho * std::tanh(y) + gam * std::tanh(z[0]);
    };
    g.driver[0] = f1;
    g.driver[1] = [f1](double t, const Vec& x, double y, const Vec& z, const Vec& u, const Vec& v) {
        return -f1(t, x, -y, z * -1.0, u, v);
    };
    g.terminal[0] = [](const Vec& x) { return std::tanh(x[0]); };
    g.terminal[1] = [](const Vec& x) { return -std::tanh(x[0]); };
    g.lipschitz = std::max({1.0, std::abs(theta), std::abs(lam) + std::abs(mu)});
    g.bound = std::max(1.0, std::abs(lam) + std::abs(kap) + std::abs(mu) + std::abs(rho) + std::abs(gam));
    return g;
}

// Player 1 pushes the state up against player 2; the payoffs are not opposed:
// player 1 wants x large, player 2 wants x near `target`.
GameSpec build_bilinear_1d(const ParamMap& p) {
    GameSpec g = base_1d(p, "bilinear-1d");
    const double k = get(p, "gain"), sigma = get(p, "sigma");
    const double kap = get(p, "kappa"), rho = get(p, "rho"), gam = get(p, "gamma"), a = get(p, "target");
    g.U = three_point();
    g.V = three_point();
    g.drift = [k](double, const Vec&, const Vec& u, const Vec& v) { return Vec{k * (u[0] - v[0])}; };
    g.diffusion = [sigma](double, const Vec&, const Vec&, const Vec&) { return Mat(1, 1, sigma); };
    g.driver[0] = [=](double, const Vec&, double y, const Vec& z, const Vec& u, const Vec&) {
        return -kap * u[0] * u[0] - rho * std::tanh(y) + gam * std::tanh(z[0]);
    };
    g.driver[1] = [=](double, const Vec&, double y, const Vec& z, const Vec&, const Vec& v) {
        return -kap * v[0] * v[0] - rho * std::tanh(y) + gam * std::tanh(z[0]);
    };
    g.terminal[0] = [](const Vec& x) { return std::tanh(x[0]); };
    g.terminal[1] = [a](const Vec& x) { return std::exp(-0.5 * (x[0] - a) * (x[0] - a)); };
    g.lipschitz = std::max({1.0, std::abs(rho), std::abs(gam)});
    g.bound = std::max(1.0, std::abs(kap) + std::abs(rho) + std::abs(gam));
    return g;
}

// Two-dimensional state and noise version of bilinear-1d.
GameSpec build_bilinear_2d(const ParamMap& p) {
    GameSpec g;
    g.state_dim = 2;
    g.noise_dim = 2;
    g.horizon = get(p, "T");
    g.state_box = symmetric_box(2, get(p, "box"));
    g.family_id = "bilinear-2d";
    g.parameters = p;
    const double k = get(p, "gain"), sigma = get(p, "sigma");
    const double kap = get(p, "kappa"), rho = get(p, "rho"), gam = get(p, "gamma"), a = get(p, "target");
    g.U = three_point();
    g.V = three_point();
    g.drift = [k](double, const Vec&, const Vec& u, const Vec& v) {
        return Vec{k * (u[0] - v[0]), 0.5 * k * (u[0] - v[0])};
    };
    g.diffusion = [sigma](double, const Vec&, const Vec&, const Vec&) { return Mat::identity(2, sigma); };
    g.driver[0] = [=](double, const Vec&, double y, const Vec& z, const Vec& u, const Vec&) {
        return -kap * u[0] * u[0] - rho * std::tanh(y) + gam * std::tanh(z[0]);
    };
    g.driver[1] = [=](double, const Vec&, double y, const Vec& z, const Vec&, const Vec& v) {
        return -kap * v[0] * v[0] - rho * std::tanh(y) + gam * std::tanh(z[1]);
    };
    g.terminal[0] = [](const Vec& x) { return std::tanh((x[0] + x[1]) / std::sqrt(2.0)); };
    g.terminal[1] = [a](const Vec& x) {
        const double dx = x[0] - a;
        return std::exp(-0.5 * (dx * dx + x[1] * x[1]));
    };
    g.lipschitz = std::max({1.0, std::abs(rho), std::abs(gam)});
    g.bound = std::max(1.0, std::abs(kap) + std::abs(rho) + std::abs(gam));
    return g;
}

std::vector<ModelFamily> make_registry() {
    const ParamMap common{{"T", 1.0}, {"box", 5.0}};
    auto with = [&](ParamMap extra) {
        ParamMap p = common;
        p.insert(extra.begin(), extra.end());
        return p;
    };
    return {
        {"zero", "all coefficients identically zero", with({}), build_zero},
        {"control-free", "OU-type dynamics, x-only running costs, controls ignored",
         with({{"theta", 0.5}, {"sigma", 1.0}, {"a1", 0.5}, {"a2", 0.5}}), build_control_free},
        {"separable", "additively separable controls in drift and drivers (dyadic coefficients)",
         with({{"gain_u", 0.5}, {"gain_v", 0.25}, {"cost", 0.125}, {"sigma", 1.0}}), build_separable},
        {"pennies", "matching-pennies coupling c*u*v in the drivers", with({{"coupling", 1.0}}), build_pennies},
        {"antisymmetric", "zero-sum game with nonlinear (y,z) driver terms",
         with({{"theta", 0.25}, {"sigma", 1.0}, {"lambda", 0.5}, {"kappa", 0.125}, {"mu", 0.25},
               {"rho", 0.25}, {"gamma", 0.125}}),
         build_antisymmetric},
        {"bilinear-1d", "drift gain*(u-v), nonzero-sum terminal payoffs, nonlinear drivers",
         with({{"gain", 0.5}, {"sigma", 1.0}, {"kappa", 0.125}, {"rho", 0.25}, {"gamma", 0.125},
               {"target", 0.5}}),
         build_bilinear_1d},
        {"bilinear-2d", "two-dimensional analogue of bilinear-1d",
         ParamMap{{"T", 1.0}, {"box", 4.0}, {"gain", 0.5}, {"sigma", 1.0}, {"kappa", 0.125}, {"rho", 0.25},
                  {"gamma", 0.125}, {"target", 0.5}},
         build_bilinear_2d},
    };
}

}  // namespace

GameSpec ModelFamily::instantiate(const ParamMap& overrides) const {
    ParamMap params = defaults;
    for (const auto& [name, value] : overrides) {
        auto it = params.find(name);
        if (it == params.end()) {
            std::string known;
            for (const auto& [k, _] : defaults) known += (known.empty() ? "" : ", ") + k;
            throw UsageError("family '" + family_id + "' has no parameter '" + name + "' (known: " + known + ")");
        }
        if (!std::isfinite(value)) throw UsageError("parameter '" + name + "' is not finite");
        it->second = value;
    }
    if (!(params.at("T") > 0.0)) throw UsageError("parameter 'T' must be positive");
    if (!(params.at("box") > 0.0)) throw UsageError("parameter 'box' must be positive");
    GameSpec spec = build(params);
    spec.check_shape();
    return spec;
}

const std::vector<ModelFamily>& builtin_families() {
    static const std::vector<ModelFamily> registry = make_registry();
    return registry;
}

const ModelFamily& find_family(const std::string& family_id) {
    for (const auto& fam : builtin_families()) {
        if (fam.family_id == family_id) return fam;
    }
    std::string known;
    for (const auto& fam : builtin_families()) known += (known.empty() ? "" : ", ") + fam.family_id;
    throw UsageError("unknown model family '" + family_id + "' (known: " + known + ")");
}

GameSpec make_game(const std::string& family_id, const ParamMap& overrides) {
    return find_family(family_id).instantiate(overrides);
}

}  // namespace bsdegame
