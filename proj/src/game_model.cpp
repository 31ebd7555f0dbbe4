#include "bsdegame/game_model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace bsdegame {

ControlSet::ControlSet(std::vector<Vec> points, std::vector<std::string> labels)
    : points_(std::move(points)), labels_(std::move(labels)) {
    if (points_.empty()) throw UsageError("control set must be nonempty");
    const std::size_t dim = points_.front().size();
    if (dim == 0) throw UsageError("control points must have positive dimension");
    for (std::size_t i = 0; i < points_.size(); ++i) {
        if (points_[i].size() != dim) throw UsageError("control points have mixed dimensions");
        if (!points_[i].all_finite()) throw UsageError("control point is not finite");
        for (std::size_t k = 0; k < i; ++k) {
            if (points_[k] == points_[i]) {
                throw UsageError("duplicate control point at indices " + std::to_string(k) + " and " +
                                 std::to_string(i));
            }
        }
    }
    if (labels_.empty()) {
        for (std::size_t i = 0; i < points_.size(); ++i) labels_.push_back("c" + std::to_string(i));
    }
    if (labels_.size() != points_.size()) throw UsageError("control labels and points differ in count");
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        if (labels_[i].empty()) throw UsageError("empty control label");
        for (std::size_t k = 0; k < i; ++k) {
            if (labels_[k] == labels_[i]) throw UsageError("duplicate control label '" + labels_[i] + "'");
        }
    }
}

std::size_t ControlSet::index_of(const std::string& label) const {
    auto it = std::find(labels_.begin(), labels_.end(), label);
    if (it == labels_.end()) throw UsageError("unknown control label '" + label + "'");
    return static_cast<std::size_t>(it - labels_.begin());
}

ControlSet ControlSet::scalar(std::initializer_list<double> values) {
    std::vector<Vec> pts;
    for (double v : values) pts.push_back(Vec{v});
    return ControlSet(std::move(pts));
}

bool Box::contains(const Vec& x) const noexcept {
    for (std::size_t i = 0; i < x.size() && i < lo.size(); ++i) {
        if (x[i] < lo[i] || x[i] > hi[i]) return false;
    }
    return true;
}

void GameSpec::check_shape() const {
    if (state_dim == 0 || state_dim > kMaxStateDim) {
        throw UsageError("state_dim must be in [1, " + std::to_string(kMaxStateDim) + "]");
    }
    if (noise_dim == 0 || noise_dim > kMaxStateDim) {
        throw UsageError("noise_dim must be in [1, " + std::to_string(kMaxStateDim) + "]");
    }
    if (!(horizon > 0.0)) throw UsageError("horizon T must be positive");
    if (!(lipschitz > 0.0)) throw UsageError("Lipschitz constant L must be positive");
    if (!(bound > 0.0)) throw UsageError("bound M must be positive");
    if (U.size() == 0 || V.size() == 0) throw UsageError("control sets must be nonempty");
    if (!drift || !diffusion || !driver[0] || !driver[1] || !terminal[0] || !terminal[1]) {
        throw UsageError("all six coefficient functions must be provided");
    }
    if (state_box.lo.size() != state_dim || state_box.hi.size() != state_dim) {
        throw UsageError("state_box must have one interval per state coordinate");
    }
    for (std::size_t i = 0; i < state_dim; ++i) {
        if (!(state_box.lo[i] < state_box.hi[i])) throw UsageError("state_box requires lo < hi");
    }
}

Dynamics eval_dynamics(const GameSpec& spec, double t, const Vec& x, std::size_t u_idx,
                       std::size_t v_idx) {
    if (u_idx >= spec.U.size() || v_idx >= spec.V.size()) {
        throw UsageError("control index out of range: (" + std::to_string(u_idx) + ", " +
                         std::to_string(v_idx) + ")");
    }
    const Vec& u = spec.U.point(u_idx);
    const Vec& v = spec.V.point(v_idx);
    return {spec.drift(t, x, u, v), spec.diffusion(t, x, u, v)};
}

double eval_driver(const GameSpec& spec, Player j, double t, const Vec& x, double y, const Vec& z,
                   std::size_t u_idx, std::size_t v_idx) {
    if (u_idx >= spec.U.size() || v_idx >= spec.V.size()) {
        throw UsageError("control index out of range: (" + std::to_string(u_idx) + ", " +
                         std::to_string(v_idx) + ")");
    }
    return spec.driver[player_index(j)](t, x, y, z, spec.U.point(u_idx), spec.V.point(v_idx));
}

double eval_terminal(const GameSpec& spec, Player j, const Vec& x) {
    return spec.terminal[player_index(j)](x);
}

const AssumptionCheck& ValidationReport::check(const std::string& id) const {
    for (const auto& c : checks) {
        if (c.id == id) return c;
    }
    throw UsageError("no assumption check with id '" + id + "'");
}

namespace {

std::string describe_point(double t, const Vec& x, const Vec& u, const Vec& v) {
    std::ostringstream os;
    os << "t=" << t << " x=(";
    for (std::size_t i = 0; i < x.size(); ++i) os << (i ? "," : "") << x[i];
    os << ") u=(";
    for (std::size_t i = 0; i < u.size(); ++i) os << (i ? "," : "") << u[i];
    os << ") v=(";
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    os << ")";
    return os.str();
}

// Wraps coefficient calls so failures name the coefficient and the point.
template <typename F>
auto guarded(const char* name, const std::string& where, F&& f) {
    try {
        auto value = f();
        bool finite = true;
        if constexpr (std::is_same_v<decltype(value), double>) {
            finite = std::isfinite(value);
        } else {
            finite = value.all_finite();
        }
        if (!finite) {
            throw EvaluationError(std::string("coefficient '") + name + "' is not finite at " + where);
        }
        return value;
    } catch (const EvaluationError&) {
        throw;
    } catch (const std::exception& e) {
        throw EvaluationError(std::string("coefficient '") + name + "' failed at " + where + ": " +
                              e.what());
    }
}

double mat_distance(const Mat& a, const Mat& b) { return (a - b).norm(); }

struct SamplePoint {
    double t;
    Vec x;
    double y;
    Vec z;
};

}  // namespace

ValidationReport validate_spec(const GameSpec& spec, std::size_t samples, std::uint64_t seed) {
    if (samples == 0) throw UsageError("validate_spec: samples must be >= 1");
    spec.check_shape();

    const std::size_t n = spec.state_dim;
    const std::size_t d = spec.noise_dim;
    const double T = spec.horizon;
    const double y_range = spec.bound * (2.0 + T);
    const double t_step = 1e-9 * T;

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    auto random_point = [&]() {
        SamplePoint p{unit(rng) * T, Vec(n), (2.0 * unit(rng) - 1.0) * y_range, Vec(d)};
        for (std::size_t i = 0; i < n; ++i) {
            p.x[i] = spec.state_box.lo[i] + unit(rng) * (spec.state_box.hi[i] - spec.state_box.lo[i]);
        }
        for (std::size_t i = 0; i < d; ++i) p.z[i] = (2.0 * unit(rng) - 1.0) * y_range;
        return p;
    };

    std::vector<SamplePoint> bases;
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
        for (double t : {0.0, T}) {
            SamplePoint p{t, Vec(n), (mask & 1u) ? y_range : -y_range, Vec(d, (mask & 1u) ? -y_range : y_range)};
            for (std::size_t i = 0; i < n; ++i) {
                p.x[i] = (mask >> i) & 1u ? spec.state_box.hi[i] : spec.state_box.lo[i];
            }
            bases.push_back(p);
        }
    }
    for (std::size_t s = 0; s < samples; ++s) bases.push_back(random_point());

    double lip_dyn = 0.0, cont_dyn = 0.0, box_bound = 0.0;
    std::array<double, 2> lip_f{0.0, 0.0}, lip_phi{0.0, 0.0}, sup_f{0.0, 0.0}, sup_phi{0.0, 0.0};
    std::array<double, 2> cont_f{0.0, 0.0};

    for (const auto& base : bases) {
        // Two partners per base point: a nearby perturbation and an independent far point.
        SamplePoint near = base;
        const double scale = std::pow(10.0, -6.0 + 5.0 * unit(rng));
        for (std::size_t i = 0; i < n; ++i) {
            const double width = spec.state_box.hi[i] - spec.state_box.lo[i];
            near.x[i] += scale * width * (2.0 * unit(rng) - 1.0);
        }
        near.y += scale * y_range * (2.0 * unit(rng) - 1.0);
        for (std::size_t i = 0; i < d; ++i) near.z[i] += scale * y_range * (2.0 * unit(rng) - 1.0);
        SamplePoint far = random_point();
        far.t = base.t;

        for (std::size_t j = 0; j < 2; ++j) {
            const auto& phi = spec.terminal[j];
            const char* name = j == 0 ? "terminal_1" : "terminal_2";
            const double p0 = guarded(name, describe_point(base.t, base.x, Vec{}, Vec{}),
                                      [&] { return phi(base.x); });
            sup_phi[j] = std::max(sup_phi[j], std::abs(p0));
            for (const SamplePoint* other : {&near, &far}) {
                const double dx = (base.x - other->x).norm();
                if (dx <= 0.0) continue;
                const double p1 = guarded(name, describe_point(base.t, other->x, Vec{}, Vec{}),
                                          [&] { return phi(other->x); });
                lip_phi[j] = std::max(lip_phi[j], std::abs(p0 - p1) / dx);
            }
        }

        for (std::size_t ui = 0; ui < spec.U.size(); ++ui) {
            for (std::size_t vi = 0; vi < spec.V.size(); ++vi) {
                const Vec& u = spec.U.point(ui);
                const Vec& v = spec.V.point(vi);
                const std::string where = describe_point(base.t, base.x, u, v);
                const Vec b0 = guarded("drift", where, [&] { return spec.drift(base.t, base.x, u, v); });
                const Mat s0 = guarded("diffusion", where, [&] { return spec.diffusion(base.t, base.x, u, v); });
                if (b0.size() != n || s0.rows() != n || s0.cols() != d) {
                    throw EvaluationError("drift/diffusion returned wrong shape at " + where);
                }
                box_bound = std::max({box_bound, b0.norm(), s0.norm()});

                const double t_shift = base.t + t_step <= T ? base.t + t_step : base.t - t_step;
                const Vec bt = guarded("drift", where, [&] { return spec.drift(t_shift, base.x, u, v); });
                const Mat st = guarded("diffusion", where, [&] { return spec.diffusion(t_shift, base.x, u, v); });
                cont_dyn = std::max(cont_dyn, (b0 - bt).norm() + mat_distance(s0, st));

                for (const SamplePoint* other : {&near, &far}) {
                    const double dx = (base.x - other->x).norm();
                    if (dx <= 0.0) continue;
                    const std::string w2 = describe_point(base.t, other->x, u, v);
                    const Vec b1 = guarded("drift", w2, [&] { return spec.drift(base.t, other->x, u, v); });
                    const Mat s1 = guarded("diffusion", w2, [&] { return spec.diffusion(base.t, other->x, u, v); });
                    lip_dyn = std::max(lip_dyn, ((b0 - b1).norm() + mat_distance(s0, s1)) / dx);
                }

                for (std::size_t j = 0; j < 2; ++j) {
                    const auto& f = spec.driver[j];
                    const char* name = j == 0 ? "driver_1" : "driver_2";
                    const double f0 = guarded(name, where, [&] { return f(base.t, base.x, base.y, base.z, u, v); });
                    sup_f[j] = std::max(sup_f[j], std::abs(f0));
                    const double ft = guarded(name, where, [&] { return f(t_shift, base.x, base.y, base.z, u, v); });
                    cont_f[j] = std::max(cont_f[j], std::abs(f0 - ft));
                    for (const SamplePoint* other : {&near, &far}) {
                        const double dist = (base.x - other->x).norm() + std::abs(base.y - other->y) +
                                            (base.z - other->z).norm();
                        if (dist <= 0.0) continue;
                        const std::string w2 = describe_point(base.t, other->x, u, v);
                        const double f1 = guarded(name, w2, [&] {
                            return f(base.t, other->x, other->y, other->z, u, v);
                        });
                        sup_f[j] = std::max(sup_f[j], std::abs(f1));
                        lip_f[j] = std::max(lip_f[j], std::abs(f0 - f1) / dist);
                    }
                }
            }
        }
    }

    const double L = spec.lipschitz;
    const double M = spec.bound;
    const double tol = 1.0 + kValidationSlack;
    // Modulus of continuity in t at a 1e-9*T step; any continuous coefficient is far below this.
    const double cont_tol = 1e-4;

    ValidationReport report;
    report.samples = samples;
    report.seed = seed;
    auto add = [&](std::string id, std::string desc, double observed, double declared, bool informational,
                   bool passed) {
        report.checks.push_back({std::move(id), std::move(desc), observed, declared, passed, informational});
        if (!passed) report.all_passed = false;
    };
    add("H3.1", "b, sigma continuous in t (sampled modulus)", cont_dyn, cont_tol, false, cont_dyn <= cont_tol);
    add("H3.2", "b, sigma Lipschitz in x", lip_dyn, L, false, lip_dyn <= L * tol);
    add("H3.3", "f_j continuous in t (sampled modulus)", std::max(cont_f[0], cont_f[1]), cont_tol, false,
        std::max(cont_f[0], cont_f[1]) <= cont_tol);
    add("H3.4", "f_j Lipschitz in (x,y,z), Phi_j Lipschitz in x",
        std::max({lip_f[0], lip_f[1], lip_phi[0], lip_phi[1]}), L, false,
        std::max({lip_f[0], lip_f[1], lip_phi[0], lip_phi[1]}) <= L * tol);
    add("H3.5", "f_j, Phi_j bounded", std::max({sup_f[0], sup_f[1], sup_phi[0], sup_phi[1]}), M, false,
        std::max({sup_f[0], sup_f[1], sup_phi[0], sup_phi[1]}) <= M * tol);
    add("box-bound", "sup |b| + |sigma| on the state box", box_bound, 0.0, true, true);
    return report;
}

}  // namespace bsdegame
