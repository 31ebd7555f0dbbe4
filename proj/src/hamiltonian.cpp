#include "bsdegame/hamiltonian.hpp"

#include <cmath>
#include <limits>

namespace bsdegame {

void HamiltonianQuery::check(const GameSpec& spec) const {
    if (x.size() != spec.state_dim || p.size() != spec.state_dim) {
        throw UsageError("Hamiltonian query: x and p must have the state dimension");
    }
    if (A.rows() != spec.state_dim || A.cols() != spec.state_dim) {
        throw UsageError("Hamiltonian query: A must be n x n");
    }
    for (std::size_t r = 0; r < A.rows(); ++r) {
        for (std::size_t c = 0; c < r; ++c) {
            if (std::abs(A(r, c) - A(c, r)) > 1e-12) throw UsageError("Hamiltonian query: A is not symmetric");
        }
    }
}

double h_value(const GameSpec& spec, const HamiltonianQuery& q, std::size_t u_idx, std::size_t v_idx) {
    const Dynamics dyn = eval_dynamics(spec, q.t, q.x, u_idx, v_idx);
    const Mat& s = dyn.diffusion;
    // tr(s s^T A) = sum_{r,c} (s s^T)_{rc} A_{cr}
    double trace = 0.0;
    for (std::size_t r = 0; r < s.rows(); ++r) {
        for (std::size_t c = 0; c < s.rows(); ++c) {
            double ssT = 0.0;
            for (std::size_t k = 0; k < s.cols(); ++k) ssT += s(r, k) * s(c, k);
            trace += ssT * q.A(c, r);
        }
    }
    double inner = 0.0;
    for (std::size_t r = 0; r < q.p.size(); ++r) inner += q.p[r] * dyn.drift[r];
    const Vec z = s.apply_transpose(q.p);
    return 0.5 * trace + inner + eval_driver(spec, q.j, q.t, q.x, q.y, z, u_idx, v_idx);
}

IsaacsGap isaacs_gap(const GameSpec& spec, const HamiltonianQuery& q) {
    q.check(spec);
    const std::size_t nu = spec.U.size(), nv = spec.V.size();
    std::vector<double> h(nu * nv);
    for (std::size_t u = 0; u < nu; ++u) {
        for (std::size_t v = 0; v < nv; ++v) h[u * nv + v] = h_value(spec, q, u, v);
    }
    IsaacsGap g;
    g.lower = -std::numeric_limits<double>::infinity();
    for (std::size_t u = 0; u < nu; ++u) {
        std::size_t best_v = 0;
        for (std::size_t v = 1; v < nv; ++v) {
            if (h[u * nv + v] < h[u * nv + best_v]) best_v = v;
        }
        if (h[u * nv + best_v] > g.lower) {
            g.lower = h[u * nv + best_v];
            g.lower_u = u;
            g.lower_v = best_v;
        }
    }
    g.upper = std::numeric_limits<double>::infinity();
    for (std::size_t v = 0; v < nv; ++v) {
        std::size_t best_u = 0;
        for (std::size_t u = 1; u < nu; ++u) {
            if (h[u * nv + v] > h[best_u * nv + v]) best_u = u;
        }
        if (h[best_u * nv + v] < g.upper) {
            g.upper = h[best_u * nv + v];
            g.upper_v = v;
            g.upper_u = best_u;
        }
    }
    g.gap = g.upper - g.lower;
    return g;
}

QuerySampler default_query_sampler() {
    return [](std::mt19937_64& rng, const GameSpec& spec) {
        std::uniform_real_distribution<double> unit(-1.0, 1.0);
        const auto snap = [](double v) { return std::ldexp(std::round(std::ldexp(v, 12)), -12); };
        const std::size_t n = spec.state_dim;
        HamiltonianQuery q;
        q.t = snap(0.5 * spec.horizon * (1.0 + unit(rng)));
        q.t = std::clamp(q.t, 0.0, spec.horizon);
        q.x = Vec(n);
        for (std::size_t a = 0; a < n; ++a) {
            const double lo = spec.state_box.lo.at(a), hi = spec.state_box.hi.at(a);
            q.x[a] = std::clamp(snap(lo + 0.5 * (hi - lo) * (1.0 + unit(rng))), lo, hi);
        }
        q.y = snap(spec.bound * (1.0 + spec.horizon) * unit(rng));
        q.p = Vec(n);
        for (std::size_t a = 0; a < n; ++a) q.p[a] = snap(2.0 * unit(rng));
        q.A = Mat(n, n);
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t c = r; c < n; ++c) q.A(r, c) = q.A(c, r) = snap(2.0 * unit(rng));
        }
        q.j = unit(rng) < 0.0 ? Player::First : Player::Second;
        return q;
    };
}

IsaacsAudit audit_isaacs(const GameSpec& spec, const QuerySampler& sampler, std::size_t N, std::uint64_t seed) {
    if (N == 0) throw UsageError("audit_isaacs: N must be >= 1");
    if (!sampler) throw UsageError("audit_isaacs: sampler is empty");
    IsaacsAudit audit;
    audit.queries = N;
    audit.seed = seed;
    std::mt19937_64 rng(seed);
    for (std::size_t k = 0; k < N; ++k) {
        const HamiltonianQuery q = sampler(rng, spec);
        q.check(spec);
        const IsaacsGap g = isaacs_gap(spec, q);
        audit.max_gap = std::max(audit.max_gap, g.gap);
        if (g.gap > audit.tolerance && audit.failing.size() < 16) {
            audit.failing.push_back(q);
            audit.failing_gaps.push_back(g.gap);
        }
    }
    audit.flagged = audit.max_gap > audit.tolerance;
    return audit;
}

}  // namespace bsdegame
