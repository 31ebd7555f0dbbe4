#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "bsdegame/game_model.hpp"

namespace bsdegame {

/// Point (t, x, y, p, A) at which a player's Hamiltonian is evaluated.
struct HamiltonianQuery {
    double t = 0.0;
    Vec x;
    double y = 0.0;
    Vec p;
    Mat A;  ///< symmetric
    Player j = Player::First;

    /// Throws UsageError on shape mismatch or when A is not symmetric to 1e-12.
    void check(const GameSpec& spec) const;
};

/// 1/2 tr(sigma sigma^T A) + <p, b> + f_j(t, x, y, sigma^T p, u, v).
double h_value(const GameSpec& spec, const HamiltonianQuery& q, std::size_t u_idx, std::size_t v_idx);

struct IsaacsGap {
    double upper = 0.0;  ///< min_v max_u H
    double lower = 0.0;  ///< max_u min_v H
    double gap = 0.0;    ///< upper - lower
    std::size_t lower_u = 0;  ///< argmax_u of min_v H
    std::size_t lower_v = 0;  ///< argmin_v H(lower_u, v)
    std::size_t upper_v = 0;  ///< argmin_v of max_u H
    std::size_t upper_u = 0;  ///< argmax_u H(u, upper_v)
};

/// Exhaustive max-min / min-max over U x V; ties go to the smallest index.
IsaacsGap isaacs_gap(const GameSpec& spec, const HamiltonianQuery& q);

using QuerySampler = std::function<HamiltonianQuery(std::mt19937_64&, const GameSpec&)>;

/// Uniform queries over the state box, |y| <= M(1+T), |p|, |A_kl| <= 2, both
/// players; coordinates are rounded to multiples of 2^-12.
QuerySampler default_query_sampler();

inline constexpr double kIsaacsTolerance = 1e-8;

struct IsaacsAudit {
    std::size_t queries = 0;
    std::uint64_t seed = 0;
    double max_gap = 0.0;
    double tolerance = kIsaacsTolerance;
    bool flagged = false;                     ///< max_gap > tolerance
    std::vector<HamiltonianQuery> failing;    ///< first failing queries, at most 16
    std::vector<double> failing_gaps;
};

IsaacsAudit audit_isaacs(const GameSpec& spec, const QuerySampler& sampler, std::size_t N, std::uint64_t seed);

}  // namespace bsdegame
