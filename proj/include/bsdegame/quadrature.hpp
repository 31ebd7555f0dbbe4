#pragma once

#include <vector>

#include "bsdegame/types.hpp"

namespace bsdegame {

/// Gauss–Hermite rule for E[g(xi)], xi ~ N(0, I_d), as a tensor product of
/// one-dimensional rules. Weights sum to one.
class GaussHermite {
public:
    GaussHermite(std::size_t order, std::size_t dim);

    std::size_t order() const noexcept { return order_; }
    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return weights_.size(); }
    const Vec& node(std::size_t k) const { return nodes_[k]; }
    double weight(std::size_t k) const { return weights_[k]; }

    /// One-dimensional nodes/weights for the standard normal.
    static void rule_1d(std::size_t order, std::vector<double>& nodes, std::vector<double>& weights);

private:
    std::size_t order_;
    std::size_t dim_;
    std::vector<Vec> nodes_;
    std::vector<double> weights_;
};

}  // namespace bsdegame
