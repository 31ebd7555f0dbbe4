#pragma once

#include <span>
#include <string>
#include <vector>

#include "bsdegame/types.hpp"

namespace bsdegame {

/// Strictly increasing knots t_0 < t_1 < ... < t_n.
class TimePartition {
public:
    TimePartition() = default;
    explicit TimePartition(std::vector<double> knots);

    static TimePartition uniform(double start, double end, std::size_t steps);

    std::size_t steps() const noexcept { return knots_.size() - 1; }
    std::size_t size() const noexcept { return knots_.size(); }
    double knot(std::size_t i) const { return knots_.at(i); }
    double dt(std::size_t i) const { return knots_.at(i + 1) - knots_.at(i); }
    double start() const noexcept { return knots_.front(); }
    double end() const noexcept { return knots_.back(); }
    /// Mesh: largest step.
    double mesh() const noexcept { return mesh_; }
    const std::vector<double>& knots() const noexcept { return knots_; }

    /// Knots first..last (inclusive) as a partition of their own; the doubles are copied bitwise.
    TimePartition slice(std::size_t first, std::size_t last) const;

    friend bool operator==(const TimePartition& a, const TimePartition& b) { return a.knots_ == b.knots_; }

private:
    std::vector<double> knots_;
    double mesh_ = 0.0;
};

/// What to do with evaluation points outside the grid.
enum class BoundaryPolicy {
    Clamp,   ///< project onto the box (constant extrapolation)
    Linear,  ///< extend the boundary cell's multilinear interpolant
};

std::string to_string(BoundaryPolicy policy);
BoundaryPolicy boundary_policy_from_string(const std::string& name);

/// Interpolation stencil: up to 2^n node indices with multilinear weights.
struct Stencil {
    std::size_t count = 0;
    std::size_t nodes[1u << kMaxStateDim]{};
    double weights[1u << kMaxStateDim]{};

    double apply(std::span<const double> values) const noexcept {
        double s = 0.0;
        for (std::size_t k = 0; k < count; ++k) s += weights[k] * values[nodes[k]];
        return s;
    }
};

/// Uniform tensor grid on a box in R^n, n <= 2. Node index is row-major with
/// the last coordinate varying fastest.
class StateGrid {
public:
    StateGrid() = default;
    StateGrid(std::vector<double> lo, std::vector<double> hi, std::vector<std::size_t> nodes);

    static StateGrid uniform_1d(double lo, double hi, std::size_t nodes) {
        return StateGrid({lo}, {hi}, {nodes});
    }

    std::size_t dim() const noexcept { return lo_.size(); }
    std::size_t size() const noexcept { return total_; }
    std::size_t nodes(std::size_t axis) const { return counts_.at(axis); }
    double lo(std::size_t axis) const { return lo_.at(axis); }
    double hi(std::size_t axis) const { return hi_.at(axis); }
    double spacing(std::size_t axis) const { return step_.at(axis); }

    Vec point(std::size_t node) const;
    std::size_t multi_to_flat(std::span<const std::size_t> idx) const;

    /// Node closest to x (coordinates clamped; ties go to the lower node).
    std::size_t nearest(const Vec& x) const;

    Stencil stencil(const Vec& x, BoundaryPolicy policy) const;

    double interpolate(std::span<const double> values, const Vec& x, BoundaryPolicy policy) const {
        return stencil(x, policy).apply(values);
    }

    bool contains(const Vec& x) const noexcept;

    /// Same bounds and counts with each axis refined to 2*(nodes-1)+1.
    StateGrid refined() const;

    friend bool operator==(const StateGrid& a, const StateGrid& b) {
        return a.lo_ == b.lo_ && a.hi_ == b.hi_ && a.counts_ == b.counts_;
    }

private:
    std::vector<double> lo_, hi_, step_;
    std::vector<std::size_t> counts_;
    std::size_t total_ = 0;
};

}  // namespace bsdegame
