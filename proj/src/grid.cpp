#include "bsdegame/grid.hpp"

#include <algorithm>
#include <cmath>

namespace bsdegame {

TimePartition::TimePartition(std::vector<double> knots) : knots_(std::move(knots)) {
    if (knots_.size() < 2) throw UsageError("partition needs at least two knots");
    for (std::size_t i = 0; i + 1 < knots_.size(); ++i) {
        if (!std::isfinite(knots_[i]) || !std::isfinite(knots_[i + 1])) {
            throw UsageError("partition knots must be finite");
        }
        if (!(knots_[i] < knots_[i + 1])) throw UsageError("partition knots must be strictly increasing");
        mesh_ = std::max(mesh_, knots_[i + 1] - knots_[i]);
    }
}

TimePartition TimePartition::uniform(double start, double end, std::size_t steps) {
    if (steps == 0) throw UsageError("partition needs at least one step");
    if (!(start < end)) throw UsageError("partition requires start < end");
    std::vector<double> knots(steps + 1);
    for (std::size_t i = 0; i <= steps; ++i) {
        knots[i] = start + (end - start) * static_cast<double>(i) / static_cast<double>(steps);
    }
    knots.back() = end;
    return TimePartition(std::move(knots));
}

TimePartition TimePartition::slice(std::size_t first, std::size_t last) const {
    if (!(first < last) || last >= knots_.size()) throw UsageError("invalid partition slice");
    return TimePartition(std::vector<double>(knots_.begin() + static_cast<std::ptrdiff_t>(first),
                                             knots_.begin() + static_cast<std::ptrdiff_t>(last) + 1));
}

std::string to_string(BoundaryPolicy policy) {
    return policy == BoundaryPolicy::Clamp ? "clamp" : "linear";
}

BoundaryPolicy boundary_policy_from_string(const std::string& name) {
    if (name == "clamp") return BoundaryPolicy::Clamp;
    if (name == "linear") return BoundaryPolicy::Linear;
    throw UsageError("unknown boundary policy '" + name + "' (expected clamp or linear)");
}

StateGrid::StateGrid(std::vector<double> lo, std::vector<double> hi, std::vector<std::size_t> nodes)
    : lo_(std::move(lo)), hi_(std::move(hi)), counts_(std::move(nodes)) {
    if (lo_.empty() || lo_.size() > kMaxStateDim) throw UsageError("grid dimension must be 1 or 2");
    if (hi_.size() != lo_.size() || counts_.size() != lo_.size()) {
        throw UsageError("grid bounds and node counts differ in dimension");
    }
    total_ = 1;
    for (std::size_t a = 0; a < lo_.size(); ++a) {
        if (!(lo_[a] < hi_[a])) throw UsageError("grid requires lo < hi on every axis");
        if (counts_[a] < 3) throw UsageError("grid requires at least 3 nodes per axis");
        step_.push_back((hi_[a] - lo_[a]) / static_cast<double>(counts_[a] - 1));
        total_ *= counts_[a];
    }
}

Vec StateGrid::point(std::size_t node) const {
    Vec x(dim());
    for (std::size_t a = dim(); a-- > 0;) {
        const std::size_t i = node % counts_[a];
        node /= counts_[a];
        x[a] = i + 1 == counts_[a] ? hi_[a] : lo_[a] + step_[a] * static_cast<double>(i);
    }
    return x;
}

std::size_t StateGrid::multi_to_flat(std::span<const std::size_t> idx) const {
    std::size_t flat = 0;
    for (std::size_t a = 0; a < dim(); ++a) flat = flat * counts_[a] + idx[a];
    return flat;
}

std::size_t StateGrid::nearest(const Vec& x) const {
    std::size_t idx[kMaxStateDim]{};
    for (std::size_t a = 0; a < dim(); ++a) {
        const double s = (x[a] - lo_[a]) / step_[a];
        double r = std::floor(s);
        if (s - r > 0.5) r += 1.0;
        r = std::clamp(r, 0.0, static_cast<double>(counts_[a] - 1));
        idx[a] = static_cast<std::size_t>(r);
    }
    return multi_to_flat({idx, dim()});
}

Stencil StateGrid::stencil(const Vec& x, BoundaryPolicy policy) const {
    const std::size_t n = dim();
    std::size_t base[kMaxStateDim]{};
    double frac[kMaxStateDim]{};
    for (std::size_t a = 0; a < n; ++a) {
        double s = (x[a] - lo_[a]) / step_[a];
        const double last = static_cast<double>(counts_[a] - 1);
        if (policy == BoundaryPolicy::Clamp) s = std::clamp(s, 0.0, last);
        double cell = std::floor(s);
        cell = std::clamp(cell, 0.0, last - 1.0);
        base[a] = static_cast<std::size_t>(cell);
        frac[a] = s - cell;
    }
    Stencil st;
    st.count = std::size_t{1} << n;
    for (std::size_t corner = 0; corner < st.count; ++corner) {
        std::size_t idx[kMaxStateDim]{};
        double w = 1.0;
        for (std::size_t a = 0; a < n; ++a) {
            const bool up = (corner >> (n - 1 - a)) & 1u;
            idx[a] = base[a] + (up ? 1 : 0);
            w *= up ? frac[a] : 1.0 - frac[a];
        }
        st.nodes[corner] = multi_to_flat({idx, n});
        st.weights[corner] = w;
    }
    return st;
}

bool StateGrid::contains(const Vec& x) const noexcept {
    for (std::size_t a = 0; a < dim(); ++a) {
        if (x[a] < lo_[a] || x[a] > hi_[a]) return false;
    }
    return true;
}

StateGrid StateGrid::refined() const {
    std::vector<std::size_t> counts;
    for (auto c : counts_) counts.push_back(2 * (c - 1) + 1);
    return StateGrid(lo_, hi_, counts);
}

}  // namespace bsdegame
