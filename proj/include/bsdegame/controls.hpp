#pragma once

#include <vector>

#include "bsdegame/grid.hpp"
#include "bsdegame/types.hpp"

namespace bsdegame {

/// Markov feedback: a control pair for every (step, grid node).
///
/// Off-grid states use the nearest node's entry.
class FeedbackTable {
public:
    FeedbackTable() = default;
    FeedbackTable(std::size_t steps, StateGrid grid, IndexPair fill = {})
        : steps_(steps), grid_(std::move(grid)), entries_(steps * grid_.size(), fill) {}

    /// Same pair everywhere.
    static FeedbackTable constant(std::size_t steps, const StateGrid& grid, IndexPair pair) {
        return FeedbackTable(steps, grid, pair);
    }

    std::size_t steps() const noexcept { return steps_; }
    const StateGrid& grid() const noexcept { return grid_; }

    IndexPair& at(std::size_t step, std::size_t node) { return entries_[step * grid_.size() + node]; }
    const IndexPair& at(std::size_t step, std::size_t node) const {
        return entries_[step * grid_.size() + node];
    }
    IndexPair lookup(std::size_t step, const Vec& x) const { return at(step, grid_.nearest(x)); }

    /// Throws UsageError unless every index is below the given set sizes.
    void check_indices(std::size_t u_count, std::size_t v_count) const {
        for (const auto& e : entries_) {
            if (e.u >= u_count || e.v >= v_count) throw UsageError("feedback table index out of range");
        }
    }

    friend bool operator==(const FeedbackTable& a, const FeedbackTable& b) {
        return a.steps_ == b.steps_ && a.grid_ == b.grid_ && a.entries_ == b.entries_;
    }

private:
    std::size_t steps_ = 0;
    StateGrid grid_;
    std::vector<IndexPair> entries_;
};

/// Open-loop control pair: one (u, v) per partition cell.
struct ControlPair {
    std::vector<std::size_t> u;
    std::vector<std::size_t> v;

    std::size_t cells() const noexcept { return u.size(); }
    friend bool operator==(const ControlPair&, const ControlPair&) = default;
};

}  // namespace bsdegame
