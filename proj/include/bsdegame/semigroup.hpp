#pragma once

#include <string>
#include <vector>

#include "bsdegame/bsde_solver.hpp"

namespace bsdegame {

/// Markov terminal functional eta = h(X_s) given by its values on grid nodes.
struct TerminalField {
    StateGrid grid;
    std::vector<double> values;
    std::string label;

    static TerminalField from_function(const StateGrid& grid, const TerminalFn& h, std::string label);
};

/// Backward semigroup G_{s1,s2}[eta] on the lattice under a feedback table.
///
/// s1 and s2 are knot indices of `partition`. The recursion is the one in
/// solve_markov with driver f_j and terminal eta at s2. Throws UsageError on
/// grid mismatch or s1 > s2.
TerminalField apply(const GameSpec& spec, Player j, const FeedbackTable& feedback, std::size_t s1, std::size_t s2,
                    const TerminalField& eta, const TimePartition& partition, const StateGrid& grid,
                    const SchemeOptions& opts = {});

/// max over nodes of |G_{s1,s3}[eta] - G_{s1,s2}[G_{s2,s3}[eta]]|.
double flow_check(const GameSpec& spec, Player j, const FeedbackTable& feedback, std::size_t s1, std::size_t s2,
                  std::size_t s3, const TerminalField& eta, const TimePartition& partition, const StateGrid& grid,
                  const SchemeOptions& opts = {});

/// Forward form for drivers that depend on (t, x) only:
/// E[eta(X_s2)] + E[sum_i f(t_i, X_i) dt_i] under the lattice law from each node.
///
/// Agrees with apply() to rounding when f_j ignores y and z.
TerminalField linear_reduction(const GameSpec& spec, Player j, const FeedbackTable& feedback, std::size_t s1,
                               std::size_t s2, const TerminalField& eta, const TimePartition& partition,
                               const StateGrid& grid, const SchemeOptions& opts = {});

}  // namespace bsdegame
