#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "bsdegame/types.hpp"

namespace bsdegame {

/// Finite, ordered discretization of a compact control space.
///
/// Indices are stable identifiers: feedback tables, strategies and CSV output
/// all refer to controls by position in this list.
class ControlSet {
public:
    ControlSet() = default;
    /// Throws UsageError when empty, when dimensions disagree, or when a point
    /// or label is repeated. Missing labels default to "c<index>".
    ControlSet(std::vector<Vec> points, std::vector<std::string> labels = {});

    std::size_t size() const noexcept { return points_.size(); }
    std::size_t dim() const noexcept { return points_.empty() ? 0 : points_.front().size(); }
    const Vec& point(std::size_t i) const { return points_.at(i); }
    const std::string& label(std::size_t i) const { return labels_.at(i); }
    const std::vector<Vec>& points() const noexcept { return points_; }
    const std::vector<std::string>& labels() const noexcept { return labels_; }

    /// Index of the given label; throws UsageError if absent.
    std::size_t index_of(const std::string& label) const;

    /// Convenience for scalar control grids.
    static ControlSet scalar(std::initializer_list<double> values);

private:
    std::vector<Vec> points_;
    std::vector<std::string> labels_;
};

/// Axis-aligned box [lo, hi] per state coordinate.
struct Box {
    std::vector<double> lo;
    std::vector<double> hi;

    bool contains(const Vec& x) const noexcept;
};

using ParamMap = std::map<std::string, double>;

using DriftFn = std::function<Vec(double t, const Vec& x, const Vec& u, const Vec& v)>;
using DiffusionFn = std::function<Mat(double t, const Vec& x, const Vec& u, const Vec& v)>;
using DriverFn =
    std::function<double(double t, const Vec& x, double y, const Vec& z, const Vec& u, const Vec& v)>;
using TerminalFn = std::function<double(const Vec& x)>;

/// Complete description of a two-player game with BSDE cost functionals.
///
/// Immutable once built; every evaluation goes through const calls so one
/// instance may be shared by concurrent workers.
struct GameSpec {
    std::size_t state_dim = 1;
    std::size_t noise_dim = 1;
    double horizon = 1.0;
    ControlSet U;
    ControlSet V;
    DriftFn drift;
    DiffusionFn diffusion;
    std::array<DriverFn, 2> driver;
    std::array<TerminalFn, 2> terminal;
    double lipschitz = 1.0;  ///< declared L
    double bound = 1.0;      ///< declared M, uniform bound on f_j and Phi_j
    Box state_box;           ///< region sampled by validation and covered by value grids
    std::string family_id = "custom";
    ParamMap parameters;

    /// Shape checks only (dimensions, presence of callables, positivity).
    void check_shape() const;
};

struct Dynamics {
    Vec drift;
    Mat diffusion;
};

Dynamics eval_dynamics(const GameSpec& spec, double t, const Vec& x, std::size_t u_idx,
                       std::size_t v_idx);
double eval_driver(const GameSpec& spec, Player j, double t, const Vec& x, double y, const Vec& z,
                   std::size_t u_idx, std::size_t v_idx);
double eval_terminal(const GameSpec& spec, Player j, const Vec& x);

/// A coefficient threw or returned a non-finite value at a sampled point.
class EvaluationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct AssumptionCheck {
    std::string id;           ///< H3.1 ... H3.5, or "box-bound"
    std::string description;
    double observed = 0.0;    ///< worst sampled quotient / bound
    double declared = 0.0;    ///< constant it is compared against (0 if informational)
    bool passed = true;
    bool informational = false;
};

struct ValidationReport {
    std::vector<AssumptionCheck> checks;
    std::size_t samples = 0;
    std::uint64_t seed = 0;
    bool all_passed = true;
    std::vector<std::string> warnings;

    const AssumptionCheck& check(const std::string& id) const;
};

/// Relative slack allowed when comparing sampled quotients with declared constants.
inline constexpr double kValidationSlack = 1e-6;

/// Sampled audit of the regularity and boundedness assumptions.
///
/// Base points are pseudo-random inside the state box together with its
/// corners; each is paired with a nearby and a far perturbation. Lipschitz
/// quotients use |x-x'| + |y-y'| + |z-z'| in the denominator for the drivers.
ValidationReport validate_spec(const GameSpec& spec, std::size_t samples, std::uint64_t seed);

}  // namespace bsdegame
