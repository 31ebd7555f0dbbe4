#include "bsdegame/quadrature.hpp"

#include <cmath>
#include <numbers>

namespace bsdegame {

// Newton iteration on orthonormal Hermite polynomials with the usual asymptotic
// starting guesses, then rescaled from weight exp(-x^2) to the standard normal.
void GaussHermite::rule_1d(std::size_t order, std::vector<double>& nodes, std::vector<double>& weights) {
    if (order == 0 || order > 64) throw UsageError("Gauss-Hermite order must be in [1, 64]");
    const int n = static_cast<int>(order);
    std::vector<double> x(order), w(order);
    const double pim4 = 1.0 / std::pow(std::numbers::pi, 0.25);
    const int m = (n + 1) / 2;
    double z = 0.0;
    for (int i = 0; i < m; ++i) {
        if (i == 0) {
            z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
        } else if (i == 1) {
            z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
        } else if (i == 2) {
            z = 1.86 * z - 0.86 * x[0];
        } else if (i == 3) {
            z = 1.91 * z - 0.91 * x[1];
        } else {
            z = 2.0 * z - x[static_cast<std::size_t>(i - 2)];
        }
        double pp = 0.0;
        int its = 0;
        for (; its < 100; ++its) {
            double p1 = pim4, p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            const double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) break;
        }
        if (its == 100) throw NumericalError("Gauss-Hermite root iteration did not converge");
        x[static_cast<std::size_t>(i)] = z;
        x[static_cast<std::size_t>(n - 1 - i)] = -z;
        w[static_cast<std::size_t>(i)] = 2.0 / (pp * pp);
        w[static_cast<std::size_t>(n - 1 - i)] = w[static_cast<std::size_t>(i)];
    }
    if (n % 2 == 1) x[static_cast<std::size_t>(m - 1)] = 0.0;

    nodes.resize(order);
    weights.resize(order);
    const double inv_sqrt_pi = 1.0 / std::sqrt(std::numbers::pi);
    // Ascending order of nodes.
    for (std::size_t k = 0; k < order; ++k) {
        nodes[k] = std::sqrt(2.0) * x[order - 1 - k];
        weights[k] = w[order - 1 - k] * inv_sqrt_pi;
    }
    // Enforce exact antisymmetry so odd moments vanish to rounding.
    for (std::size_t k = 0; k < order / 2; ++k) {
        const double a = 0.5 * (nodes[order - 1 - k] - nodes[k]);
        nodes[k] = -a;
        nodes[order - 1 - k] = a;
        const double wa = 0.5 * (weights[k] + weights[order - 1 - k]);
        weights[k] = weights[order - 1 - k] = wa;
    }
}

GaussHermite::GaussHermite(std::size_t order, std::size_t dim) : order_(order), dim_(dim) {
    if (dim == 0 || dim > kMaxStateDim) throw UsageError("Gauss-Hermite dimension must be 1 or 2");
    std::vector<double> x, w;
    rule_1d(order, x, w);
    std::size_t total = 1;
    for (std::size_t a = 0; a < dim; ++a) total *= order;
    nodes_.reserve(total);
    weights_.reserve(total);
    for (std::size_t flat = 0; flat < total; ++flat) {
        Vec node(dim);
        double weight = 1.0;
        std::size_t rest = flat;
        for (std::size_t a = dim; a-- > 0;) {
            const std::size_t i = rest % order;
            rest /= order;
            node[a] = x[i];
            weight *= w[i];
        }
        nodes_.push_back(node);
        weights_.push_back(weight);
    }
}

}  // namespace bsdegame
