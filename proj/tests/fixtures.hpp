#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "bsdegame/families.hpp"
#include "bsdegame/game_model.hpp"
#include "bsdegame/grid.hpp"

namespace fixtures {

using namespace bsdegame;

/// One-dimensional game with caller-supplied coefficients. Controls default to {-1, 0, 1}.
struct Spec1d {
    std::function<double(double t, double x, double u, double v)> b = [](double, double, double, double) { return 0.0; };
    std::function<double(double t, double x, double u, double v)> sigma = [](double, double, double, double) {
        return 0.0;
    };
    std::function<double(double t, double x, double y, double z, double u, double v)> f1 =
        [](double, double, double, double, double, double) { return 0.0; };
    std::function<double(double t, double x, double y, double z, double u, double v)> f2 = f1;
    std::function<double(double x)> phi1 = [](double) { return 0.0; };
    std::function<double(double x)> phi2 = phi1;
    std::vector<double> U{-1.0, 0.0, 1.0};
    std::vector<double> V{-1.0, 0.0, 1.0};
    double T = 1.0;
    double L = 1.0;
    double M = 1.0;
    double box = 5.0;

    GameSpec build() const {
        GameSpec g;
        g.state_dim = 1;
        g.noise_dim = 1;
        g.horizon = T;
        g.state_box = Box{{-box}, {box}};
        std::vector<Vec> up, vp;
        for (double u : U) up.push_back(Vec{u});
        for (double v : V) vp.push_back(Vec{v});
        g.U = ControlSet(up);
        g.V = ControlSet(vp);
        auto bb = b;
        auto ss = sigma;
        g.drift = [bb](double t, const Vec& x, const Vec& u, const Vec& v) { return Vec{bb(t, x[0], u[0], v[0])}; };
        g.diffusion = [ss](double t, const Vec& x, const Vec& u, const Vec& v) {
            return Mat(1, 1, ss(t, x[0], u[0], v[0]));
        };
        auto g1 = f1;
        auto g2 = f2;
        g.driver[0] = [g1](double t, const Vec& x, double y, const Vec& z, const Vec& u, const Vec& v) {
            return g1(t, x[0], y, z[0], u[0], v[0]);
        };
        g.driver[1] = [g2](double t, const Vec& x, double y, const Vec& z, const Vec& u, const Vec& v) {
            return g2(t, x[0], y, z[0], u[0], v[0]);
        };
        auto p1 = phi1;
        auto p2 = phi2;
        g.terminal[0] = [p1](const Vec& x) { return p1(x[0]); };
        g.terminal[1] = [p2](const Vec& x) { return p2(x[0]); };
        g.lipschitz = L;
        g.bound = M;
        return g;
    }
};

inline double unit_sigma(double, double, double, double) { return 1.0; }

/// Standard normal density integrated against h on a fine trapezoid grid.
inline double gaussian_mean(const std::function<double(double)>& h, double mean, double sd) {
    const int n = 20000;
    const double lo = -10.0, hi = 10.0, dz = (hi - lo) / n;
    double s = 0.0;
    for (int k = 0; k <= n; ++k) {
        const double z = lo + k * dz;
        const double w = (k == 0 || k == n) ? 0.5 : 1.0;
        s += w * h(mean + sd * z) * std::exp(-0.5 * z * z);
    }
    return s * dz / std::sqrt(2.0 * M_PI);
}

/// Mean and standard error, summed in index order.
struct Sample {
    double mean = 0.0;
    double se = 0.0;
};

inline Sample sample_of(const std::vector<double>& xs) {
    Sample s;
    const double n = static_cast<double>(xs.size());
    for (double x : xs) s.mean += x;
    s.mean /= n;
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.se = std::sqrt(ss / (n - 1.0) / n);
    return s;
}

}  // namespace fixtures
