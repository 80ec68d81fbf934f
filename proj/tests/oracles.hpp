// Independent reference computations used by the tests. Nothing here calls
// into the lattice solver; recursion runs over the full binary path tree.
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

namespace oracle {

inline long double binomial(int n, int k) {
    long double r = 1.0L;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

/// E[X_t | node (s, j)] by summing over the binomial distribution of up-moves.
template <class F>
double path_expectation(int s, int j, int t, F&& terminal) {
    const int h = t - s;
    long double sum = 0.0L;
    for (int m = 0; m <= h; ++m) sum += binomial(h, m) * terminal(t, j + m);
    return static_cast<double>(sum / std::ldexp(1.0L, h));
}

/// Exact path count identity sum_j C(n, j) = 2^n in integer arithmetic.
inline bool path_measure_is_one(int n) {
    std::uint64_t total = 0;
    std::uint64_t c = 1;
    for (int j = 0; j <= n; ++j) {
        total += c;
        c = c * static_cast<std::uint64_t>(n - j) / static_cast<std::uint64_t>(j + 1);
    }
    return total == (std::uint64_t{1} << n);
}

/// Root of y = e + g(y) dt + c by bisection on a bracket; independent of the solver's iteration.
inline double implicit_step(const std::function<double(double)>& g, double e, double c, double dt) {
    auto h = [&](double y) { return y - e - g(y) * dt - c * dt; };
    double lo = e - 1.0, hi = e + 1.0;
    while (h(lo) > 0.0) lo -= 2.0 * (hi - lo);
    while (h(hi) < 0.0) hi += 2.0 * (hi - lo);
    for (int i = 0; i < 300; ++i) {
        const double mid = 0.5 * (lo + hi);
        (h(mid) > 0.0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

using Driver = std::function<double(double t, double y, double z)>;
using NodeFn = std::function<double(int k, int up_moves)>;

/// Backward recursion over all 2^N paths (no recombination). Returns Y at the root.
/// `stop(k, up_moves)` marks nodes where the value is frozen to the terminal.
inline double path_tree_bsde(const Driver& g, double horizon, int steps, const NodeFn& terminal,
                             const NodeFn& gamma,
                             const std::function<bool(int, int)>& stop = nullptr) {
    const double dt = horizon / steps;
    const double sq = std::sqrt(dt);
    std::function<double(int, int)> value = [&](int k, int up) -> double {
        if (k == steps || (stop && stop(k, up))) return terminal(k, up);
        const double a = value(k + 1, up + 1);
        const double b = value(k + 1, up);
        const double e = 0.5 * (a + b);
        const double z = (a - b) / (2.0 * sq);
        return implicit_step([&](double y) { return g(k * dt, y, z); }, e, gamma(k, up), dt);
    };
    return value(0, 0);
}

/// min over a dense square grid of spacing h of g(a, b) + m(|y-a| + |z-b|).
inline double dense_inf_convolution(const std::function<double(double, double)>& g, double m, double y,
                                    double z, double radius, double h) {
    double best = std::numeric_limits<double>::infinity();
    const int n = static_cast<int>(std::lround(2.0 * radius / h));
    for (int i = 0; i <= n; ++i) {
        const double a = -radius + i * h;
        for (int k = 0; k <= n; ++k) {
            const double b = -radius + k * h;
            best = std::min(best, g(a, b) + m * (std::abs(y - a) + std::abs(z - b)));
        }
    }
    return best;
}

/// max over a dense grid in z alone (y-independent g).
inline double dense_sup_convolution_z(const std::function<double(double)>& g, double m, double z,
                                      double radius, double h) {
    double best = -std::numeric_limits<double>::infinity();
    const int n = static_cast<int>(std::lround(2.0 * radius / h));
    for (int k = 0; k <= n; ++k) {
        const double b = -radius + k * h;
        best = std::max(best, g(b) - m * std::abs(z - b));
    }
    return best;
}

}  // namespace oracle
