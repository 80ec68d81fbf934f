#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "gbsde/bsde_solver.hpp"
#include "gbsde/errors.hpp"
#include "oracles.hpp"

using namespace gbsde;

namespace {

Process random_terminal(const BinomialTree& tree, int step, std::mt19937_64& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    Process x(tree, step, step);
    for (double& v : x.step(step)) v = u(rng);
    return x;
}

}  // namespace

TEST_CASE("zero driver gives the martingale B") {
    const auto tree = build_tree(1.0, 32);
    const auto B = brownian_process(tree);
    const auto s = solve(tree, make_zero(), B, IntegrandK::zero(), LatticeStoppingTime::deterministic(0, 32));
    for (int k = 0; k < 32; ++k) {
        for (int j = 0; j <= k; ++j) {
            CHECK(s.Y.at(k, j) == doctest::Approx(tree.brownian(k, j)).epsilon(1e-13));
            CHECK(s.Z.at(k, j) == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("deterministic recursions") {
    const auto tree = build_tree(1.0, 64);
    const Process one(tree, 64, 64, 1.0);
    const auto tau = LatticeStoppingTime::deterministic(0, 64);
    const auto s = solve(tree, make_linear(0.5, 0.0, 0.0), one, IntegrandK::zero(), tau);
    CHECK(s.Y.at(0, 0) == doctest::Approx(std::pow(1.0 - 0.5 / 64, -64)).epsilon(1e-13));
    CHECK(std::abs(s.Y.at(0, 0) - std::exp(0.5)) < 0.01);

    const auto k = IntegrandK::from_density(Process(tree, 1.0));
    const auto t = solve(tree, make_zero(), Process(tree, 64, 64, 0.0), k, tau);
    for (int step = 0; step <= 64; ++step) CHECK(t.Y.at(step, step / 2) == doctest::Approx((64 - step) / 64.0));
}

TEST_CASE("nonlinear solve against the full path tree") {
    const auto tree = build_tree(1.0, 10);
    const auto g = make_mu_phi(0.7, Modulus::capped_sqrt(), +1);
    auto terminal = [&](int k, int up) { return std::sin(3.0 * tree.brownian(k, up)) + 0.2; };
    auto gamma = [&](int k, int up) { return 0.1 * std::cos(tree.brownian(k, up)); };
    const Process X = Process::from_function(tree, 10, 10, terminal);
    const Process G = Process::from_function(tree, 0, 10, gamma);
    const auto s = solve(tree, g, X, IntegrandK::from_density(G), LatticeStoppingTime::deterministic(0, 10));
    const double brute = oracle::path_tree_bsde([&](double t, double y, double z) { return g(t, y, z); }, 1.0, 10,
                                                terminal, gamma);
    CHECK(s.Y.at(0, 0) == doctest::Approx(brute).epsilon(1e-11));
}

TEST_CASE("stopped solve against the full path tree") {
    const auto tree = build_tree(1.0, 8);
    const auto tau = hitting_time(tree, 0, 0.7);
    const auto g = make_mu_phi(0.5, Modulus::sqrt(), -1);
    auto terminal = [&](int k, int up) { return tree.brownian(k, up) * tree.brownian(k, up); };
    const Process X = Process::from_function(tree, 0, 8, terminal);
    const auto s = solve(tree, g, X, IntegrandK::zero(), tau);
    const double brute = oracle::path_tree_bsde([&](double t, double y, double z) { return g(t, y, z); }, 1.0, 8,
                                                terminal, [](int, int) { return 0.0; },
                                                [&](int k, int up) { return tau.stopped(k, up); });
    CHECK(s.Y.at(0, 0) == doctest::Approx(brute).epsilon(1e-11));
}

TEST_CASE("linear closed form") {
    const auto tree = build_tree(1.0, 64);
    const auto tau = LatticeStoppingTime::deterministic(0, 64);
    LinearCoefficients c{Process(tree, 0.0), Process(tree, 0.3), Process(tree, 0.0), 0.0};
    const auto s = solve_linear_closed_form(tree, c, brownian_process(tree), IntegrandK::zero(), tau);
    CHECK(std::abs(s.Y.at(0, 0) - 0.3) <= 0.02);
    CHECK(s.Y.at(0, 0) == doctest::Approx(0.3).epsilon(1e-12));

    LinearCoefficients half{Process(tree, 0.5), Process(tree, 0.0), Process(tree, 0.0), 0.5};
    const auto a = solve_linear_closed_form(tree, half, Process(tree, 64, 64, 1.0), IntegrandK::zero(), tau);
    const auto b = solve(tree, make_linear(0.5, 0.0, 0.0), Process(tree, 64, 64, 1.0), IntegrandK::zero(), tau);
    CHECK(std::abs(a.Y.at(0, 0) - b.Y.at(0, 0)) <= 1e-11);

    LinearCoefficients zero{Process(tree, 0.0), Process(tree, 0.0), Process(tree, 0.0), 0.0};
    const auto B = brownian_process(tree);
    const auto e = solve_linear_closed_form(tree, zero, B, IntegrandK::zero(), tau);
    CHECK(e.Y.at(10, 3) == doctest::Approx(tree.brownian(10, 3)).epsilon(1e-12));

    LinearCoefficients wild{Process(tree, 0.0), Process(tree, 100.0), Process(tree, 0.0), 0.0};
    CHECK_THROWS_AS(solve_linear_closed_form(tree, wild, B, IntegrandK::zero(), tau), ParameterError);
    LinearCoefficients over{Process(tree, 2.0), Process(tree, 0.0), Process(tree, 0.0), 1.0};
    CHECK_THROWS_AS(solve_linear_closed_form(tree, over, B, IntegrandK::zero(), tau), ParameterError);
}

TEST_CASE("Girsanov weight at N = 8 by path enumeration") {
    const auto tree = build_tree(1.0, 8);
    const double b = 0.3;
    const double sq = tree.increment();
    long double expected = 0.0L;
    for (int path = 0; path < 256; ++path) {
        long double w = 1.0L;
        int up = 0;
        for (int i = 0; i < 8; ++i) {
            const bool u = (path >> i) & 1;
            w *= 0.5L * (1.0L + (u ? b : -b) * sq);
            up += u;
        }
        expected += w * tree.brownian(8, up);
    }
    LinearCoefficients c{Process(tree, 0.0), Process(tree, b), Process(tree, 0.0), 0.0};
    const auto s = solve_linear_closed_form(tree, c, brownian_process(tree), IntegrandK::zero(),
                                            LatticeStoppingTime::deterministic(0, 8));
    CHECK(s.Y.at(0, 0) == doctest::Approx(static_cast<double>(expected)).epsilon(1e-14));
}

TEST_CASE("solver preconditions") {
    const auto tree = build_tree(1.0, 4);
    CHECK_THROWS_AS(solve(tree, make_linear(4.0, 0.0, 0.0), Process(tree, 4, 4, 1.0), IntegrandK::zero(),
                          LatticeStoppingTime::deterministic(0, 4)),
                    ParameterError);
    CHECK_THROWS(solve(tree, make_zero(), Process(tree, 2, 2, 1.0), IntegrandK::zero(),
                       LatticeStoppingTime::deterministic(0, 4)));
}

TEST_CASE("comparison, shift identity and a priori bounds") {
    const auto tree = build_tree(1.0, 24);
    const auto tau = LatticeStoppingTime::deterministic(0, 24);
    const auto g = make_mu_phi(0.8, Modulus::capped_sqrt(), +1);
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 40; ++trial) {
        const Process x1 = random_terminal(tree, 24, rng);
        Process x2 = x1;
        for (double& v : x2.step(24)) v -= std::abs(u(rng));
        Process g1(tree), g2(tree);
        for (std::size_t i = 0; i < g1.values().size(); ++i) {
            g1.values()[i] = u(rng);
            g2.values()[i] = g1.values()[i] - std::abs(u(rng));
        }
        const auto y1 = solve(tree, g, x1, IntegrandK::from_density(g1), tau).Y;
        const auto y2 = solve(tree, g, x2, IntegrandK::from_density(g2), tau).Y;
        for (std::size_t i = 0; i < y1.values().size(); ++i) CHECK(y1.values()[i] >= y2.values()[i] - 1e-10);

        for (int k = 0; k <= 24; ++k) {
            const double bound = a_priori_bound(0.8, tree.dt(), 24 - k, x1.sup_norm(), 0.0, g1.sup_norm());
            for (int j = 0; j <= k; ++j) CHECK(std::abs(y1.at(k, j)) <= bound + 1e-12);
        }
    }

    // Deterministic K: solve(g, X, K) = solve(g^K, X + K_T, 0) - K_t.
    std::vector<double> gamma(24), K(25, 0.0);
    for (int k = 0; k < 24; ++k) {
        gamma[k] = u(rng);
        K[k + 1] = K[k] + gamma[k] * tree.dt();
    }
    const Process G = Process::from_function(tree, 0, 24, [&](int k, int) { return k < 24 ? gamma[k] : 0.0; });
    const Generator shifted("shifted", Generator::Driver([&](const NodeTime& at, double y, double z) {
                                return g(at, y - K[at.step], z);
                            }),
                            0.8, Modulus::capped_sqrt(), false);
    const Process x = random_terminal(tree, 24, rng);
    Process xk = x;
    for (double& v : xk.step(24)) v += K[24];
    const auto lhs = solve(tree, g, x, IntegrandK::from_density(G), tau).Y;
    const auto rhs = solve(tree, shifted, xk, IntegrandK::zero(), tau).Y;
    for (int k = 0; k <= 24; ++k) {
        for (int j = 0; j <= k; ++j) CHECK(std::abs(lhs.at(k, j) - (rhs.at(k, j) - K[k])) <= 1e-10);
    }
}

TEST_CASE("majorant sandwich") {
    const auto tree = build_tree(1.0, 32);
    const auto tau = LatticeStoppingTime::deterministic(0, 32);
    const auto g = make_mu_phi(0.3, Modulus::sqrt(), +1);
    const auto fn = lipschitz_majorant_driver(g, 4.0);
    CHECK(lipschitz_majorant_driver(make_mu_phi(1.0, Modulus::sqrt()), 2.0)(0.0, -1.0, 2.0) == doctest::Approx(1 + 4 + 1));
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-4.0, 4.0);
    for (int i = 0; i < 1000; ++i) {
        const double y = u(rng), z = u(rng);
        CHECK(fn(0.0, y, z) >= std::abs(g(0.0, y, z)));
    }
    const Generator neg("neg_fn", Generator::TimeDriver([fn](double t, double y, double z) { return -fn(t, y, z); }),
                        fn.mu(), fn.phi(), false);
    const Process x = random_terminal(tree, 32, rng);
    const auto mid = solve(tree, g, x, IntegrandK::zero(), tau).Y;
    const auto hi = solve(tree, fn, x, IntegrandK::zero(), tau).Y;
    const auto lo = solve(tree, neg, x, IntegrandK::zero(), tau).Y;
    for (std::size_t i = 0; i < mid.values().size(); ++i) {
        CHECK(lo.values()[i] <= mid.values()[i] + 1e-10);
        CHECK(mid.values()[i] <= hi.values()[i] + 1e-10);
    }
}

TEST_CASE("solution csv columns") {
    const auto tree = build_tree(1.0, 2);
    const auto s = solve(tree, make_zero(), brownian_process(tree), IntegrandK::zero(),
                         LatticeStoppingTime::deterministic(0, 2));
    std::ostringstream os;
    write_solution_csv(os, s);
    CHECK(os.str().rfind("step,up_moves,brownian_value,Y,Z,defect\n", 0) == 0);
}
