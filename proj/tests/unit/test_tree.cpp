#include <doctest.h>

#include <random>
#include <sstream>

#include "gbsde/errors.hpp"
#include "gbsde/tree.hpp"
#include "oracles.hpp"

using namespace gbsde;

TEST_CASE("lattice geometry") {
    auto t = build_tree(1.0, 1);
    CHECK(t.node_count() == 3);
    CHECK(t.brownian(1, 0) == -1.0);
    CHECK(t.brownian(1, 1) == 1.0);
    CHECK(build_tree(1.0, 64).node_count() == 2145);
    t = build_tree(2.0, 2);
    CHECK(t.brownian(2, 0) == doctest::Approx(-2.0));
    CHECK(t.brownian(2, 1) == doctest::Approx(0.0));
    CHECK(t.brownian(2, 2) == doctest::Approx(2.0));
    CHECK_THROWS_AS(build_tree(1.0, 0), ParameterError);
    CHECK_THROWS_AS(build_tree(-1.0, 4), ParameterError);
}

TEST_CASE("process windows") {
    const auto tree = build_tree(1.0, 8);
    Process p(tree, 3, 5, 2.0);
    CHECK(p.covers(3));
    CHECK(p.covers(5));
    CHECK_FALSE(p.covers(6));
    CHECK(p.step(4).size() == 5);
    p.at(5, 5) = -7.0;
    CHECK(p.sup_norm() == 7.0);
    CHECK(p.sup_norm(3, 4) == 2.0);
}

TEST_CASE("conditional expectation") {
    const auto tree = build_tree(1.0, 1);
    const std::vector<double> next{0.0, 4.0};
    CHECK(conditional_expectation(tree, next)[0] == 2.0);

    const auto big = build_tree(1.0, 16);
    const auto B = brownian_process(big);
    const auto parent = conditional_expectation(big, B.step(16));
    for (int j = 0; j <= 15; ++j) CHECK(parent[j] == doctest::Approx(big.brownian(15, j)).epsilon(1e-14));
    const std::vector<double> constant(17, 3.25);
    for (double v : conditional_expectation(big, constant)) CHECK(v == 3.25);
}

TEST_CASE("tower property and path oracle") {
    const auto tree = build_tree(1.0, 12);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<double> x(13);
    for (double& v : x) v = u(rng);
    auto one = conditional_expectation(tree, x);
    auto two = conditional_expectation(tree, one);
    for (int j = 0; j <= 10; ++j) {
        const double quarter = 0.25 * (x[j] + 2.0 * x[j + 1] + x[j + 2]);
        CHECK(two[j] == doctest::Approx(quarter).epsilon(1e-15));
    }
    std::vector<double> v = x;
    for (int k = 11; k >= 0; --k) v = conditional_expectation(tree, v);
    CHECK(v[0] == doctest::Approx(oracle::path_expectation(0, 0, 12, [&](int, int j) { return x[j]; })).epsilon(1e-14));
}

TEST_CASE("exact path measure") {
    for (int n = 0; n <= 20; ++n) CHECK(oracle::path_measure_is_one(n));
}

TEST_CASE("hitting times") {
    auto tree = build_tree(1.0, 1);
    auto tau = hitting_time(tree, 0, 1.0);
    CHECK(stop_step_on_path(tau, std::vector<int>{1}) == 1);
    CHECK(stop_step_on_path(tau, std::vector<int>{0}) == 1);

    tree = build_tree(4.0, 16);
    tau = hitting_time(tree, 0, 10.0);
    for (int path = 0; path < (1 << 16); path += 97) {
        std::vector<int> up(16);
        for (int i = 0; i < 16; ++i) up[i] = (path >> i) & 1;
        CHECK(stop_step_on_path(tau, up) == 16);
    }

    tree = build_tree(1.0, 8);
    tau = hitting_time(tree, 8, 0.5);
    CHECK(tau.stopped(8, 4));
    CHECK(stop_step_on_path(tau, std::vector<int>(8, 1)) == 8);
}

TEST_CASE("hitting time agrees with a path walk") {
    const auto tree = build_tree(1.0, 12);
    const auto tau = hitting_time(tree, 0, 0.6);
    for (int path = 0; path < (1 << 12); ++path) {
        std::vector<int> up(12);
        int b = 0;
        int expected = 12;
        for (int i = 0; i < 12; ++i) {
            up[i] = (path >> i) & 1;
            b += up[i] ? 1 : -1;
            if (expected == 12 && std::abs(b) * tree.increment() >= 0.6 - 1e-12) expected = i + 1;
        }
        CHECK(stop_step_on_path(tau, up) == expected);
    }
}

TEST_CASE("precedes") {
    const auto tree = build_tree(1.0, 10);
    const auto narrow = hitting_time(tree, 0, 0.3);
    const auto wide = hitting_time(tree, 0, 0.9);
    CHECK(precedes(tree, narrow, wide));
    CHECK_FALSE(precedes(tree, wide, narrow));
    CHECK(precedes(tree, narrow.capped(4), narrow));
    CHECK(precedes(tree, LatticeStoppingTime::deterministic(0, 3), LatticeStoppingTime::deterministic(0, 7)));
}

TEST_CASE("process csv") {
    const auto tree = build_tree(1.0, 2);
    std::ostringstream os;
    write_process_csv(os, brownian_process(tree));
    const auto s = os.str();
    CHECK(s.rfind("step,up_moves,brownian_value,value\n", 0) == 0);
    CHECK(std::count(s.begin(), s.end(), '\n') == 7);
}
