#include <doctest.h>

#include <cmath>
#include <random>

#include "gbsde/errors.hpp"
#include "gbsde/fixed_point.hpp"

using namespace gbsde;

namespace {

EDrivenProblem linear_problem(const BinomialTree& tree, const Evaluation& E, double a, const Process& X) {
    return make_problem(E, [a](int, int, double y) { return a * y; }, std::abs(a), X, 0, tree.steps());
}

}  // namespace

TEST_CASE("contraction horizon") {
    CHECK(contraction_horizon(1.0, 1.0) == doctest::Approx(0.3517).epsilon(1e-4));
    const double b = contraction_horizon(1.0, 1.0);
    CHECK(b * std::exp(b) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(std::isinf(contraction_horizon(0.0, 1.0)));
    CHECK(contraction_piece_steps(1.0, 1.0, 1.0 / 64, 64) == 22);
    CHECK_THROWS_AS(contraction_piece_steps(100.0, 0.0, 0.1, 10), NonContractionError);
}

TEST_CASE("zero forcing is one evaluation") {
    const auto tree = build_tree(1.0, 16);
    const auto E = Evaluation::generator_backed(tree, make_mu_phi(0.5, Modulus::sqrt()));
    const auto X = brownian_process(tree);
    const auto sol = solve_e_bsde(make_problem(E, [](int, int, double) { return 0.0; }, 0.0, X, 0, 16));
    const auto direct = E.window(LatticeStoppingTime::deterministic(0, 16), X);
    for (std::size_t i = 0; i < direct.values().size(); ++i) CHECK(sol.y.values()[i] == direct.values()[i]);
    CHECK(sol.trace.partition == std::vector<int>{0, 16});
}

TEST_CASE("linear forcing reaches the exponential") {
    const auto tree = build_tree(1.0, 64);
    const auto E = Evaluation::generator_backed(tree, make_zero());
    const Process one(tree, 64, 64, 1.0);
    const auto sol = solve_e_bsde(linear_problem(tree, E, 0.25, one));
    CHECK(std::abs(sol.y.at(0, 0) - std::exp(0.25)) <= 0.01);
    const auto direct = solve(tree, make_linear(0.25, 0.0, 0.0), one, IntegrandK::zero(),
                              LatticeStoppingTime::deterministic(0, 64));
    CHECK(std::abs(sol.y.at(0, 0) - direct.Y.at(0, 0)) <= 1e-9);
}

TEST_CASE("partition, defect, uniqueness and coarser patching") {
    const auto tree = build_tree(1.0, 64);
    const auto E = Evaluation::generator_backed(tree, make_mu_phi(1.0, Modulus::capped_sqrt()));
    const auto X = Process::from_function(tree, 64, 64, [&](int k, int j) { return std::sin(tree.brownian(k, j)); });
    const auto problem = make_problem(E, [](int, int, double y) { return std::sin(y); }, 1.0, X, 0, 64);
    CHECK(check_forcing(problem, 500, 1).passed());
    const double tol = 1e-10;
    FixedPointOptions opts;
    opts.tolerance = tol;
    const auto a = solve_e_bsde(problem, opts);
    CHECK(a.trace.partition.size() >= 4);
    CHECK(fixed_point_defect(problem, a.y, a.trace.partition) <= tol);
    for (double r : a.trace.contraction_ratios) CHECK(std::isfinite(r));

    opts.initial = Process(tree, 0, 64, X.sup_norm());
    const auto b = solve_e_bsde(problem, opts);
    opts.initial.reset();
    opts.piece_steps = 11;
    const auto c = solve_e_bsde(problem, opts);
    for (std::size_t i = 0; i < a.y.values().size(); ++i) {
        CHECK(std::abs(a.y.values()[i] - b.y.values()[i]) <= 2 * tol);
        CHECK(std::abs(a.y.values()[i] - c.y.values()[i]) <= 2 * tol);
    }
}

TEST_CASE("measured contraction") {
    const auto tree = build_tree(0.3, 32);
    const auto E = Evaluation::generator_backed(tree, make_mu_phi(1.0, Modulus::capped_sqrt()));
    const auto X = brownian_process(tree);
    const auto problem = make_problem(E, [](int, int, double y) { return std::sin(y); }, 1.0, X, 0, 32);
    CHECK(measure_contraction(problem, Process(tree, 0.5), Process(tree, 0.5)) == 0.0);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int i = 0; i < 10; ++i) {
        Process y1(tree), y2(tree);
        for (double& v : y1.values()) v = u(rng);
        for (double& v : y2.values()) v = u(rng);
        CHECK(measure_contraction(problem, y1, y2) <= 0.55);
    }
}

TEST_CASE("comparison of E-driven problems") {
    const auto tree = build_tree(1.0, 32);
    const auto E = Evaluation::generator_backed(tree, make_zero());
    const auto X = brownian_process(tree);
    const auto p = make_problem(E, [](int, int, double) { return 0.0; }, 0.0, X, 0, 32);
    const auto q = make_problem(E, [](int, int, double) { return 1.0; }, 0.0, X, 0, 32);
    CHECK(compare_e_bsde(p, q).passed());
    const auto y = solve_e_bsde(p).y;
    const auto ybar = solve_e_bsde(q).y;
    for (int k = 0; k <= 32; ++k) CHECK(ybar.at(k, 0) - y.at(k, 0) == doctest::Approx(1.0 - tree.time(k)).epsilon(1e-12));
    CHECK_THROWS_AS(compare_e_bsde(q, make_problem(E, [](int, int, double) { return 1.0; }, 0.0,
                                                   Process(tree, 32, 32, -100.0), 0, 32)),
                    PreconditionError);
}

TEST_CASE("non-contractive lattice is rejected") {
    const auto tree = build_tree(1.0, 4);
    const auto E = Evaluation::generator_backed(tree, make_zero());
    const auto p = linear_problem(tree, E, 10.0, Process(tree, 4, 4, 1.0));
    CHECK_THROWS_AS(solve_e_bsde(p), NonContractionError);
}
