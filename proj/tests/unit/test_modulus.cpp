#include <doctest.h>

#include <cmath>

#include "gbsde/errors.hpp"
#include "gbsde/modulus.hpp"

using namespace gbsde;

TEST_CASE("modulus evaluation") {
    CHECK(Modulus::sqrt()(0.0) == 0.0);
    CHECK(Modulus::identity()(3.5) == 3.5);
    CHECK(Modulus::capped_sqrt()(4.0) == 2.0);
    CHECK(Modulus::capped_sqrt()(0.25) == 0.25);
    CHECK(Modulus::saturating(2.0)(1.0) == doctest::Approx(1.0));
    CHECK(Modulus::zero()(7.0) == 0.0);
    CHECK(eval_modulus(Modulus::scaled(3.0), 2.0) == 6.0);
}

TEST_CASE("modulus rejects negative and non-finite input") {
    CHECK_THROWS_AS(Modulus::sqrt()(-1e-9), DomainError);
    CHECK_THROWS_AS(Modulus::identity()(std::nan("")), DomainError);
    CHECK_THROWS_AS(Modulus::identity()(INFINITY), DomainError);
}

TEST_CASE("linear majorant") {
    auto m = fan_jiang_majorant(Modulus::sqrt(), 2.0);
    CHECK(m.slope == 2.0);
    CHECK(m.intercept == doctest::Approx(1.0));
    m = fan_jiang_majorant(Modulus::identity(), 2.0);
    CHECK(m.intercept == doctest::Approx(1.0));
    m = fan_jiang_majorant(Modulus::sqrt(), 8.0);
    CHECK(m.intercept == doctest::Approx(0.5));
    CHECK_THROWS_AS(fan_jiang_majorant(Modulus::sqrt(), 1.0), ParameterError);
}

TEST_CASE("majorant dominates on the grid") {
    const auto phi = Modulus::capped_sqrt();
    for (double n : {2.0, 4.0, 16.0, 100.0}) {
        const auto m = fan_jiang_majorant(phi, n);
        for (double x : phi.check_grid()) CHECK(phi(x) <= m.slope * x + m.intercept + 1e-12);
    }
}

TEST_CASE("modulus checks") {
    for (const auto& phi : {Modulus::sqrt(), Modulus::identity(), Modulus::capped_sqrt(), Modulus::saturating(1.0)}) {
        const auto r = check_modulus(phi);
        CHECK_MESSAGE(r.passed(), phi.name());
        CHECK(r.checks.size() == 4);
    }

    const Modulus square("square", [](double x) { return x * x; }, 1.0, {0.0, 1.0, 3.0});
    auto r = check_modulus(square);
    REQUIRE(r.find("linear_growth") != nullptr);
    CHECK_FALSE(r.find("linear_growth")->passed);
    CHECK(r.find("linear_growth")->witness.find("3") != std::string::npos);
    CHECK(r.find("linear_growth")->worst_violation == doctest::Approx(5.0));

    const Modulus shifted("shifted", [](double x) { return x > 0.0 ? x * x : 1.0; }, 1.0, {0.0, 0.5, 1.0});
    r = check_modulus(shifted);
    CHECK_FALSE(r.find("zero_at_zero")->passed);
}

TEST_CASE("non-subadditive and non-monotone functions are caught") {
    const Modulus convex("convex", [](double x) { return std::min(x * x, x + 1.0); }, 2.0);
    CHECK_FALSE(check_modulus(convex).find("subadditive")->passed);
    const Modulus wave("wave", [](double x) { return x + 0.5 * std::sin(5.0 * x); }, 2.0);
    CHECK_FALSE(check_modulus(wave).find("monotone")->passed);
}
