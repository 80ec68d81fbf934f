#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "gbsde/report.hpp"

namespace gbsde {

/// Modulus of continuity phi: R+ -> R+ controlling how a driver varies in z.
///
/// A valid modulus is increasing, subadditive, vanishes at zero and grows at
/// most linearly: phi(x) <= nu * (x + 1). These properties are validated on a
/// finite check grid, never certified.
class Modulus {
public:
    using Fn = std::function<double(double)>;

    Modulus(std::string name, Fn fn, double nu, std::vector<double> check_grid = default_grid());

    /// phi(x). Throws DomainError for negative or non-finite x.
    double operator()(double x) const;

    double nu() const { return nu_; }
    const std::string& name() const { return name_; }
    const std::vector<double>& check_grid() const { return *grid_; }

    /// 0..1 linearly (5001 points) then log-spaced up to 100; 10001 points in total.
    static std::vector<double> default_grid();

    static Modulus identity();
    static Modulus scaled(double c);
    static Modulus sqrt();
    /// min(x, sqrt(x)): 1-Lipschitz, not differentiable at 1, sublinear at infinity.
    static Modulus capped_sqrt();
    /// c * x / (1 + x), bounded by c.
    static Modulus saturating(double c);
    /// phi == 0; nu is nominal.
    static Modulus zero();

private:
    std::string name_;
    Fn fn_;
    double nu_;
    std::shared_ptr<const std::vector<double>> grid_;
};

double eval_modulus(const Modulus& phi, double x);

struct LinearMajorant {
    double slope;
    double intercept;
};

/// (n, phi(2 nu / n)) with phi(x) <= n x + phi(2 nu / n) on the check grid.
/// Throws ParameterError when n < 2 nu or the inequality fails on the grid.
LinearMajorant fan_jiang_majorant(const Modulus& phi, double n);

/// Checks "zero_at_zero", "monotone", "subadditive", "linear_growth" on the grid.
ValidationReport check_modulus(const Modulus& phi);

}  // namespace gbsde
