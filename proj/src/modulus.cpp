#include "gbsde/modulus.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gbsde/errors.hpp"

namespace gbsde {

namespace {

constexpr double kSlack = 1e-12;

std::string point(double x) {
    std::ostringstream os;
    os.precision(17);
    os << "x=" << x;
    return os.str();
}

}  // namespace

Modulus::Modulus(std::string name, Fn fn, double nu, std::vector<double> check_grid)
    : name_(std::move(name)),
      fn_(std::move(fn)),
      nu_(nu),
      grid_(std::make_shared<const std::vector<double>>(std::move(check_grid))) {
    if (!(nu_ > 0.0) || !std::isfinite(nu_)) {
        throw ParameterError("modulus '" + name_ + "': nu must be positive and finite");
    }
    if (!fn_) throw ParameterError("modulus '" + name_ + "': empty function");
}

double Modulus::operator()(double x) const {
    if (!(x >= 0.0) || !std::isfinite(x)) {
        throw DomainError("modulus '" + name_ + "' evaluated at " + point(x));
    }
    return fn_(x);
}

std::vector<double> Modulus::default_grid() {
    static const std::vector<double> grid = [] {
        std::vector<double> g;
        g.reserve(10001);
        constexpr int kLinear = 5001;
        for (int i = 0; i < kLinear; ++i) g.push_back(static_cast<double>(i) / (kLinear - 1));
        constexpr int kLog = 5000;
        for (int i = 1; i <= kLog; ++i) g.push_back(std::pow(100.0, static_cast<double>(i) / kLog));
        return g;
    }();
    return grid;
}

Modulus Modulus::identity() {
    return Modulus("identity", [](double x) { return x; }, 1.0);
}

Modulus Modulus::scaled(double c) {
    if (!(c > 0.0)) throw ParameterError("scaled modulus needs c > 0");
    return Modulus("scaled", [c](double x) { return c * x; }, c);
}

Modulus Modulus::sqrt() {
    return Modulus("sqrt", [](double x) { return std::sqrt(x); }, 1.0);
}

Modulus Modulus::capped_sqrt() {
    return Modulus("capped_sqrt", [](double x) { return std::min(x, std::sqrt(x)); }, 1.0);
}

Modulus Modulus::saturating(double c) {
    if (!(c > 0.0)) throw ParameterError("saturating modulus needs c > 0");
    return Modulus("saturating", [c](double x) { return c * x / (1.0 + x); }, c);
}

Modulus Modulus::zero() {
    return Modulus("zero", [](double) { return 0.0; }, 1.0);
}

double eval_modulus(const Modulus& phi, double x) { return phi(x); }

LinearMajorant fan_jiang_majorant(const Modulus& phi, double n) {
    if (!(n >= 2.0 * phi.nu())) {
        throw ParameterError("fan_jiang_majorant: n must be >= 2 nu");
    }
    const LinearMajorant m{n, phi(2.0 * phi.nu() / n)};
    for (double x : phi.check_grid()) {
        if (phi(x) > m.slope * x + m.intercept + kSlack) {
            throw ParameterError("fan_jiang_majorant: inequality fails at " + point(x) +
                                 " (modulus '" + phi.name() + "' is not valid)");
        }
    }
    return m;
}

ValidationReport check_modulus(const Modulus& phi) {
    ValidationReport report;
    const auto& grid = phi.check_grid();
    if (grid.empty() || grid.front() != 0.0 || !std::is_sorted(grid.begin(), grid.end())) {
        throw ParameterError("check_modulus: grid must be nonempty, ascending and start at 0");
    }
    std::vector<double> values(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) values[i] = phi(grid[i]);

    auto& zero = report.add("zero_at_zero");
    zero.worst_violation = std::abs(values[0]);
    zero.passed = zero.worst_violation <= kSlack;
    if (!zero.passed) zero.witness = point(0.0);

    auto& mono = report.add("monotone");
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double v = values[i - 1] - values[i];
        if (v > mono.worst_violation) {
            mono.worst_violation = v;
            if (v > kSlack && mono.passed) {
                mono.passed = false;
                mono.witness = point(grid[i]);
            }
        }
    }

    auto& sub = report.add("subadditive");
    const double top = grid.back();
    for (std::size_t i = 0; i < grid.size() && sub.passed; ++i) {
        for (std::size_t j = i; j < grid.size(); ++j) {
            const double s = grid[i] + grid[j];
            if (s > top) break;
            const double v = phi(s) - values[i] - values[j];
            if (v > sub.worst_violation) sub.worst_violation = v;
            if (v > kSlack) {
                sub.passed = false;
                sub.witness = point(grid[i]) + ", " + point(grid[j]);
                break;
            }
        }
    }

    auto& growth = report.add("linear_growth");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double v = values[i] - phi.nu() * (grid[i] + 1.0);
        if (v > growth.worst_violation) growth.worst_violation = v;
        if (v > kSlack && growth.passed) {
            growth.passed = false;
            growth.witness = point(grid[i]);
        }
    }
    return report;
}

}  // namespace gbsde
