#include "gbsde/generator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <sstream>

#include "gbsde/errors.hpp"

namespace gbsde {

Generator::Generator(std::string name, Driver driver, double mu, Modulus phi, bool zero_at_zero,
                     std::optional<double> lipschitz_z)
    : name_(std::move(name)),
      driver_(std::move(driver)),
      mu_(mu),
      phi_(std::move(phi)),
      zero_at_zero_(zero_at_zero),
      lipschitz_z_(lipschitz_z) {
    if (!(mu_ >= 0.0) || !std::isfinite(mu_)) throw ParameterError("generator: mu must be >= 0");
    if (!driver_) throw ParameterError("generator: empty driver");
}

Generator::Generator(std::string name, TimeDriver driver, double mu, Modulus phi,
                     bool zero_at_zero, std::optional<double> lipschitz_z)
    : Generator(std::move(name),
                Driver([d = std::move(driver)](const NodeTime& at, double y, double z) {
                    return d(at.t, y, z);
                }),
                mu, std::move(phi), zero_at_zero, lipschitz_z) {}

Generator make_mu_phi(double mu, const Modulus& phi, int sign) {
    if (sign != 1 && sign != -1) throw ParameterError("make_mu_phi: sign must be +1 or -1");
    const double s = sign;
    return Generator(sign > 0 ? "mu_phi" : "neg_mu_phi",
                     Generator::TimeDriver([mu, phi, s](double, double y, double z) {
                         return s * (mu * std::abs(y) + phi(std::abs(z)));
                     }),
                     mu, phi, true);
}

Generator make_linear(double a, double b, double c) {
    const double lz = std::abs(b);
    return Generator("linear",
                     Generator::TimeDriver([a, b, c](double, double y, double z) {
                         return a * y + b * z + c;
                     }),
                     std::abs(a), lz > 0.0 ? Modulus::scaled(lz) : Modulus::zero(), c == 0.0, lz);
}

Generator make_constant(double c) {
    return Generator("constant", Generator::TimeDriver([c](double, double, double) { return c; }),
                     0.0, Modulus::zero(), c == 0.0, 0.0);
}

Generator make_zero() { return make_constant(0.0); }

namespace {

// Index of the cell [p[i], p[i+1]] containing x, with the weight of p[i+1];
// clamped to the grid ends.
std::pair<std::size_t, double> locate(const std::vector<double>& p, double x) {
    if (p.size() == 1 || x <= p.front()) return {0, 0.0};
    if (x >= p.back()) return {p.size() - 2, 1.0};
    const auto it = std::upper_bound(p.begin(), p.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - p.begin()) - 1;
    return {i, (x - p[i]) / (p[i + 1] - p[i])};
}

}  // namespace

Generator make_table(std::vector<double> y_points, std::vector<double> z_points,
                     std::vector<double> values, double mu, const Modulus& phi) {
    if (y_points.empty() || z_points.empty() ||
        values.size() != y_points.size() * z_points.size()) {
        throw ParameterError("make_table: grid shape mismatch");
    }
    if (!std::is_sorted(y_points.begin(), y_points.end()) ||
        !std::is_sorted(z_points.begin(), z_points.end())) {
        throw ParameterError("make_table: grid points must be ascending");
    }
    for (double v : values) {
        if (!std::isfinite(v)) throw ParameterError("make_table: non-finite value");
    }
    auto ys = std::make_shared<const std::vector<double>>(std::move(y_points));
    auto zs = std::make_shared<const std::vector<double>>(std::move(z_points));
    auto vs = std::make_shared<const std::vector<double>>(std::move(values));
    auto eval = [ys, zs, vs](double, double y, double z) {
        const std::size_t nz = zs->size();
        const auto [i, wy] = locate(*ys, y);
        const auto [k, wz] = locate(*zs, z);
        const std::size_t i1 = std::min(i + 1, ys->size() - 1);
        const std::size_t k1 = std::min(k + 1, nz - 1);
        const auto& v = *vs;
        return (1 - wy) * ((1 - wz) * v[i * nz + k] + wz * v[i * nz + k1]) +
               wy * ((1 - wz) * v[i1 * nz + k] + wz * v[i1 * nz + k1]);
    };
    const bool zero = std::abs(eval(0.0, 0.0, 0.0)) == 0.0;
    return Generator("table", Generator::TimeDriver(eval), mu, phi, zero);
}

ConvolutionLattice ConvolutionLattice::around(double y, double z) {
    const double r = 8.0 * std::max({1.0, std::abs(y), std::abs(z)});
    return ConvolutionLattice{r, r / 2048.0};
}

int ConvolutionLattice::points_per_axis() const {
    return static_cast<int>(std::floor(2.0 * radius / spacing + 1e-9)) + 1;
}

namespace {

void check_convolution_args(const Generator& g, double m, const ConvolutionLattice& lattice) {
    if (!(m > std::max(g.mu(), g.phi().nu()))) {
        throw ParameterError("convolution: m must exceed max(mu, nu)");
    }
    if (!(lattice.radius > 0.0) || !(lattice.spacing > 0.0) || lattice.spacing > lattice.radius) {
        throw ParameterError("convolution: need 0 < spacing <= radius");
    }
}

// In-place 1D L1 distance transform with slope `step` along a strided view.
void transform_line(double* f, int n, std::ptrdiff_t stride, double step) {
    for (int i = 1; i < n; ++i) {
        f[i * stride] = std::min(f[i * stride], f[(i - 1) * stride] + step);
    }
    for (int i = n - 2; i >= 0; --i) {
        f[i * stride] = std::min(f[i * stride], f[(i + 1) * stride] + step);
    }
}

// Lattice indices whose L1 paths dominate every lattice point as seen from x.
int corners(const ConvolutionLattice& l, int n, double x, int out[2]) {
    const double pos = (x + l.radius) / l.spacing;
    if (pos <= 0.0) {
        out[0] = 0;
        return 1;
    }
    if (pos >= n - 1) {
        out[0] = n - 1;
        return 1;
    }
    const int i = static_cast<int>(std::floor(pos));
    out[0] = i;
    out[1] = i + 1;
    return 2;
}

}  // namespace

InfConvolution::InfConvolution(const Generator& g, double m, ConvolutionLattice lattice, double t)
    : g_(g), m_(m), lattice_(lattice), t_(t), n_(0) {
    check_convolution_args(g, m, lattice);
    n_ = lattice_.points_per_axis();
    transform_.resize(static_cast<std::size_t>(n_) * n_);
    for (int a = 0; a < n_; ++a) {
        const double av = lattice_.coordinate(a);
        for (int b = 0; b < n_; ++b) {
            transform_[static_cast<std::size_t>(a) * n_ + b] = g_(t_, av, lattice_.coordinate(b));
        }
    }
    const double step = m_ * lattice_.spacing;
    for (int a = 0; a < n_; ++a) transform_line(&transform_[static_cast<std::size_t>(a) * n_], n_, 1, step);
    for (int b = 0; b < n_; ++b) transform_line(&transform_[b], n_, n_, step);
}

double InfConvolution::lattice_part(double y, double z) const {
    int ca[2], cb[2];
    const int na = corners(lattice_, n_, y, ca);
    const int nb = corners(lattice_, n_, z, cb);
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < na; ++i) {
        for (int k = 0; k < nb; ++k) {
            const double v = transform_[static_cast<std::size_t>(ca[i]) * n_ + cb[k]] +
                             m_ * (std::abs(y - lattice_.coordinate(ca[i])) +
                                   std::abs(z - lattice_.coordinate(cb[k])));
            best = std::min(best, v);
        }
    }
    return best;
}

double InfConvolution::operator()(double y, double z) const {
    double best = std::min(lattice_part(y, z), g_(t_, y, z));
    for (int i = 0; i < n_; ++i) {
        const double c = lattice_.coordinate(i);
        best = std::min(best, g_(t_, y, c) + m_ * std::abs(z - c));
        best = std::min(best, g_(t_, c, z) + m_ * std::abs(y - c));
    }
    return best;
}

namespace {

Generator negated(const Generator& g) {
    return Generator("neg_" + g.name(),
                     Generator::Driver([d = g.driver()](const NodeTime& at, double y, double z) {
                         return -d(at, y, z);
                     }),
                     g.mu(), g.phi(), g.zero_at_zero(), g.lipschitz_z());
}

}  // namespace

double inf_convolution(const Generator& g, double m, const ConvolutionLattice& lattice, double t,
                       double y, double z) {
    return InfConvolution(g, m, lattice, t)(y, z);
}

double sup_convolution(const Generator& g, double m, const ConvolutionLattice& lattice, double t,
                       double y, double z) {
    return -InfConvolution(negated(g), m, lattice, t)(y, z);
}

namespace {

// Driver wrapper caching one distance transform per time value.
class ApproximantDriver {
public:
    ApproximantDriver(Generator g, double m, ConvolutionLattice lattice, double sign)
        : g_(sign > 0 ? std::move(g) : negated(g)), m_(m), lattice_(lattice), sign_(sign) {}

    double operator()(const NodeTime& at, double y, double z) const {
        std::shared_ptr<const InfConvolution> table;
        {
            std::lock_guard<std::mutex> lock(state_->mutex);
            auto& slot = state_->tables[at.t];
            if (!slot) slot = std::make_shared<const InfConvolution>(g_, m_, lattice_, at.t);
            table = slot;
        }
        return sign_ * (*table)(y, z);
    }

private:
    struct State {
        std::mutex mutex;
        std::map<double, std::shared_ptr<const InfConvolution>> tables;
    };
    Generator g_;
    double m_;
    ConvolutionLattice lattice_;
    double sign_;
    std::shared_ptr<State> state_ = std::make_shared<State>();
};

}  // namespace

Generator lower_approximant(const Generator& g, double m, const ConvolutionLattice& lattice) {
    check_convolution_args(g, m, lattice);
    return Generator("lower_" + g.name(), Generator::Driver(ApproximantDriver(g, m, lattice, +1.0)),
                     std::min(g.mu(), m), Modulus::scaled(m), false, m);
}

Generator upper_approximant(const Generator& g, double m, const ConvolutionLattice& lattice) {
    check_convolution_args(g, m, lattice);
    return Generator("upper_" + g.name(), Generator::Driver(ApproximantDriver(g, m, lattice, -1.0)),
                     std::min(g.mu(), m), Modulus::scaled(m), false, m);
}

ValidationReport check_a1(const Generator& g, int sample_count, double domain_radius,
                          std::uint64_t seed, const A1CheckOptions& options) {
    if (sample_count < 1) throw ParameterError("check_a1: sample_count must be >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coord(-domain_radius, domain_radius);
    std::uniform_real_distribution<double> time(0.0, options.horizon);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    ValidationReport report;
    report.add("a1_bound");
    report.add("finite");
    auto& a1 = report.checks[0];
    auto& finite = report.checks[1];
    a1.worst_violation = -std::numeric_limits<double>::infinity();

    for (int s = 0; s < sample_count; ++s) {
        const double t = time(rng);
        const double y1 = coord(rng);
        const double z1 = coord(rng);
        double y2 = coord(rng);
        double z2 = coord(rng);
        // Mix in one-coordinate and short-range perturbations; they probe the
        // bound where it is tightest.
        switch (s % 4) {
            case 1: z2 = z1; break;
            case 2: y2 = y1; break;
            case 3:
                y2 = y1 + 1e-2 * (unit(rng) - 0.5);
                z2 = z1 + 1e-2 * (unit(rng) - 0.5);
                break;
            default: break;
        }
        const double g1 = g(t, y1, z1);
        const double g2 = g(t, y2, z2);
        if (!std::isfinite(g1) || !std::isfinite(g2)) {
            if (finite.passed) {
                std::ostringstream os;
                os << "t=" << t << " y=" << y1 << " z=" << z1;
                finite.witness = os.str();
            }
            finite.passed = false;
            continue;
        }
        const double slack = std::abs(g1 - g2) -
                             (g.mu() * std::abs(y1 - y2) + g.phi()(std::abs(z1 - z2)));
        if (slack > a1.worst_violation) {
            a1.worst_violation = slack;
            if (slack > options.tolerance) {
                std::ostringstream os;
                os.precision(12);
                os << "t=" << t << " (y1,z1)=(" << y1 << "," << z1 << ") (y2,z2)=(" << y2 << ","
                   << z2 << ")";
                a1.witness = os.str();
            }
        }
    }
    a1.passed = a1.worst_violation <= options.tolerance;

    if (g.zero_at_zero()) {
        auto& a3 = report.add("zero_at_zero");
        for (int s = 0; s < std::max(8, sample_count / 16); ++s) {
            const double t = time(rng);
            const double v = std::abs(g(t, 0.0, 0.0));
            if (v > a3.worst_violation) {
                a3.worst_violation = v;
                if (v > options.tolerance) a3.witness = "t=" + std::to_string(t);
            }
        }
        a3.passed = a3.worst_violation <= options.tolerance;
    }
    return report;
}

}  // namespace gbsde
