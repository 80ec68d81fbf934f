#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gbsde/modulus.hpp"
#include "gbsde/report.hpp"

namespace gbsde {

/// Where a driver is sampled: lattice step, node index within the step, time.
/// Deterministic drivers read only `t`; node-tabulated drivers read step/node.
struct NodeTime {
    int step = 0;
    int node = 0;
    double t = 0.0;
};

/// A BSDE driver g(t, y, z) with Lipschitz constant mu in y and modulus phi in z.
class Generator {
public:
    using Driver = std::function<double(const NodeTime&, double y, double z)>;
    using TimeDriver = std::function<double(double t, double y, double z)>;

    Generator(std::string name, Driver driver, double mu, Modulus phi, bool zero_at_zero,
              std::optional<double> lipschitz_z = std::nullopt);
    Generator(std::string name, TimeDriver driver, double mu, Modulus phi, bool zero_at_zero,
              std::optional<double> lipschitz_z = std::nullopt);

    double operator()(const NodeTime& at, double y, double z) const { return driver_(at, y, z); }
    double operator()(double t, double y, double z) const { return driver_(NodeTime{0, 0, t}, y, z); }

    const std::string& name() const { return name_; }
    double mu() const { return mu_; }
    const Modulus& phi() const { return phi_; }
    bool zero_at_zero() const { return zero_at_zero_; }
    std::optional<double> lipschitz_z() const { return lipschitz_z_; }
    const Driver& driver() const { return driver_; }

private:
    std::string name_;
    Driver driver_;
    double mu_;
    Modulus phi_;
    bool zero_at_zero_;
    std::optional<double> lipschitz_z_;
};

/// sign = +1: mu|y| + phi(|z|); sign = -1: -mu|y| - phi(|z|).
Generator make_mu_phi(double mu, const Modulus& phi, int sign = +1);
/// a*y + b*z + c.
Generator make_linear(double a, double b, double c);
/// Constant driver; violates g(t,0,0) = 0 unless c == 0.
Generator make_constant(double c);
Generator make_zero();

/// Bilinear interpolation of values tabulated on a (y, z) grid, clamped outside it.
/// `values[i * z_points.size() + k]` is the value at (y_points[i], z_points[k]).
Generator make_table(std::vector<double> y_points, std::vector<double> z_points,
                     std::vector<double> values, double mu, const Modulus& phi);

struct ConvolutionLattice {
    double radius;
    double spacing;

    /// radius = 8 max(1, |y|, |z|), spacing = radius / 2048.
    static ConvolutionLattice around(double y, double z);
    int points_per_axis() const;
    double coordinate(int i) const { return -radius + i * spacing; }
};

/// Inf-convolution of g(t, ., .) with m(|dy| + |dz|) over a finite lattice.
///
/// Candidates are the lattice points plus the row and column through the
/// query point, so a driver that is already m-Lipschitz is reproduced exactly.
/// Construction is O(P^2) for P points per axis (one L1 distance transform);
/// each query is O(P).
class InfConvolution {
public:
    InfConvolution(const Generator& g, double m, ConvolutionLattice lattice, double t);

    double operator()(double y, double z) const;
    double m() const { return m_; }
    const ConvolutionLattice& lattice() const { return lattice_; }

private:
    double lattice_part(double y, double z) const;

    Generator g_;
    double m_;
    ConvolutionLattice lattice_;
    double t_;
    int n_;
    std::vector<double> transform_;  // row-major [a][b]
};

/// Lower approximant: min over the lattice of g(t,a,b) + m(|y-a| + |z-b|).
/// Throws ParameterError unless m > max(mu, nu).
double inf_convolution(const Generator& g, double m, const ConvolutionLattice& lattice,
                       double t, double y, double z);
/// Upper approximant: max over the lattice of g(t,a,b) - m(|y-a| + |z-b|).
double sup_convolution(const Generator& g, double m, const ConvolutionLattice& lattice,
                       double t, double y, double z);

/// The m-th lower / upper approximant as a driver in its own right (Lipschitz m).
Generator lower_approximant(const Generator& g, double m, const ConvolutionLattice& lattice);
Generator upper_approximant(const Generator& g, double m, const ConvolutionLattice& lattice);

struct A1CheckOptions {
    double horizon = 1.0;
    double tolerance = 1e-10;
};

/// Randomized check of |g(t,y1,z1) - g(t,y2,z2)| <= mu|y1-y2| + phi(|z1-z2|),
/// plus g(t,0,0) = 0 when declared and finiteness of every sample.
ValidationReport check_a1(const Generator& g, int sample_count, double domain_radius,
                          std::uint64_t seed, const A1CheckOptions& options = {});

}  // namespace gbsde
