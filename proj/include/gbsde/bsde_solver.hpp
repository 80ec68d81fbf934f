#pragma once

#include <iosfwd>

#include "gbsde/generator.hpp"
#include "gbsde/tree.hpp"

namespace gbsde {

/// Absolutely continuous forcing K_t = sum_{k < t} gamma_k dt, stored as its density.
struct IntegrandK {
    Process gamma;  // empty process means gamma == 0

    static IntegrandK zero() { return {}; }
    static IntegrandK from_density(Process gamma) { return {std::move(gamma)}; }

    bool is_zero() const { return gamma.values().empty(); }
    double density(int k, int j) const { return is_zero() ? 0.0 : gamma.at(k, j); }
    double sup_norm() const { return is_zero() ? 0.0 : gamma.sup_norm(); }
};

struct SolverSettings {
    double tolerance = 1e-12;
    int max_iterations = 200;
};

/// Discrete BSDE solution on the steps [tau.start_step, tau.cap_step].
///
/// At unstopped nodes Y_k = E[Y_{k+1}|F_k] + g(t_k, Y_k, Z_k) dt + gamma_k dt with
/// Z_k = (Y_{k+1,up} - Y_{k+1,down}) / (2 sqrt(dt)); at stopped nodes Y is the
/// terminal value and Z, defect are zero.
struct Solution {
    Process Y;
    Process Z;
    Process defect;
    double residual = 0.0;
};

/// Implicit-in-y backward induction. Throws ParameterError when mu dt >= 1,
/// ShapeError when the terminal misses a stopped node, ConvergenceError when a
/// node's scalar fixed point does not settle.
Solution solve(const BinomialTree& tree, const Generator& g, const Process& terminal,
               const IntegrandK& K, const LatticeStoppingTime& tau,
               const SolverSettings& settings = {});

/// y with y = expectation + g(at, y, z) dt + gamma dt, by plain iteration.
double solve_node(const Generator& g, const NodeTime& at, double expectation, double z,
                  double gamma, double dt, const SolverSettings& settings);

/// Nodewise coefficients of the linear driver a y + b z + c.
struct LinearCoefficients {
    Process a;
    Process b;
    Process c;
    double mu_bound = 0.0;  // declared bound on |a|
};

/// The linear driver as a node-tabulated generator.
Generator linear_generator(const LinearCoefficients& coeffs);

/// Closed form of the linear BSDE: for each node, the terminal and the
/// running term are weighted by the product of one-step factors
/// (1/2)(1 +- b sqrt(dt)) / (1 - a dt) along every path, propagated forward.
/// Throws ParameterError when a weight leaves (0, 1) or |a| exceeds mu_bound.
Solution solve_linear_closed_form(const BinomialTree& tree, const LinearCoefficients& coeffs,
                                  const Process& terminal, const IntegrandK& K,
                                  const LatticeStoppingTime& tau);

/// f_n(t,y,z) = mu|y| + n|z| + phi(2 nu / n) + |g(t,0,0)|, dominating |g| for n >= 2 nu.
Generator lipschitz_majorant_driver(const Generator& g, double n);

/// (1 - mu dt)^{-j} (x_norm + j dt (g0_norm + gamma_norm)): the a priori bound
/// on |Y_k| with j = steps left to the terminal.
double a_priori_bound(double mu, double dt, int steps_left, double x_norm, double g0_norm,
                      double gamma_norm);

/// (1 - mu dt)^{-j} j dt (mu x_norm + g0_norm + gamma_norm): bound on |Y_k - X|
/// for a terminal X already known at step k.
double anchoring_bound(double mu, double dt, int steps_left, double x_norm, double g0_norm,
                       double gamma_norm);

/// CSV with columns step,up_moves,brownian_value,Y,Z,defect.
void write_solution_csv(std::ostream& out, const Solution& s);

}  // namespace gbsde
