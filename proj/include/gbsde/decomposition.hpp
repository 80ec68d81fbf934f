#pragma once

#include <optional>
#include <vector>

#include "gbsde/errors.hpp"
#include "gbsde/fixed_point.hpp"

namespace gbsde {

/// One penalization level y^n = E[Y_tau; int n (Y - y^n) ds].
///
/// The increasing process A^n = int gamma ds depends on the path, not only on
/// the node, so it is carried through its density gamma = n (Y - y^n) together
/// with the path statistics of A^n_tau.
struct PenalizationIterate {
    double n = 0.0;
    Process y;      // y^n on the window
    Process gamma;  // density of A^n, zero where tau has stopped
    Process g;      // realized driver (y - E[y_next] - gamma dt) / dt
    Process Z;
    int picard_iterations = 0;
    double residual = 0.0;      // sup |Y - y^n|
    double a_square_mean = 0.0; // E |A^n_tau|^2
    double a_terminal_min = 0.0;
    double a_terminal_max = 0.0;
    double z_energy = 0.0;      // E sum_{k < tau} Z_k^2 dt
};

struct PenalizeOptions {
    double tolerance = 1e-11;
    std::optional<Process> initial;  // warm start for the Picard sweeps
};

/// Largest penalty with n dt exp(mu dt) <= 1/2, the one-step contraction limit.
double max_penalty(const BinomialTree& tree, double mu);

/// Throws NonContractionError when n exceeds `max_penalty`.
PenalizationIterate penalize(const Evaluation& E, const Process& Y, const LatticeStoppingTime& tau,
                             double n, const PenalizeOptions& options = {});

/// Geometric schedule 1, 2, 4, ... up to `max_penalty`.
std::vector<double> default_schedule(const BinomialTree& tree, double mu);

struct DoobMeyerOptions {
    std::vector<double> schedule;              // empty: default_schedule
    std::optional<double> target_residual;     // unset: 1e-4 sup |Y|
    bool require_target = true;
    double driver_bound_tolerance = 1e-8;
    double identity_factor = 10.0;             // martingale identity allowed gap / residual
    double picard_tolerance = 1e-11;
    bool run_checks = true;
    int identity_windows = 8;  // terminal steps sampled for the martingale identity
};

struct DecompositionResult {
    Process A_density;  // gamma of the last level
    Process g_proc;
    Process Z;
    Process y;          // last penalized value
    double residual = 0.0;
    std::vector<double> levels_used;
    std::vector<double> residuals;
    std::vector<PenalizationIterate> iterates;
    ValidationReport report;  // "a_nondecreasing", "monotone_in_n", "driver_bound", "martingale_identity"
};

/// Residual target missed after the whole schedule.
class TargetNotReached : public ConvergenceError {
public:
    TargetNotReached(const std::string& what, std::vector<double> levels, std::vector<double> residuals)
        : ConvergenceError(what), levels_(std::move(levels)), residuals_(std::move(residuals)) {}
    const std::vector<double>& levels() const { return levels_; }
    const std::vector<double>& residuals() const { return residuals_; }

private:
    std::vector<double> levels_;
    std::vector<double> residuals_;
};

DecompositionResult doob_meyer(const Evaluation& E, const Process& Y, const LatticeStoppingTime& tau,
                               const DoobMeyerOptions& options = {});

/// E sum Z^2 dt and E |A_tau|^2 stay below factor * (first iterate value) + 1e-12,
/// or below `bound` when given. Checks "z_energy_bounded", "a_square_bounded".
ValidationReport check_uniform_bounds(const std::vector<PenalizationIterate>& iterates,
                                      double factor = 10.0, std::optional<double> bound = std::nullopt);

/// y^n <= y^n' <= Y for consecutive levels, and gamma >= -1e-12.
ValidationReport check_penalization(const std::vector<PenalizationIterate>& iterates, const Process& Y,
                                    const LatticeStoppingTime& tau, double tolerance = 1e-9);

/// Re-solves with the tabulated driver g_proc and K = A; returns sup |Y' - Y| on the window.
double reproduction_gap(const BinomialTree& tree, const DecompositionResult& result, const Process& Y,
                        const LatticeStoppingTime& tau);

/// |g - g'| <= mu |y - y'| + phi(|Z - Z'|) on the common window, check "driver_transfer".
ValidationReport check_driver_transfer(const DecompositionResult& a, const DecompositionResult& b,
                                       const LatticeStoppingTime& tau, double mu, const Modulus& phi,
                                       double tolerance = 1e-8);

/// Driver that ignores (y, z) and returns g at the node.
Generator node_driver(const Process& g);

}  // namespace gbsde
