#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gbsde/decomposition.hpp"

namespace gbsde {

/// Probe process started at (t_start, anchor node) with value y0 and constant volatility z.
///
/// Y(k, j) = ybar_k + z x with x the Brownian increment from the anchor node,
/// and ybar_{k+1} = ybar_k - (mu M_k + phi(|z|)) dt where M_k is the largest
/// |Y| over the reachable live nodes of step k. It is a node function, a
/// supermartingale for every evaluation dominated by (mu, phi), and a martingale
/// under E^{mu,phi} when mu == 0 or z == 0.
struct TestProcess {
    int t_start_step = 0;
    int anchor_node = 0;
    double y0 = 0.0;
    double z = 0.0;
    Process Y;  // on [t_start_step, N]
    LatticeStoppingTime tau;
};

/// Barrier used for the probe's exit time: max(1, 4 sqrt(dt)).
double default_barrier(const BinomialTree& tree);

TestProcess build_test_process(const BinomialTree& tree, double mu, const Modulus& phi, int t_step,
                               double y0, double z, std::optional<double> barrier = std::nullopt);

/// (|y0| + |z| b + (mu |z| b + phi(|z|)) T) (1 - mu dt)^{-N} where b is the barrier
/// rounded up to the lattice; dominates |Y| up to and including the exit nodes.
double test_process_bound(const TestProcess& tp, double mu, const Modulus& phi);

struct LocalGenerator {
    Process g;              // realized driver on the live region
    Process Z;
    double base_value = 0.0;  // g at the anchor node of the start step
    double z_deviation = 0.0; // sup |Z - z| on the live region
    double residual = 0.0;
    double n = 0.0;
};

struct ExtractOptions {
    std::vector<double> schedule;  // empty: the single largest admissible penalty
    double picard_tolerance = 1e-10;
};

LocalGenerator extract_local_generator(const Evaluation& E, const TestProcess& tp,
                                       const ExtractOptions& options = {});

struct RecoveryGrid {
    int level = 0;
    std::vector<int> time_steps;
    std::vector<double> y_points;
    std::vector<double> z_points;
};

/// Dyadic times i 2^{-level} T snapped to the lattice and uniform (y, z) points.
/// Throws ParameterError unless 2^{-level} T >= 4 dt.
RecoveryGrid make_recovery_grid(const BinomialTree& tree, int level, double y_min, double y_max,
                                int y_count, double z_min, double z_max, int z_count);

struct RecoveredGenerator {
    RecoveryGrid grid;
    BinomialTree tree{1.0, 1};
    // values[(i * ny + a) * nz + b] at (time_steps[i], y_points[a], z_points[b]).
    std::vector<double> values;
    double mu = 0.0;
    Modulus phi = Modulus::zero();
    std::vector<std::string> failures;  // one message per failed cell

    double at(std::size_t i, std::size_t a, std::size_t b) const {
        return values[(i * grid.y_points.size() + a) * grid.z_points.size() + b];
    }
    /// Piecewise constant in time over the dyadic cells, bilinear in (y, z), clamped.
    Generator to_generator() const;
};

struct RecoverOptions {
    ExtractOptions extract;
    std::optional<double> barrier;
    int threads = 1;
};

/// Replaces each time slice by its largest minorant satisfying (A1) on the grid nodes:
/// v(p) <- min_q v(q) + mu|y_p - y_q| + phi(|z_p - z_q|). An admissible driver within
/// eps of the table stays within eps. Bilinear interpolation of the result keeps (A1)
/// whenever phi is concave. Returns the largest downward shift.
double project_a1(RecoveredGenerator& g_rec);

RecoveredGenerator recover_generator(const Evaluation& E, const RecoveryGrid& grid,
                                     const RecoverOptions& options = {});

/// (E_{t,t+h}[y + z (B_{t+h} - B_t)] - y) / h at the middle node of step t.
double quick_recover(const Evaluation& E, int t_step, double y, double z, int h_steps);

struct VerifyOptions {
    double threshold = 0.0;   // pass when the worst gap is at most this
    double claim_scale = 0.5; // coefficients of a tanh(B) + b sin(B) + c drawn from [-scale, scale]
};

/// Random smooth claims at random (s, t): worst nodewise gap between E and the
/// BSDE with the recovered driver. Check "representation_gap".
ValidationReport verify_representation(const Evaluation& E, const RecoveredGenerator& g_rec, int trials,
                                       std::uint64_t seed, const VerifyOptions& options);

/// Discrete L2 distance over lattice steps [0, N) and the grid points of `grid`.
double level_distance(const BinomialTree& tree, const Generator& a, const Generator& b,
                      const RecoveryGrid& grid);

}  // namespace gbsde
