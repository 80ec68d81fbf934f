#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gbsde/bsde_solver.hpp"
#include "gbsde/report.hpp"

namespace gbsde {

/// A filtration-consistent nonlinear evaluation on a binomial lattice.
///
/// Either backed by a known driver (values come from `solve`) or by an opaque
/// oracle. Both kinds carry the domination pair (mu, phi) that the structural
/// checks and the fixed-point machinery rely on; it is declared, never inferred.
class Evaluation {
public:
    /// Values on [tau.start_step, tau.cap_step] of E_{k ^ tau, tau}[X; K], equal
    /// to X wherever tau has stopped.
    using Oracle = std::function<Process(const LatticeStoppingTime& tau, const Process& terminal,
                                         const IntegrandK& K)>;

    static Evaluation generator_backed(const BinomialTree& tree, Generator g,
                                       SolverSettings settings = {});
    /// `serial` oracles are never entered concurrently.
    static Evaluation black_box(const BinomialTree& tree, Oracle oracle, double dominating_mu,
                                Modulus dominating_phi, bool serial = false);

    const BinomialTree& tree() const { return tree_; }
    double dominating_mu() const { return mu_; }
    const Modulus& dominating_phi() const { return phi_; }
    bool is_generator_backed() const { return generator_.has_value(); }
    /// The backing driver; empty for black boxes.
    const std::optional<Generator>& generator() const { return generator_; }

    /// Full backward window for the stopping time tau.
    Process window(const LatticeStoppingTime& tau, const Process& terminal,
                   const IntegrandK& K = IntegrandK::zero()) const;

    /// Same evaluation with its backend hidden behind an oracle.
    Evaluation as_black_box() const;

private:
    Evaluation(const BinomialTree& tree, Oracle oracle, double mu, Modulus phi,
               std::optional<Generator> g);

    BinomialTree tree_;
    Oracle oracle_;
    double mu_;
    Modulus phi_;
    std::optional<Generator> generator_;
};

/// E^{mu,phi} (sign +1) or E^{-mu,-phi} (sign -1) on the same lattice.
Evaluation dominating_evaluation(const Evaluation& E, int sign);

/// E_{s,t}[X; K] at every node of step s. Throws ParameterError when s > t.
std::vector<double> evaluate(const Evaluation& E, int s_step, int t_step, const Process& X,
                             const IntegrandK& K = IntegrandK::zero());

/// E_{k ^ tau, tau}[X; K] on tau's window; read it at sigma's stopping nodes.
/// Throws PreconditionError unless sigma <= tau on every path.
Process evaluate_stopped(const Evaluation& E, const LatticeStoppingTime& sigma,
                         const LatticeStoppingTime& tau, const Process& X,
                         const IntegrandK& K = IntegrandK::zero());

struct PropertyOptions {
    double tolerance = 1e-10;
    double claim_scale = 1.0;  // random claims are uniform in [-scale, scale]
};

/// Randomized checks: "monotonicity", "identity", "consistency", "zero_one_law",
/// "h2_zero", "h3_zero_one".
///
/// On a recombining lattice, 1_A xi for A in F_s is not a node function of the
/// terminal step. Both 0-1 law forms are checked node by node instead: at
/// v in A the value must not change when xi is cut down to the descendants of
/// v; at v outside A the value of a claim vanishing on v's descendants must be 0.
ValidationReport check_axioms(const Evaluation& E, int trials, std::uint64_t seed,
                              const PropertyOptions& options = {});

/// Randomized two-sided sandwich
/// E^{-mu,-phi}[X-X'; K-K'] <= E[X;K] - E[X';K'] <= E^{mu,phi}[X-X'; K-K'].
ValidationReport check_domination(const Evaluation& E, int trials, std::uint64_t seed,
                                  const PropertyOptions& options = {});

/// |E_{s,t}[X]| <= E^{mu,phi}_{s,t}[|X|] at every node of steps [0, t].
ValidationReport absolute_bound(const Evaluation& E, const Process& X, int t_step,
                                double tolerance = 1e-10);

enum class MartingaleKind { martingale, supermartingale, submartingale, none };

std::string to_string(MartingaleKind kind);

struct MartingaleVerdict {
    MartingaleKind kind = MartingaleKind::none;
    // Largest |E_{s,t}[Y_t; K] - Y_s| against the verdict's allowed direction.
    double worst_violation = 0.0;
    double max_excess = 0.0;   // max of E_{s,t}[Y_t;K] - Y_s
    double max_deficit = 0.0;  // max of Y_s - E_{s,t}[Y_t;K]
    int witness_s = 0;
    int witness_t = 0;
    int witness_node = 0;
};

struct ClassifyOptions {
    int stride = 1;
    double tolerance = 1e-9;
    int first_step = 0;
    int last_step = -1;  // -1: last step of Y
};

/// Compares E_{s,t}[Y_t; K] with Y_s for all strided step pairs s < t.
MartingaleVerdict classify(const Evaluation& E, const Process& Y,
                           const IntegrandK& K = IntegrandK::zero(), const ClassifyOptions& options = {});

/// E_{sigma,tau}[Y_tau; K] <= Y_sigma at every node where sigma has stopped.
ValidationReport optional_stopping_check(const Evaluation& E, const Process& Y,
                                         const LatticeStoppingTime& sigma,
                                         const LatticeStoppingTime& tau,
                                         const IntegrandK& K = IntegrandK::zero(),
                                         double tolerance = 1e-9);

}  // namespace gbsde
