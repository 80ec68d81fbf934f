#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "gbsde/evaluation.hpp"

namespace gbsde {

/// y = E_{k ^ tau, tau}[X; int f(r, y_r) dr] for an abstract evaluation E.
struct EDrivenProblem {
    using Forcing = std::function<double(int step, int node, double y)>;

    Evaluation E;
    Forcing f;
    double lambda = 0.0;  // Lipschitz constant of f in y
    Process X;            // read at the nodes where tau stops
    LatticeStoppingTime tau;
};

/// Deterministic horizon [first_step, last_step]; X must cover last_step.
EDrivenProblem make_problem(Evaluation E, EDrivenProblem::Forcing f, double lambda, Process X,
                            int first_step, int last_step);

struct FixedPointOptions {
    double tolerance = 1e-10;
    int max_iterations = 60;
    // Piece length in steps; unset means the longest contractive piece.
    std::optional<int> piece_steps;
    // Starting guess on the whole window; unset means y0 = 0.
    std::optional<Process> initial;
};

struct PicardTrace {
    std::vector<int> partition;             // ascending piece boundaries
    std::vector<int> piece_of_iteration;    // piece index of each sweep
    std::vector<double> iterate_norms;      // sup norm of each iterate
    std::vector<double> changes;            // sup-norm change of each sweep
    std::vector<double> contraction_ratios; // change ratio of consecutive sweeps within a piece
    int iterations = 0;
};

struct EBsdeSolution {
    Process y;
    PicardTrace trace;
};

/// Largest beta with lambda * beta * exp(mu * beta) = 1/2 (infinity when lambda == 0).
double contraction_horizon(double lambda, double mu);

/// Largest L with lambda L dt exp(mu L dt) <= 1/2, capped at `max_steps`.
/// Throws NonContractionError when even one step fails the criterion.
int contraction_piece_steps(double lambda, double mu, double dt, int max_steps);

/// Picard iteration on a right-to-left partition of the window.
/// Throws ConvergenceError when a piece does not settle within the iteration budget.
EBsdeSolution solve_e_bsde(const EDrivenProblem& problem, const FixedPointOptions& options = {});

/// One application of I on the whole window: E[X; int f(r, y_r) dr].
Process picard_map(const EDrivenProblem& problem, const Process& y);

/// ||I(y1) - I(y2)|| / ||y1 - y2|| over the window (0 when y1 == y2).
double measure_contraction(const EDrivenProblem& problem, const Process& y1, const Process& y2);

/// Largest |y - E_{piece}[y_end; int f(y)]| over all pieces of `partition`.
double fixed_point_defect(const EDrivenProblem& problem, const Process& y,
                          const std::vector<int>& partition);

/// Sampled |f(k,j,y1) - f(k,j,y2)| <= lambda |y1 - y2|, check "forcing_lipschitz".
ValidationReport check_forcing(const EDrivenProblem& problem, int samples, std::uint64_t seed,
                               double radius = 10.0);

/// Solves both problems and checks ybar >= y - tolerance, check "e_bsde_comparison".
/// Throws PreconditionError unless Xbar >= X on the stopping nodes.
ValidationReport compare_e_bsde(const EDrivenProblem& problem, const EDrivenProblem& problem_bar,
                                const FixedPointOptions& options = {}, double tolerance = 1e-9);

}  // namespace gbsde
