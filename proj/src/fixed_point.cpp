#include "gbsde/fixed_point.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "gbsde/errors.hpp"

namespace gbsde {

namespace {

// Picard sweeps stop well below the requested tolerance so that errors carried
// across patched pieces stay inside it.
constexpr double kInnerFactor = 1.0 / 64.0;

double stopped_value(const EDrivenProblem& p, int k, int j) {
    if (!p.X.covers(k)) {
        std::ostringstream os;
        os << "fixed point: terminal missing at step " << k;
        throw ShapeError(os.str());
    }
    return p.X.at(k, j);
}

// E over the piece [a, b] with terminal y at step b and forcing f(y).
Process piece_map(const EDrivenProblem& p, int a, int b, const Process& y) {
    const auto& tree = p.E.tree();
    const LatticeStoppingTime tau = p.tau.started_at(a).capped(b);
    Process terminal(tree, a, b);
    Process gamma(tree, a, b);
    for (int k = a; k <= b; ++k) {
        for (int j = 0; j <= k; ++j) {
            if (k == b) {
                terminal.at(k, j) = y.at(k, j);
            } else if (tau.stopped(k, j)) {
                terminal.at(k, j) = stopped_value(p, k, j);
            } else {
                gamma.at(k, j) = p.f(k, j, y.at(k, j));
            }
        }
    }
    return p.E.window(tau, terminal, IntegrandK::from_density(std::move(gamma)));
}

double sup_gap(const Process& a, const Process& b, int first, int last) {
    double m = 0.0;
    for (int k = first; k <= last; ++k) {
        for (int j = 0; j <= k; ++j) m = std::max(m, std::abs(a.at(k, j) - b.at(k, j)));
    }
    return m;
}

void check_problem(const EDrivenProblem& p) {
    if (!p.f) throw ParameterError("fixed point: empty forcing");
    if (!(p.lambda >= 0.0) || !std::isfinite(p.lambda)) {
        throw ParameterError("fixed point: lambda must be finite and >= 0");
    }
    const int n = p.E.tree().steps();
    if (p.tau.start_step < 0 || p.tau.start_step > p.tau.cap_step || p.tau.cap_step > n) {
        throw ParameterError("fixed point: window outside the lattice");
    }
}

std::vector<int> make_partition(int first, int last, int piece) {
    std::vector<int> cuts{last};
    while (cuts.back() > first) cuts.push_back(std::max(first, cuts.back() - piece));
    std::reverse(cuts.begin(), cuts.end());
    return cuts;
}

}  // namespace

EDrivenProblem make_problem(Evaluation E, EDrivenProblem::Forcing f, double lambda, Process X,
                            int first_step, int last_step) {
    return EDrivenProblem{std::move(E), std::move(f), lambda, std::move(X),
                          LatticeStoppingTime::deterministic(first_step, last_step)};
}

double contraction_horizon(double lambda, double mu) {
    if (lambda <= 0.0) return std::numeric_limits<double>::infinity();
    auto h = [&](double b) { return lambda * b * std::exp(mu * b) - 0.5; };
    double lo = 0.0;
    double hi = 1.0;
    while (h(hi) < 0.0) hi *= 2.0;
    for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        (h(mid) <= 0.0 ? lo : hi) = mid;
    }
    return lo;
}

int contraction_piece_steps(double lambda, double mu, double dt, int max_steps) {
    auto ok = [&](int L) { return lambda * L * dt * std::exp(mu * L * dt) <= 0.5; };
    if (!ok(1)) {
        std::ostringstream os;
        os << "no contractive piece: lambda dt exp(mu dt) = " << lambda * dt * std::exp(mu * dt)
           << " > 1/2; refine the lattice";
        throw NonContractionError(os.str());
    }
    int L = 1;
    while (L < max_steps && ok(L + 1)) ++L;
    return std::max(1, std::min(L, max_steps));
}

Process picard_map(const EDrivenProblem& problem, const Process& y) {
    check_problem(problem);
    return piece_map(problem, problem.tau.start_step, problem.tau.cap_step, [&] {
        Process full = y;
        const int b = problem.tau.cap_step;
        for (int j = 0; j <= b; ++j) full.at(b, j) = stopped_value(problem, b, j);
        return full;
    }());
}

EBsdeSolution solve_e_bsde(const EDrivenProblem& problem, const FixedPointOptions& options) {
    check_problem(problem);
    if (!(options.tolerance > 0.0)) throw ParameterError("solve_e_bsde: tolerance must be > 0");
    if (options.max_iterations < 1) throw ParameterError("solve_e_bsde: max_iterations must be >= 1");
    const auto& tree = problem.E.tree();
    const auto& tau = problem.tau;
    const int first = tau.start_step;
    const int last = tau.cap_step;

    EBsdeSolution out;
    out.y = Process(tree, first, last);
    if (options.initial) {
        if (!options.initial->covers(first) || !options.initial->covers(last)) {
            throw ShapeError("solve_e_bsde: initial guess must cover the window");
        }
        for (int k = first; k <= last; ++k) {
            for (int j = 0; j <= k; ++j) out.y.at(k, j) = options.initial->at(k, j);
        }
    }
    for (int k = first; k <= last; ++k) {
        for (int j = 0; j <= k; ++j) {
            if (tau.stopped(k, j)) out.y.at(k, j) = stopped_value(problem, k, j);
        }
    }
    if (first == last) {
        out.trace.partition = {first};
        return out;
    }

    int piece = 0;
    if (options.piece_steps) {
        if (*options.piece_steps < 1) throw ParameterError("solve_e_bsde: piece_steps must be >= 1");
        piece = *options.piece_steps;
    } else {
        piece = contraction_piece_steps(problem.lambda, problem.E.dominating_mu(), tree.dt(),
                                        last - first);
    }
    out.trace.partition = make_partition(first, last, piece);
    const double inner_tol = options.tolerance * kInnerFactor;

    const auto& cuts = out.trace.partition;
    for (int p = static_cast<int>(cuts.size()) - 2; p >= 0; --p) {
        const int a = cuts[p];
        const int b = cuts[p + 1];
        double previous = -1.0;
        bool settled = false;
        for (int it = 0; it < options.max_iterations; ++it) {
            const Process next = piece_map(problem, a, b, out.y);
            const double change = sup_gap(next, out.y, a, b);
            for (int k = a; k < b; ++k) {
                for (int j = 0; j <= k; ++j) out.y.at(k, j) = next.at(k, j);
            }
            auto& tr = out.trace;
            tr.piece_of_iteration.push_back(p);
            tr.iterate_norms.push_back(out.y.sup_norm(a, b));
            tr.changes.push_back(change);
            if (previous > 0.0) tr.contraction_ratios.push_back(change / previous);
            ++tr.iterations;
            previous = change;
            if (change <= inner_tol) {
                settled = true;
                break;
            }
        }
        if (!settled) {
            std::ostringstream os;
            os << "solve_e_bsde: piece [" << a << ", " << b << "] still moving by " << previous
               << " after " << options.max_iterations << " sweeps";
            throw ConvergenceError(os.str());
        }
    }
    return out;
}

double measure_contraction(const EDrivenProblem& problem, const Process& y1, const Process& y2) {
    const int first = problem.tau.start_step;
    const int last = problem.tau.cap_step;
    const double denom = sup_gap(y1, y2, first, last);
    if (denom == 0.0) return 0.0;
    const Process i1 = picard_map(problem, y1);
    const Process i2 = picard_map(problem, y2);
    return sup_gap(i1, i2, first, last) / denom;
}

double fixed_point_defect(const EDrivenProblem& problem, const Process& y,
                          const std::vector<int>& partition) {
    check_problem(problem);
    double worst = 0.0;
    for (std::size_t p = 0; p + 1 < partition.size(); ++p) {
        const int a = partition[p];
        const int b = partition[p + 1];
        worst = std::max(worst, sup_gap(piece_map(problem, a, b, y), y, a, b));
    }
    return worst;
}

ValidationReport check_forcing(const EDrivenProblem& problem, int samples, std::uint64_t seed,
                               double radius) {
    check_problem(problem);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> value(-radius, radius);
    const int first = problem.tau.start_step;
    const int last = std::max(first, problem.tau.cap_step - 1);
    std::uniform_int_distribution<int> step(first, last);
    ValidationReport report;
    auto& c = report.add("forcing_lipschitz");
    c.worst_violation = -std::numeric_limits<double>::infinity();
    for (int s = 0; s < samples; ++s) {
        const int k = step(rng);
        const int j = std::uniform_int_distribution<int>(0, k)(rng);
        const double y1 = value(rng);
        const double y2 = value(rng);
        const double f1 = problem.f(k, j, y1);
        const double f2 = problem.f(k, j, y2);
        const double slack = std::abs(f1 - f2) - problem.lambda * std::abs(y1 - y2);
        const double allowed = 1e-12 * (1.0 + std::abs(f1) + std::abs(f2));
        if (slack > c.worst_violation) c.worst_violation = slack;
        if (slack > allowed && c.passed) {
            c.passed = false;
            std::ostringstream os;
            os << "step=" << k << " node=" << j << " y1=" << y1 << " y2=" << y2;
            c.witness = os.str();
        }
    }
    return report;
}

ValidationReport compare_e_bsde(const EDrivenProblem& problem, const EDrivenProblem& problem_bar,
                                const FixedPointOptions& options, double tolerance) {
    const auto& tau = problem.tau;
    for (int k = tau.start_step; k <= tau.cap_step; ++k) {
        for (int j = 0; j <= k; ++j) {
            if (!tau.stopped(k, j)) continue;
            if (stopped_value(problem_bar, k, j) < stopped_value(problem, k, j)) {
                throw PreconditionError("compare_e_bsde: need Xbar >= X");
            }
        }
    }
    const Process y = solve_e_bsde(problem, options).y;
    const Process ybar = solve_e_bsde(problem_bar, options).y;
    ValidationReport report;
    auto& c = report.add("e_bsde_comparison");
    c.worst_violation = -std::numeric_limits<double>::infinity();
    for (int k = tau.start_step; k <= tau.cap_step; ++k) {
        for (int j = 0; j <= k; ++j) {
            const double v = y.at(k, j) - ybar.at(k, j);
            if (v > c.worst_violation) c.worst_violation = v;
            if (v > tolerance && c.passed) {
                c.passed = false;
                std::ostringstream os;
                os << "step=" << k << " node=" << j << " y=" << y.at(k, j) << " ybar=" << ybar.at(k, j);
                c.witness = os.str();
            }
        }
    }
    return report;
}

}  // namespace gbsde
