#include "gbsde/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "gbsde/errors.hpp"

namespace gbsde {

namespace {

int report_node(const LatticeStoppingTime& tau) {
    if (tau.barrier && tau.barrier->anchor_step == tau.start_step) return tau.barrier->anchor_node;
    return tau.start_step / 2;
}

// Backward path statistics of A_tau = sum gamma dt and of sum Z^2 dt.
void path_statistics(PenalizationIterate& it, const LatticeStoppingTime& tau, double dt) {
    const int first = tau.start_step;
    const int last = tau.cap_step;
    std::vector<double> m(last + 1, 0.0), s(last + 1, 0.0), hi(last + 1, 0.0), lo(last + 1, 0.0),
        q(last + 1, 0.0);
    std::vector<double> m2(last + 1), s2(last + 1), hi2(last + 1), lo2(last + 1), q2(last + 1);
    for (int k = last - 1; k >= first; --k) {
        for (int j = 0; j <= k; ++j) {
            if (tau.stopped(k, j)) {
                m2[j] = s2[j] = hi2[j] = lo2[j] = q2[j] = 0.0;
                continue;
            }
            const double inc = it.gamma.at(k, j) * dt;
            const double em = 0.5 * (m[j] + m[j + 1]);
            m2[j] = inc + em;
            s2[j] = inc * inc + 2.0 * inc * em + 0.5 * (s[j] + s[j + 1]);
            hi2[j] = inc + std::max(hi[j], hi[j + 1]);
            lo2[j] = inc + std::min(lo[j], lo[j + 1]);
            const double z = it.Z.at(k, j);
            q2[j] = z * z * dt + 0.5 * (q[j] + q[j + 1]);
        }
        std::swap(m, m2);
        std::swap(s, s2);
        std::swap(hi, hi2);
        std::swap(lo, lo2);
        std::swap(q, q2);
    }
    const int v = report_node(tau);
    it.a_square_mean = s[v];
    it.a_terminal_max = hi[v];
    it.a_terminal_min = lo[v];
    it.z_energy = q[v];
}

double sup_gap_window(const Process& a, const Process& b, const LatticeStoppingTime& tau) {
    double m = 0.0;
    for (int k = tau.start_step; k <= tau.cap_step; ++k) {
        for (int j = 0; j <= k; ++j) m = std::max(m, std::abs(a.at(k, j) - b.at(k, j)));
    }
    return m;
}

double dominated_driver_bound(double mu, const Modulus& phi, double y, double z) {
    return mu * std::abs(y) + phi(std::abs(z));
}

}  // namespace

double max_penalty(const BinomialTree& tree, double mu) {
    return 0.5 / (tree.dt() * std::exp(mu * tree.dt()));
}

std::vector<double> default_schedule(const BinomialTree& tree, double mu) {
    const double cap = max_penalty(tree, mu);
    std::vector<double> out;
    for (double n = 1.0; n <= cap; n *= 2.0) out.push_back(n);
    return out;
}

PenalizationIterate penalize(const Evaluation& E, const Process& Y, const LatticeStoppingTime& tau,
                             double n, const PenalizeOptions& options) {
    if (!(n >= 0.0) || !std::isfinite(n)) throw ParameterError("penalize: n must be finite and >= 0");
    if (!Y.covers(tau.start_step) || !Y.covers(tau.cap_step)) {
        throw ShapeError("penalize: Y must cover the window of tau");
    }
    const auto& tree = E.tree();
    const double dt = tree.dt();
    const int first = tau.start_step;
    const int last = tau.cap_step;

    PenalizationIterate it;
    it.n = n;
    EDrivenProblem problem{E,
                           [&Y, n](int k, int j, double y) { return n * (Y.at(k, j) - y); },
                           n, Y, tau};
    FixedPointOptions fp;
    fp.tolerance = options.tolerance;
    fp.initial = options.initial;
    const EBsdeSolution sol = solve_e_bsde(problem, fp);
    it.y = sol.y;
    it.picard_iterations = sol.trace.iterations;

    it.gamma = Process(tree, first, last);
    it.g = Process(tree, first, last);
    it.Z = Process(tree, first, last);
    const double inv = 1.0 / (2.0 * tree.increment());
    for (int k = first; k <= last; ++k) {
        for (int j = 0; j <= k; ++j) {
            it.residual = std::max(it.residual, std::abs(Y.at(k, j) - it.y.at(k, j)));
            if (tau.stopped(k, j)) continue;
            const double up = it.y.at(k + 1, j + 1);
            const double down = it.y.at(k + 1, j);
            const double gamma = n * (Y.at(k, j) - it.y.at(k, j));
            it.gamma.at(k, j) = gamma;
            it.Z.at(k, j) = (up - down) * inv;
            it.g.at(k, j) = (it.y.at(k, j) - 0.5 * (up + down) - gamma * dt) / dt;
        }
    }
    path_statistics(it, tau, dt);
    return it;
}

DecompositionResult doob_meyer(const Evaluation& E, const Process& Y, const LatticeStoppingTime& tau,
                               const DoobMeyerOptions& options) {
    const auto& tree = E.tree();
    std::vector<double> schedule = options.schedule;
    if (schedule.empty()) schedule = default_schedule(tree, E.dominating_mu());
    if (schedule.empty()) throw ParameterError("doob_meyer: lattice too coarse for any penalty level");
    for (std::size_t i = 1; i < schedule.size(); ++i) {
        if (!(schedule[i] > schedule[i - 1])) throw ParameterError("doob_meyer: schedule must ascend");
    }
    const double target =
        options.target_residual.value_or(1e-4 * Y.sup_norm(tau.start_step, tau.cap_step));

    DecompositionResult out;
    bool reached = false;
    for (double n : schedule) {
        PenalizeOptions po;
        po.tolerance = options.picard_tolerance;
        po.initial = out.iterates.empty() ? Y : out.iterates.back().y;
        out.iterates.push_back(penalize(E, Y, tau, n, po));
        out.levels_used.push_back(n);
        out.residuals.push_back(out.iterates.back().residual);
        if (out.iterates.back().residual <= target) {
            reached = true;
            break;
        }
    }
    if (!reached && options.require_target) {
        std::ostringstream os;
        os << "doob_meyer: residual " << out.residuals.back() << " above target " << target
           << " after n = " << out.levels_used.back();
        throw TargetNotReached(os.str(), out.levels_used, out.residuals);
    }
    const auto& last = out.iterates.back();
    out.A_density = last.gamma;
    out.g_proc = last.g;
    out.Z = last.Z;
    out.y = last.y;
    out.residual = last.residual;
    if (!options.run_checks) return out;

    out.report = check_penalization(out.iterates, Y, tau);

    auto& bound = out.report.add("driver_bound");
    bound.worst_violation = -std::numeric_limits<double>::infinity();
    for (int k = tau.start_step; k < tau.cap_step; ++k) {
        for (int j = 0; j <= k; ++j) {
            if (tau.stopped(k, j)) continue;
            const double v = std::abs(out.g_proc.at(k, j)) -
                             dominated_driver_bound(E.dominating_mu(), E.dominating_phi(),
                                                    out.y.at(k, j), out.Z.at(k, j));
            if (v > bound.worst_violation) bound.worst_violation = v;
            if (v > options.driver_bound_tolerance && bound.passed) {
                bound.passed = false;
                std::ostringstream os;
                os << "step=" << k << " node=" << j << " g=" << out.g_proc.at(k, j);
                bound.witness = os.str();
            }
        }
    }

    const double allowed = options.identity_factor * out.residual + 1e-10;
    auto& ident = out.report.add("martingale_identity");
    const IntegrandK K = IntegrandK::from_density(out.A_density);
    const int span = tau.cap_step - tau.start_step;
    const int stride = std::max(1, span / std::max(1, options.identity_windows));
    for (int t = tau.cap_step; t > tau.start_step; t -= stride) {
        const Process w = E.window(tau.capped(t), Y, K);
        for (int k = tau.start_step; k <= t; ++k) {
            for (int j = 0; j <= k; ++j) {
                const double gap = std::abs(w.at(k, j) - Y.at(k, j));
                if (gap > ident.worst_violation) ident.worst_violation = gap;
                if (gap > allowed && ident.passed) {
                    ident.passed = false;
                    std::ostringstream os;
                    os << "s=" << k << " t=" << t << " node=" << j << " gap=" << gap;
                    ident.witness = os.str();
                }
            }
        }
    }
    std::ostringstream os;
    os << "allowed gap " << allowed;
    ident.detail = os.str();
    return out;
}

ValidationReport check_uniform_bounds(const std::vector<PenalizationIterate>& iterates, double factor,
                                      std::optional<double> bound) {
    if (iterates.size() < 2) throw ParameterError("check_uniform_bounds: need at least two iterates");
    ValidationReport report;
    auto run = [&](const char* name, auto value) {
        auto& c = report.add(name);
        const double cap = bound.value_or(factor * value(iterates.front()) + 1e-12);
        std::ostringstream seq;
        c.worst_violation = -std::numeric_limits<double>::infinity();
        for (const auto& it : iterates) {
            const double v = value(it);
            seq << (&it == &iterates.front() ? "" : ",") << v;
            const double excess = std::isfinite(v) ? v - cap : std::numeric_limits<double>::infinity();
            c.worst_violation = std::max(c.worst_violation, excess);
            if (excess > 0.0 && c.passed) {
                c.passed = false;
                c.witness = "n=" + std::to_string(it.n);
            }
        }
        c.detail = "bound " + std::to_string(cap) + "; sequence " + seq.str();
    };
    run("z_energy_bounded", [](const PenalizationIterate& it) { return it.z_energy; });
    run("a_square_bounded", [](const PenalizationIterate& it) { return it.a_square_mean; });
    return report;
}

ValidationReport check_penalization(const std::vector<PenalizationIterate>& iterates, const Process& Y,
                                    const LatticeStoppingTime& tau, double tolerance) {
    ValidationReport report;
    report.add("a_nondecreasing");
    report.add("monotone_in_n");
    auto& inc = report.checks[0];
    auto& mono = report.checks[1];
    inc.worst_violation = mono.worst_violation = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < iterates.size(); ++i) {
        const auto& it = iterates[i];
        for (int k = tau.start_step; k <= tau.cap_step; ++k) {
            for (int j = 0; j <= k; ++j) {
                const double neg = -it.gamma.at(k, j);
                if (neg > inc.worst_violation) inc.worst_violation = neg;
                if (neg > 1e-12 && inc.passed) {
                    inc.passed = false;
                    inc.witness = "n=" + std::to_string(it.n) + " step=" + std::to_string(k) +
                                  " node=" + std::to_string(j);
                }
                double v = it.y.at(k, j) - Y.at(k, j);
                if (i > 0) v = std::max(v, iterates[i - 1].y.at(k, j) - it.y.at(k, j));
                if (v > mono.worst_violation) mono.worst_violation = v;
                if (v > tolerance && mono.passed) {
                    mono.passed = false;
                    mono.witness = "n=" + std::to_string(it.n) + " step=" + std::to_string(k) +
                                   " node=" + std::to_string(j);
                }
            }
        }
    }
    return report;
}

Generator node_driver(const Process& g) {
    return Generator("node_table",
                     Generator::Driver([g](const NodeTime& at, double, double) {
                         return g.at(at.step, at.node);
                     }),
                     0.0, Modulus::zero(), false, 0.0);
}

double reproduction_gap(const BinomialTree& tree, const DecompositionResult& result, const Process& Y,
                        const LatticeStoppingTime& tau) {
    const Solution s = solve(tree, node_driver(result.g_proc), Y,
                             IntegrandK::from_density(result.A_density), tau);
    return sup_gap_window(s.Y, Y, tau);
}

ValidationReport check_driver_transfer(const DecompositionResult& a, const DecompositionResult& b,
                                       const LatticeStoppingTime& tau, double mu, const Modulus& phi,
                                       double tolerance) {
    ValidationReport report;
    auto& c = report.add("driver_transfer");
    c.worst_violation = -std::numeric_limits<double>::infinity();
    for (int k = tau.start_step; k < tau.cap_step; ++k) {
        for (int j = 0; j <= k; ++j) {
            if (tau.stopped(k, j)) continue;
            const double v = std::abs(a.g_proc.at(k, j) - b.g_proc.at(k, j)) -
                             (mu * std::abs(a.y.at(k, j) - b.y.at(k, j)) +
                              phi(std::abs(a.Z.at(k, j) - b.Z.at(k, j))));
            if (v > c.worst_violation) c.worst_violation = v;
            if (v > tolerance && c.passed) {
                c.passed = false;
                c.witness = "step=" + std::to_string(k) + " node=" + std::to_string(j);
            }
        }
    }
    return report;
}

}  // namespace gbsde
