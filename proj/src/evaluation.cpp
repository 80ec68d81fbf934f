#include "gbsde/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <random>
#include <sstream>

#include "gbsde/errors.hpp"

namespace gbsde {

Evaluation::Evaluation(const BinomialTree& tree, Oracle oracle, double mu, Modulus phi,
                       std::optional<Generator> g)
    : tree_(tree), oracle_(std::move(oracle)), mu_(mu), phi_(std::move(phi)), generator_(std::move(g)) {}

Evaluation Evaluation::generator_backed(const BinomialTree& tree, Generator g, SolverSettings settings) {
    Oracle oracle = [tree, g, settings](const LatticeStoppingTime& tau, const Process& terminal,
                                        const IntegrandK& K) {
        return solve(tree, g, terminal, K, tau, settings).Y;
    };
    const double mu = g.mu();
    Modulus phi = g.phi();
    return Evaluation(tree, std::move(oracle), mu, std::move(phi), std::move(g));
}

Evaluation Evaluation::black_box(const BinomialTree& tree, Oracle oracle, double dominating_mu,
                                 Modulus dominating_phi, bool serial) {
    if (!oracle) throw ParameterError("black_box: empty oracle");
    if (serial) {
        auto mutex = std::make_shared<std::mutex>();
        oracle = [inner = std::move(oracle), mutex](const LatticeStoppingTime& tau,
                                                    const Process& terminal, const IntegrandK& K) {
            std::lock_guard<std::mutex> lock(*mutex);
            return inner(tau, terminal, K);
        };
    }
    return Evaluation(tree, std::move(oracle), dominating_mu, std::move(dominating_phi), std::nullopt);
}

Process Evaluation::window(const LatticeStoppingTime& tau, const Process& terminal,
                           const IntegrandK& K) const {
    return oracle_(tau, terminal, K);
}

Evaluation Evaluation::as_black_box() const {
    return black_box(tree_, oracle_, mu_, phi_);
}

Evaluation dominating_evaluation(const Evaluation& E, int sign) {
    return Evaluation::generator_backed(E.tree(), make_mu_phi(E.dominating_mu(), E.dominating_phi(), sign));
}

std::vector<double> evaluate(const Evaluation& E, int s_step, int t_step, const Process& X,
                             const IntegrandK& K) {
    if (s_step > t_step || s_step < 0 || t_step > E.tree().steps()) {
        throw ParameterError("evaluate: need 0 <= s <= t <= N");
    }
    if (!X.covers(t_step)) throw ShapeError("evaluate: claim missing at step t");
    if (s_step == t_step) {
        const auto v = X.step(t_step);
        return {v.begin(), v.end()};
    }
    const Process w = E.window(LatticeStoppingTime::deterministic(s_step, t_step), X, K);
    const auto v = w.step(s_step);
    return {v.begin(), v.end()};
}

Process evaluate_stopped(const Evaluation& E, const LatticeStoppingTime& sigma,
                         const LatticeStoppingTime& tau, const Process& X, const IntegrandK& K) {
    if (!precedes(E.tree(), sigma, tau)) {
        throw PreconditionError("evaluate_stopped: sigma must not exceed tau");
    }
    return E.window(tau, X, K);
}

namespace {

struct Rng {
    explicit Rng(std::uint64_t seed) : engine(seed) {}
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine); }
    bool coin() { return integer(0, 1) == 1; }
    std::mt19937_64 engine;
};

Process random_claim(const BinomialTree& tree, int t, double scale, Rng& rng) {
    Process x(tree, t, t);
    for (double& v : x.step(t)) v = rng.uniform(-scale, scale);
    return x;
}

Process random_density(const BinomialTree& tree, double scale, Rng& rng) {
    Process g(tree);
    for (double& v : g.values()) v = rng.uniform(-scale, scale);
    return g;
}

std::string node_witness(const char* what, int s, int t, int j, double gap) {
    std::ostringstream os;
    os.precision(6);
    os << what << " s=" << s << " t=" << t << " node=" << j << " gap=" << gap;
    return os.str();
}

void record(CheckResult& c, double violation, double tolerance, const std::string& witness) {
    if (violation > c.worst_violation) {
        c.worst_violation = violation;
        if (violation > tolerance && c.passed) {
            c.passed = false;
            c.witness = witness;
        }
    }
}

// s < t with t >= 1.
std::pair<int, int> random_pair(int n, Rng& rng) {
    const int t = rng.integer(1, n);
    return {rng.integer(0, t - 1), t};
}

}  // namespace

ValidationReport check_axioms(const Evaluation& E, int trials, std::uint64_t seed,
                              const PropertyOptions& options) {
    if (trials < 1) throw ParameterError("check_axioms: trials must be >= 1");
    const auto& tree = E.tree();
    const int n = tree.steps();
    const double tol = options.tolerance;
    Rng rng(seed);
    ValidationReport report;
    for (const char* name : {"monotonicity", "identity", "consistency", "zero_one_law", "h2_zero",
                             "h3_zero_one"}) {
        report.add(name);
    }
    auto& mono = report.checks[0];
    auto& ident = report.checks[1];
    auto& cons = report.checks[2];
    auto& zero_one = report.checks[3];
    auto& h2 = report.checks[4];
    auto& h3 = report.checks[5];

    for (int trial = 0; trial < trials; ++trial) {
        const auto [s, t] = random_pair(n, rng);
        const Process x = random_claim(tree, t, options.claim_scale, rng);

        // (i) monotonicity
        Process bigger = x;
        for (double& v : bigger.step(t)) v += rng.uniform(0.0, options.claim_scale);
        const auto ex = evaluate(E, s, t, x);
        const auto eb = evaluate(E, s, t, bigger);
        for (int j = 0; j <= s; ++j) {
            record(mono, ex[j] - eb[j], tol, node_witness("monotonicity", s, t, j, ex[j] - eb[j]));
        }

        // (ii) E_{t,t} = id
        const auto et = evaluate(E, t, t, x);
        for (int j = 0; j <= t; ++j) {
            const double gap = std::abs(et[j] - x.at(t, j));
            record(ident, gap, tol, node_witness("identity", t, t, j, gap));
        }

        // (iii) E_{r,s} E_{s,t} = E_{r,t}
        const int r = rng.integer(0, s);
        const auto inner = evaluate(E, s, t, x);
        Process mid(tree, s, s);
        std::copy(inner.begin(), inner.end(), mid.step(s).begin());
        const auto nested = evaluate(E, r, s, mid);
        const auto direct = evaluate(E, r, t, x);
        for (int j = 0; j <= r; ++j) {
            const double gap = std::abs(nested[j] - direct[j]);
            record(cons, gap, tol, node_witness("consistency", r, t, j, gap));
        }

        // (H2) E_{s,t}[0] = 0
        const auto e0 = evaluate(E, s, t, Process(tree, t, t, 0.0));
        for (int j = 0; j <= s; ++j) {
            record(h2, std::abs(e0[j]), tol, node_witness("h2", s, t, j, e0[j]));
        }

        // 0-1 law and (H3), node by node over a random A in F_s.
        for (int v = 0; v <= s; ++v) {
            const bool in_a = rng.coin();
            const int lo = v;
            const int hi = v + (t - s);
            Process cut = x;
            for (int j = 0; j <= t; ++j) {
                const bool in_cone = j >= lo && j <= hi;
                if (in_a != in_cone) cut.at(t, j) = 0.0;
            }
            const double value = evaluate(E, s, t, cut)[v];
            if (in_a) {
                const double gap = std::abs(value - ex[v]);
                record(zero_one, gap, tol, node_witness("zero_one_law", s, t, v, gap));
                record(h3, gap, tol, node_witness("h3 in A", s, t, v, gap));
            } else {
                record(h3, std::abs(value), tol, node_witness("h3 outside A", s, t, v, value));
            }
        }
    }
    return report;
}

ValidationReport check_domination(const Evaluation& E, int trials, std::uint64_t seed,
                                  const PropertyOptions& options) {
    if (trials < 1) throw ParameterError("check_domination: trials must be >= 1");
    const auto& tree = E.tree();
    const Evaluation upper = dominating_evaluation(E, +1);
    const Evaluation lower = dominating_evaluation(E, -1);
    Rng rng(seed);
    ValidationReport report;
    report.add("upper_domination");
    report.add("lower_domination");
    auto& up = report.checks[0];
    auto& low = report.checks[1];
    up.worst_violation = low.worst_violation = -1.0;

    for (int trial = 0; trial < trials; ++trial) {
        const auto [s, t] = random_pair(tree.steps(), rng);
        const Process x = random_claim(tree, t, options.claim_scale, rng);
        Process xp = trial % 5 == 0 ? x : random_claim(tree, t, options.claim_scale, rng);
        const bool with_k = trial % 3 != 0;
        const IntegrandK k = with_k ? IntegrandK::from_density(random_density(tree, 1.0, rng))
                                    : IntegrandK::zero();
        const IntegrandK kp = with_k ? IntegrandK::from_density(random_density(tree, 1.0, rng))
                                     : IntegrandK::zero();

        Process dx(tree, t, t);
        for (int j = 0; j <= t; ++j) dx.at(t, j) = x.at(t, j) - xp.at(t, j);
        IntegrandK dk = IntegrandK::zero();
        if (with_k) {
            Process d(tree);
            for (std::size_t i = 0; i < d.values().size(); ++i) {
                d.values()[i] = k.gamma.values()[i] - kp.gamma.values()[i];
            }
            dk = IntegrandK::from_density(std::move(d));
        }
        const auto a = evaluate(E, s, t, x, k);
        const auto b = evaluate(E, s, t, xp, kp);
        const auto hi = evaluate(upper, s, t, dx, dk);
        const auto lo = evaluate(lower, s, t, dx, dk);
        for (int j = 0; j <= s; ++j) {
            const double diff = a[j] - b[j];
            record(up, diff - hi[j], options.tolerance, node_witness("upper", s, t, j, diff - hi[j]));
            record(low, lo[j] - diff, options.tolerance, node_witness("lower", s, t, j, lo[j] - diff));
        }
    }
    return report;
}

ValidationReport absolute_bound(const Evaluation& E, const Process& X, int t_step, double tolerance) {
    const auto& tree = E.tree();
    Process absx(tree, t_step, t_step);
    for (int j = 0; j <= t_step; ++j) absx.at(t_step, j) = std::abs(X.at(t_step, j));
    const auto tau = LatticeStoppingTime::deterministic(0, t_step);
    const Process value = E.window(tau, X);
    const Process bound = dominating_evaluation(E, +1).window(tau, absx);
    ValidationReport report;
    auto& c = report.add("absolute_bound");
    c.worst_violation = -1.0;
    for (int k = 0; k <= t_step; ++k) {
        for (int j = 0; j <= k; ++j) {
            const double v = std::abs(value.at(k, j)) - bound.at(k, j);
            record(c, v, tolerance, node_witness("absolute_bound", k, t_step, j, v));
        }
    }
    return report;
}

std::string to_string(MartingaleKind kind) {
    switch (kind) {
        case MartingaleKind::martingale: return "martingale";
        case MartingaleKind::supermartingale: return "supermartingale";
        case MartingaleKind::submartingale: return "submartingale";
        case MartingaleKind::none: return "none";
    }
    return "none";
}

MartingaleVerdict classify(const Evaluation& E, const Process& Y, const IntegrandK& K,
                           const ClassifyOptions& options) {
    if (options.stride < 1) throw ParameterError("classify: stride must be >= 1");
    const int first = std::max(options.first_step, Y.first_step());
    const int last = options.last_step < 0 ? Y.last_step() : std::min(options.last_step, Y.last_step());
    MartingaleVerdict v;
    int excess_at[3] = {0, 0, 0};
    int deficit_at[3] = {0, 0, 0};
    for (int t = first + options.stride; t <= last; t += options.stride) {
        const Process w = E.window(LatticeStoppingTime::deterministic(first, t), Y, K);
        for (int s = first; s < t; s += options.stride) {
            for (int j = 0; j <= s; ++j) {
                const double d = w.at(s, j) - Y.at(s, j);
                if (d > v.max_excess) {
                    v.max_excess = d;
                    excess_at[0] = s; excess_at[1] = t; excess_at[2] = j;
                }
                if (-d > v.max_deficit) {
                    v.max_deficit = -d;
                    deficit_at[0] = s; deficit_at[1] = t; deficit_at[2] = j;
                }
            }
        }
    }
    const double tol = options.tolerance;
    const int* witness = excess_at;
    if (v.max_excess <= tol && v.max_deficit <= tol) {
        v.kind = MartingaleKind::martingale;
        v.worst_violation = std::max(v.max_excess, v.max_deficit);
        if (v.max_deficit > v.max_excess) witness = deficit_at;
    } else if (v.max_excess <= tol) {
        v.kind = MartingaleKind::supermartingale;
        v.worst_violation = v.max_excess;
    } else if (v.max_deficit <= tol) {
        v.kind = MartingaleKind::submartingale;
        v.worst_violation = v.max_deficit;
        witness = deficit_at;
    } else {
        v.kind = MartingaleKind::none;
        v.worst_violation = std::min(v.max_excess, v.max_deficit);
    }
    v.witness_s = witness[0];
    v.witness_t = witness[1];
    v.witness_node = witness[2];
    return v;
}

ValidationReport optional_stopping_check(const Evaluation& E, const Process& Y,
                                         const LatticeStoppingTime& sigma,
                                         const LatticeStoppingTime& tau, const IntegrandK& K,
                                         double tolerance) {
    const Process value = evaluate_stopped(E, sigma, tau, Y, K);
    ValidationReport report;
    auto& c = report.add("optional_stopping");
    c.worst_violation = -1.0;
    double equality_gap = 0.0;
    for (int k = tau.start_step; k <= tau.cap_step; ++k) {
        for (int j = 0; j <= k; ++j) {
            if (!sigma.stopped(k, j)) continue;
            const double d = value.at(k, j) - Y.at(k, j);
            equality_gap = std::max(equality_gap, std::abs(d));
            record(c, d, tolerance, node_witness("optional_stopping", k, tau.cap_step, j, d));
        }
    }
    std::ostringstream os;
    os << "max |E_{sigma,tau}[Y_tau] - Y_sigma| = " << equality_gap;
    c.detail = os.str();
    return report;
}

}  // namespace gbsde
