#include "gbsde/representation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

#include "gbsde/errors.hpp"

namespace gbsde {

namespace {

double anchor_increment(const BinomialTree& tree, int k0, int j0, int k, int j) {
    return (2 * (j - j0) - (k - k0)) * tree.increment();
}

std::vector<double> linspace(double lo, double hi, int count) {
    if (count < 1 || !(lo <= hi)) throw ParameterError("recovery grid: bad range");
    std::vector<double> out(count);
    for (int i = 0; i < count; ++i) out[i] = count == 1 ? lo : lo + (hi - lo) * i / (count - 1);
    return out;
}

}  // namespace

double default_barrier(const BinomialTree& tree) {
    return std::max(1.0, 4.0 * tree.increment());
}

TestProcess build_test_process(const BinomialTree& tree, double mu, const Modulus& phi, int t_step,
                               double y0, double z, std::optional<double> barrier) {
    const int n = tree.steps();
    if (t_step < 0 || t_step >= n) throw ParameterError("build_test_process: need 0 <= t < N");
    TestProcess tp;
    tp.t_start_step = t_step;
    tp.anchor_node = t_step / 2;
    tp.y0 = y0;
    tp.z = z;
    tp.tau = hitting_time(tree, t_step, barrier.value_or(default_barrier(tree)), tp.anchor_node);
    tp.Y = Process(tree, t_step, n);
    const double drift = phi(std::abs(z));
    double ybar = y0;
    for (int k = t_step; k <= n; ++k) {
        double top = 0.0;
        for (int j = 0; j <= k; ++j) {
            const double v = ybar + z * anchor_increment(tree, t_step, tp.anchor_node, k, j);
            tp.Y.at(k, j) = v;
            const bool reachable = j >= tp.anchor_node && j <= tp.anchor_node + (k - t_step);
            if (reachable && !tp.tau.stopped(k, j)) top = std::max(top, std::abs(v));
        }
        ybar -= (mu * top + drift) * tree.dt();
    }
    return tp;
}

double test_process_bound(const TestProcess& tp, double mu, const Modulus& phi) {
    const auto& tree = tp.Y.tree();
    const int units = tp.tau.barrier ? tp.tau.barrier->units : tree.steps();
    const double b = units * tree.increment();
    const double az = std::abs(tp.z);
    return (std::abs(tp.y0) + az * b + (mu * az * b + phi(az)) * tree.horizon()) *
           std::pow(1.0 - mu * tree.dt(), -tree.steps());
}

LocalGenerator extract_local_generator(const Evaluation& E, const TestProcess& tp,
                                       const ExtractOptions& options) {
    DoobMeyerOptions dm;
    dm.schedule = options.schedule;
    if (dm.schedule.empty()) {
        const double cap = std::floor(max_penalty(E.tree(), E.dominating_mu()));
        if (cap < 1.0) throw NonContractionError("extract_local_generator: lattice too coarse");
        dm.schedule = {cap};
    }
    dm.require_target = false;
    dm.target_residual = 0.0;
    dm.run_checks = false;
    dm.picard_tolerance = options.picard_tolerance;
    const DecompositionResult r = doob_meyer(E, tp.Y, tp.tau, dm);

    LocalGenerator out;
    out.g = r.g_proc;
    out.Z = r.Z;
    out.residual = r.residual;
    out.n = r.levels_used.back();
    out.base_value = r.g_proc.at(tp.t_start_step, tp.anchor_node);
    for (int k = tp.t_start_step; k < tp.tau.cap_step; ++k) {
        for (int j = tp.anchor_node; j <= std::min(k, tp.anchor_node + (k - tp.t_start_step)); ++j) {
            if (tp.tau.stopped(k, j)) continue;
            out.z_deviation = std::max(out.z_deviation, std::abs(r.Z.at(k, j) - tp.z));
        }
    }
    return out;
}

RecoveryGrid make_recovery_grid(const BinomialTree& tree, int level, double y_min, double y_max,
                                int y_count, double z_min, double z_max, int z_count) {
    if (level < 0 || level > 30) throw ParameterError("recovery grid: bad level");
    const double cells = std::ldexp(1.0, level);
    if (tree.steps() / cells < 4.0) {
        std::ostringstream os;
        os << "recovery grid: level " << level << " needs 2^-level T >= 4 dt";
        throw ParameterError(os.str());
    }
    RecoveryGrid grid;
    grid.level = level;
    for (int i = 0; i < static_cast<int>(cells); ++i) {
        grid.time_steps.push_back(static_cast<int>(std::lround(i * tree.steps() / cells)));
    }
    grid.y_points = linspace(y_min, y_max, y_count);
    grid.z_points = linspace(z_min, z_max, z_count);
    return grid;
}

Generator RecoveredGenerator::to_generator() const {
    const std::size_t ny = grid.y_points.size();
    const std::size_t nz = grid.z_points.size();
    std::vector<Generator> slices;
    for (std::size_t i = 0; i < grid.time_steps.size(); ++i) {
        std::vector<double> v(values.begin() + i * ny * nz, values.begin() + (i + 1) * ny * nz);
        slices.push_back(make_table(grid.y_points, grid.z_points, std::move(v), mu, phi));
    }
    std::vector<double> starts;
    for (int k : grid.time_steps) starts.push_back(tree.time(k));
    const double eps = 1e-9 * tree.dt();
    return Generator(
        "recovered_level_" + std::to_string(grid.level),
        Generator::TimeDriver([slices, starts, eps](double t, double y, double z) {
            auto it = std::upper_bound(starts.begin(), starts.end(), t + eps);
            const std::size_t i = it == starts.begin() ? 0 : static_cast<std::size_t>(it - starts.begin() - 1);
            return slices[i](t, y, z);
        }),
        mu, phi, false);
}

RecoveredGenerator recover_generator(const Evaluation& E, const RecoveryGrid& grid,
                                     const RecoverOptions& options) {
    if (grid.time_steps.empty() || grid.y_points.empty() || grid.z_points.empty()) {
        throw ParameterError("recover_generator: empty grid");
    }
    const auto& tree = E.tree();
    RecoveredGenerator out;
    out.grid = grid;
    out.tree = tree;
    out.mu = E.dominating_mu();
    out.phi = E.dominating_phi();
    const std::size_t ny = grid.y_points.size();
    const std::size_t nz = grid.z_points.size();
    const std::size_t cells = grid.time_steps.size() * ny * nz;
    out.values.assign(cells, std::numeric_limits<double>::quiet_NaN());
    std::vector<std::string> errors(cells);

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t c = next++; c < cells; c = next++) {
            const std::size_t i = c / (ny * nz);
            const std::size_t a = (c / nz) % ny;
            const std::size_t b = c % nz;
            try {
                const TestProcess tp = build_test_process(tree, out.mu, out.phi, grid.time_steps[i],
                                                          grid.y_points[a], grid.z_points[b],
                                                          options.barrier);
                out.values[c] = extract_local_generator(E, tp, options.extract).base_value;
            } catch (const std::exception& ex) {
                std::ostringstream os;
                os << "cell (step " << grid.time_steps[i] << ", y " << grid.y_points[a] << ", z "
                   << grid.z_points[b] << "): " << ex.what();
                errors[c] = os.str();
            }
        }
    };
    int threads = options.threads;
    if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    threads = static_cast<int>(std::min<std::size_t>(threads, cells));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (auto& e : errors) {
        if (!e.empty()) out.failures.push_back(std::move(e));
    }
    return out;
}

double project_a1(RecoveredGenerator& g_rec) {
    const auto& ys = g_rec.grid.y_points;
    const auto& zs = g_rec.grid.z_points;
    const std::size_t ny = ys.size();
    const std::size_t nz = zs.size();
    double shift = 0.0;
    for (std::size_t i = 0; i < g_rec.grid.time_steps.size(); ++i) {
        const std::size_t base = i * ny * nz;
        const std::vector<double> v(g_rec.values.begin() + base, g_rec.values.begin() + base + ny * nz);
        for (std::size_t a = 0; a < ny; ++a) {
            for (std::size_t b = 0; b < nz; ++b) {
                double best = v[a * nz + b];
                for (std::size_t c = 0; c < ny; ++c) {
                    for (std::size_t d = 0; d < nz; ++d) {
                        best = std::min(best, v[c * nz + d] + g_rec.mu * std::abs(ys[a] - ys[c]) +
                                                  g_rec.phi(std::abs(zs[b] - zs[d])));
                    }
                }
                shift = std::max(shift, v[a * nz + b] - best);
                g_rec.values[base + a * nz + b] = best;
            }
        }
    }
    return shift;
}

double quick_recover(const Evaluation& E, int t_step, double y, double z, int h_steps) {
    const auto& tree = E.tree();
    if (h_steps < 1 || t_step < 0 || t_step + h_steps > tree.steps()) {
        throw ParameterError("quick_recover: need 1 <= h and t + h <= N");
    }
    const int j0 = t_step / 2;
    const int end = t_step + h_steps;
    const Process X = Process::from_function(tree, end, end, [&](int k, int j) {
        return y + z * anchor_increment(tree, t_step, j0, k, j);
    });
    const double v = evaluate(E, t_step, end, X)[j0];
    return (v - y) / (h_steps * tree.dt());
}

ValidationReport verify_representation(const Evaluation& E, const RecoveredGenerator& g_rec, int trials,
                                       std::uint64_t seed, const VerifyOptions& options) {
    if (trials < 1) throw ParameterError("verify_representation: trials must be >= 1");
    const auto& tree = E.tree();
    const Generator g = g_rec.to_generator();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coef(-options.claim_scale, options.claim_scale);
    ValidationReport report;
    auto& c = report.add("representation_gap");
    for (int trial = 0; trial < trials; ++trial) {
        const int t = std::uniform_int_distribution<int>(1, tree.steps())(rng);
        const int s = std::uniform_int_distribution<int>(0, t - 1)(rng);
        const double a = coef(rng);
        const double b = coef(rng);
        const double k = coef(rng);
        const Process X = Process::from_function(tree, t, t, [&](int step, int j) {
            const double w = tree.brownian(step, j);
            return a * std::tanh(w) + b * std::sin(w) + k;
        });
        const auto lhs = evaluate(E, s, t, X);
        const Solution rhs = solve(tree, g, X, IntegrandK::zero(), LatticeStoppingTime::deterministic(s, t));
        for (int j = 0; j <= s; ++j) {
            const double gap = std::abs(lhs[j] - rhs.Y.at(s, j));
            if (gap > c.worst_violation) {
                c.worst_violation = gap;
                std::ostringstream os;
                os << "s=" << s << " t=" << t << " node=" << j << " gap=" << gap;
                c.witness = os.str();
            }
        }
    }
    c.passed = c.worst_violation <= options.threshold;
    std::ostringstream os;
    os << "threshold " << options.threshold;
    c.detail = os.str();
    return report;
}

double level_distance(const BinomialTree& tree, const Generator& a, const Generator& b,
                      const RecoveryGrid& grid) {
    double sum = 0.0;
    std::size_t count = 0;
    for (int k = 0; k < tree.steps(); ++k) {
        const double t = tree.time(k);
        for (double y : grid.y_points) {
            for (double z : grid.z_points) {
                const double d = a(t, y, z) - b(t, y, z);
                sum += d * d;
                ++count;
            }
        }
    }
    return std::sqrt(sum / static_cast<double>(count));
}

}  // namespace gbsde
