#include "gbsde/bsde_solver.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "gbsde/errors.hpp"

namespace gbsde {

namespace {

void check_window(const BinomialTree& tree, const LatticeStoppingTime& tau) {
    if (tau.start_step < 0 || tau.cap_step > tree.steps() || tau.start_step > tau.cap_step) {
        throw ParameterError("solve: stopping time window outside the tree");
    }
}

double terminal_at(const Process& terminal, int k, int j) {
    if (!terminal.covers(k)) {
        throw ShapeError("solve: terminal missing at stopped step " + std::to_string(k));
    }
    return terminal.at(k, j);
}

}  // namespace

double solve_node(const Generator& g, const NodeTime& at, double expectation, double z,
                  double gamma, double dt, const SolverSettings& settings) {
    const double base = expectation + gamma * dt;
    double y = base + g(at, base, z) * dt;
    for (int it = 0; it < settings.max_iterations; ++it) {
        const double next = base + g(at, y, z) * dt;
        const double change = std::abs(next - y);
        y = next;
        if (change <= settings.tolerance * std::max(1.0, std::abs(y))) return y;
    }
    std::ostringstream os;
    os << "solve: scalar fixed point did not converge at step " << at.step << " node " << at.node
       << " (mu dt too large?)";
    throw ConvergenceError(os.str());
}

Solution solve(const BinomialTree& tree, const Generator& g, const Process& terminal,
               const IntegrandK& K, const LatticeStoppingTime& tau, const SolverSettings& settings) {
    check_window(tree, tau);
    const double dt = tree.dt();
    if (!(g.mu() * dt < 1.0)) throw ParameterError("solve: need mu dt < 1");
    const int first = tau.start_step;
    const int last = tau.cap_step;
    Solution s{Process(tree, first, last), Process(tree, first, last), Process(tree, first, last), 0.0};
    const double inv = 1.0 / (2.0 * tree.increment());

    for (int k = last; k >= first; --k) {
        auto y = s.Y.step(k);
        for (int j = 0; j <= k; ++j) {
            if (tau.stopped(k, j)) {
                y[j] = terminal_at(terminal, k, j);
                continue;
            }
            const double up = s.Y.at(k + 1, j + 1);
            const double down = s.Y.at(k + 1, j);
            const double e = 0.5 * (up + down);
            const double z = (up - down) * inv;
            const double gamma = K.density(k, j);
            const NodeTime at{k, j, tree.time(k)};
            y[j] = solve_node(g, at, e, z, gamma, dt, settings);
            s.Z.at(k, j) = z;
            const double defect = std::abs(y[j] - (e + g(at, y[j], z) * dt + gamma * dt));
            s.defect.at(k, j) = defect;
            s.residual = std::max(s.residual, defect);
        }
    }
    return s;
}

Generator linear_generator(const LinearCoefficients& coeffs) {
    const double lz = coeffs.b.sup_norm();
    return Generator(
        "linear_nodewise",
        Generator::Driver([a = coeffs.a, b = coeffs.b, c = coeffs.c](const NodeTime& at, double y,
                                                                     double z) {
            return a.at(at.step, at.node) * y + b.at(at.step, at.node) * z + c.at(at.step, at.node);
        }),
        coeffs.mu_bound, lz > 0.0 ? Modulus::scaled(lz) : Modulus::zero(), false, lz);
}

Solution solve_linear_closed_form(const BinomialTree& tree, const LinearCoefficients& coeffs,
                                  const Process& terminal, const IntegrandK& K,
                                  const LatticeStoppingTime& tau) {
    check_window(tree, tau);
    const double dt = tree.dt();
    const double sq = tree.increment();
    const int first = tau.start_step;
    const int last = tau.cap_step;

    // One-step factors, validated up front.
    Process up_weight(tree, first, last), down_weight(tree, first, last), running(tree, first, last);
    for (int k = first; k < last; ++k) {
        for (int j = 0; j <= k; ++j) {
            if (tau.stopped(k, j)) continue;
            const double a = coeffs.a.at(k, j);
            const double b = coeffs.b.at(k, j);
            if (std::abs(a) > coeffs.mu_bound + 1e-15) {
                throw ParameterError("solve_linear_closed_form: |a| exceeds the declared bound");
            }
            if (!(coeffs.mu_bound * dt < 1.0)) {
                throw ParameterError("solve_linear_closed_form: need mu dt < 1");
            }
            const double pu = 0.5 * (1.0 + b * sq);
            const double pd = 0.5 * (1.0 - b * sq);
            if (!(pu > 0.0 && pu < 1.0 && pd > 0.0 && pd < 1.0)) {
                throw ParameterError("solve_linear_closed_form: measure weight outside (0,1)");
            }
            const double discount = 1.0 / (1.0 - a * dt);
            up_weight.at(k, j) = pu * discount;
            down_weight.at(k, j) = pd * discount;
            running.at(k, j) = (coeffs.c.at(k, j) + K.density(k, j)) * dt * discount;
        }
    }

    Solution s{Process(tree, first, last), Process(tree, first, last), Process(tree, first, last), 0.0};
    std::vector<double> mass, next;
    for (int k0 = first; k0 <= last; ++k0) {
        for (int j0 = 0; j0 <= k0; ++j0) {
            // Forward propagation of the discounted Girsanov weight from (k0, j0).
            mass.assign(1, 1.0);
            int lo = j0;  // node index of mass[0]
            double value = 0.0;
            for (int k = k0; k <= last && !mass.empty(); ++k) {
                next.assign(mass.size() + 1, 0.0);
                bool alive = false;
                for (std::size_t i = 0; i < mass.size(); ++i) {
                    const double w = mass[i];
                    if (w == 0.0) continue;
                    const int j = lo + static_cast<int>(i);
                    if (tau.stopped(k, j)) {
                        value += w * terminal_at(terminal, k, j);
                        continue;
                    }
                    value += w * running.at(k, j);
                    next[i] += w * down_weight.at(k, j);
                    next[i + 1] += w * up_weight.at(k, j);
                    alive = true;
                }
                if (!alive) break;
                mass.swap(next);
            }
            s.Y.at(k0, j0) = value;
        }
    }
    const double inv = 1.0 / (2.0 * sq);
    for (int k = first; k < last; ++k) {
        for (int j = 0; j <= k; ++j) {
            if (!tau.stopped(k, j)) s.Z.at(k, j) = (s.Y.at(k + 1, j + 1) - s.Y.at(k + 1, j)) * inv;
        }
    }
    return s;
}

Generator lipschitz_majorant_driver(const Generator& g, double n) {
    const auto majorant = fan_jiang_majorant(g.phi(), n);
    const double mu = g.mu();
    return Generator("majorant_" + g.name(),
                     Generator::Driver([mu, majorant, d = g.driver()](const NodeTime& at, double y,
                                                                      double z) {
                         return mu * std::abs(y) + majorant.slope * std::abs(z) +
                                majorant.intercept + std::abs(d(at, 0.0, 0.0));
                     }),
                     mu, Modulus::scaled(n), false, n);
}

double a_priori_bound(double mu, double dt, int steps_left, double x_norm, double g0_norm,
                      double gamma_norm) {
    return std::pow(1.0 - mu * dt, -steps_left) *
           (x_norm + steps_left * dt * (g0_norm + gamma_norm));
}

double anchoring_bound(double mu, double dt, int steps_left, double x_norm, double g0_norm,
                       double gamma_norm) {
    return std::pow(1.0 - mu * dt, -steps_left) * steps_left * dt *
           (mu * x_norm + g0_norm + gamma_norm);
}

void write_solution_csv(std::ostream& out, const Solution& s) {
    const auto old = out.precision(17);
    out << "step,up_moves,brownian_value,Y,Z,defect\n";
    for (int k = s.Y.first_step(); k <= s.Y.last_step(); ++k) {
        for (int j = 0; j <= k; ++j) {
            out << k << ',' << j << ',' << s.Y.tree().brownian(k, j) << ',' << s.Y.at(k, j) << ','
                << s.Z.at(k, j) << ',' << s.defect.at(k, j) << '\n';
        }
    }
    out.precision(old);
}

}  // namespace gbsde
