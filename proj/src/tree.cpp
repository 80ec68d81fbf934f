#include "gbsde/tree.hpp"

#include <algorithm>
#include <ostream>

#include "gbsde/errors.hpp"

namespace gbsde {

BinomialTree::BinomialTree(double horizon, int steps)
    : horizon_(horizon), steps_(steps), dt_(0.0), increment_(0.0) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ParameterError("tree: horizon must be > 0");
    if (steps < 1) throw ParameterError("tree: steps must be >= 1");
    dt_ = horizon / steps;
    increment_ = std::sqrt(dt_);
}

BinomialTree build_tree(double horizon, int steps) { return BinomialTree(horizon, steps); }

Process::Process(const BinomialTree& tree, int first_step, int last_step, double fill)
    : tree_(tree), first_(first_step), last_(last_step) {
    if (first_step < 0 || last_step > tree.steps() || first_step > last_step) {
        throw ShapeError("process: step range outside the tree");
    }
    base_ = static_cast<std::size_t>(first_) * (first_ + 1) / 2;
    const std::size_t end = static_cast<std::size_t>(last_ + 1) * (last_ + 2) / 2;
    values_.assign(end - base_, fill);
}

Process::Process(const BinomialTree& tree, double fill) : Process(tree, 0, tree.steps(), fill) {}

double Process::sup_norm() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

double Process::sup_norm(int first_step, int last_step) const {
    double m = 0.0;
    for (int k = std::max(first_step, first_); k <= std::min(last_step, last_); ++k) {
        for (double v : step(k)) m = std::max(m, std::abs(v));
    }
    return m;
}

Process brownian_process(const BinomialTree& tree) {
    return Process::from_function(tree, 0, tree.steps(),
                                  [&](int k, int j) { return tree.brownian(k, j); });
}

std::vector<double> conditional_expectation(const BinomialTree& tree, std::span<const double> next) {
    if (next.size() < 2 || static_cast<int>(next.size()) - 1 > tree.steps()) {
        throw ShapeError("conditional_expectation: values must cover a whole step >= 1");
    }
    std::vector<double> out(next.size() - 1);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = 0.5 * next[j] + 0.5 * next[j + 1];
    return out;
}

LatticeStoppingTime LatticeStoppingTime::deterministic(int start_step, int step) {
    return LatticeStoppingTime{start_step, step, std::nullopt};
}

LatticeStoppingTime LatticeStoppingTime::capped(int step) const {
    LatticeStoppingTime t = *this;
    t.cap_step = std::min(cap_step, step);
    return t;
}

LatticeStoppingTime LatticeStoppingTime::started_at(int step) const {
    LatticeStoppingTime t = *this;
    t.start_step = step;
    return t;
}

LatticeStoppingTime hitting_time(const BinomialTree& tree, int start_step, double barrier,
                                 std::optional<int> anchor_node) {
    if (start_step < 0 || start_step > tree.steps()) {
        throw ParameterError("hitting_time: start step outside the tree");
    }
    if (!(barrier > 0.0)) throw ParameterError("hitting_time: barrier must be > 0");
    const int anchor = anchor_node.value_or(start_step / 2);
    if (anchor < 0 || anchor > start_step) throw ParameterError("hitting_time: anchor node outside step");
    // Rounding guards against sqrt(dt) * k landing a hair under the barrier.
    const int units = static_cast<int>(std::ceil(barrier / tree.increment() - 1e-9));
    return LatticeStoppingTime{start_step, tree.steps(),
                               LatticeStoppingTime::Barrier{start_step, anchor, std::max(units, 1)}};
}

int stop_step_on_path(const LatticeStoppingTime& tau, std::span<const int> up_moves) {
    int j = 0;
    for (int k = 0;; ++k) {
        if (k >= tau.start_step && tau.stopped(k, j)) return k;
        if (k >= static_cast<int>(up_moves.size())) return k;
        j += up_moves[k];
    }
}

bool precedes(const BinomialTree& tree, const LatticeStoppingTime& sigma,
              const LatticeStoppingTime& tau) {
    if (sigma.start_step != tau.start_step) return false;
    for (int k = tau.start_step; k <= tree.steps(); ++k) {
        for (int j = 0; j <= k; ++j) {
            if (tau.stopped(k, j) && !sigma.stopped(k, j)) return false;
        }
    }
    return true;
}

void write_process_csv(std::ostream& out, const Process& p) {
    const auto old = out.precision(17);
    out << "step,up_moves,brownian_value,value\n";
    for (int k = p.first_step(); k <= p.last_step(); ++k) {
        for (int j = 0; j <= k; ++j) {
            out << k << ',' << j << ',' << p.tree().brownian(k, j) << ',' << p.at(k, j) << '\n';
        }
    }
    out.precision(old);
}

}  // namespace gbsde
