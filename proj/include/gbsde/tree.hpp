#pragma once

#include <cmath>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace gbsde {

/// Recombining binomial lattice for a one-dimensional Brownian motion.
///
/// Node (k, j), 0 <= j <= k <= N, carries B = (2j - k) sqrt(dt); each node
/// moves to (k+1, j) or (k+1, j+1) with probability 1/2.
class BinomialTree {
public:
    BinomialTree(double horizon, int steps);

    double horizon() const { return horizon_; }
    int steps() const { return steps_; }
    double dt() const { return dt_; }
    double increment() const { return increment_; }
    double time(int k) const { return k * dt_; }
    double brownian(int k, int j) const { return (2 * j - k) * increment_; }
    std::size_t node_count() const {
        return static_cast<std::size_t>(steps_ + 1) * (steps_ + 2) / 2;
    }

private:
    double horizon_;
    int steps_;
    double dt_;
    double increment_;
};

BinomialTree build_tree(double horizon, int steps);

/// Real values on every node of the steps [first_step, last_step].
class Process {
public:
    Process() = default;
    Process(const BinomialTree& tree, int first_step, int last_step, double fill = 0.0);
    /// Whole tree.
    explicit Process(const BinomialTree& tree, double fill = 0.0);

    template <class F>
    static Process from_function(const BinomialTree& tree, int first_step, int last_step, F&& f) {
        Process p(tree, first_step, last_step);
        for (int k = first_step; k <= last_step; ++k) {
            for (int j = 0; j <= k; ++j) p.at(k, j) = f(k, j);
        }
        return p;
    }

    const BinomialTree& tree() const { return tree_; }
    int first_step() const { return first_; }
    int last_step() const { return last_; }
    bool covers(int k) const { return !values_.empty() && k >= first_ && k <= last_; }

    double& at(int k, int j) { return values_[index(k, j)]; }
    double at(int k, int j) const { return values_[index(k, j)]; }
    std::span<double> step(int k) { return {&values_[index(k, 0)], static_cast<std::size_t>(k + 1)}; }
    std::span<const double> step(int k) const {
        return {&values_[index(k, 0)], static_cast<std::size_t>(k + 1)};
    }
    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }

    double sup_norm() const;
    double sup_norm(int first_step, int last_step) const;

private:
    std::size_t index(int k, int j) const {
        return static_cast<std::size_t>(k) * (k + 1) / 2 - base_ + static_cast<std::size_t>(j);
    }

    BinomialTree tree_{1.0, 1};
    int first_ = 0;
    int last_ = -1;
    std::size_t base_ = 0;
    std::vector<double> values_;
};

/// B_k at every node of the whole tree.
Process brownian_process(const BinomialTree& tree);

/// Values at step k from values at step k+1: (X(k+1,j) + X(k+1,j+1)) / 2.
std::vector<double> conditional_expectation(const BinomialTree& tree, std::span<const double> next);

/// First entry into a node region, started at `start_step` and capped at `cap_step`.
///
/// The region is {k >= cap_step} together with, when a barrier is set,
/// {|B_k - B_anchor| >= barrier} measured from a fixed anchor node. Paths
/// from the anchor cannot jump across the barrier level, so the first entry
/// is the hitting time for every path through the anchor, and the stopping
/// status of a node never depends on how the path reached it.
struct LatticeStoppingTime {
    struct Barrier {
        int anchor_step = 0;
        int anchor_node = 0;
        int units = 1;  // barrier in multiples of sqrt(dt), rounded up
    };

    int start_step = 0;
    int cap_step = 0;
    std::optional<Barrier> barrier;

    static LatticeStoppingTime deterministic(int start_step, int step);

    bool stopped(int k, int j) const {
        if (k >= cap_step) return true;
        if (!barrier) return false;
        const int d = 2 * (j - barrier->anchor_node) - (k - barrier->anchor_step);
        return std::abs(d) >= barrier->units;
    }
    /// Same rule, additionally stopped at `step`.
    LatticeStoppingTime capped(int step) const;
    /// Same rule, started later.
    LatticeStoppingTime started_at(int step) const;
};

/// First k >= start_step with |B_k - B_start| >= barrier, capped at N; the
/// anchor defaults to the middle node of the start step.
LatticeStoppingTime hitting_time(const BinomialTree& tree, int start_step, double barrier,
                                 std::optional<int> anchor_node = std::nullopt);

/// Stop step along a path given as up-move indicators from step 0.
int stop_step_on_path(const LatticeStoppingTime& tau, std::span<const int> up_moves);

/// True when tau stopped implies sigma stopped at every node in [start, N];
/// then sigma <= tau on every path.
bool precedes(const BinomialTree& tree, const LatticeStoppingTime& sigma,
              const LatticeStoppingTime& tau);

/// CSV with columns step,up_moves,brownian_value,value.
void write_process_csv(std::ostream& out, const Process& p);

}  // namespace gbsde
