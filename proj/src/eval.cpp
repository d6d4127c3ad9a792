#include "impctl/eval.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "impctl/numeric.hpp"
#include "impctl/parallel.hpp"

namespace impctl {

namespace {

void check_depth(const ScenarioTree& tree, const Strategy& strategy) {
    if (strategy.depth() != tree.depth()) {
        throw std::invalid_argument("strategy depth " + std::to_string(strategy.depth()) + " != tree depth " +
                                    std::to_string(tree.depth()));
    }
}

double mean_of(const std::vector<double>& v) { return pairwise_sum<double>(v) / static_cast<double>(v.size()); }

double branch_factor(double theta, double sqrt_dt, bool up) {
    const double step = theta * sqrt_dt;
    if (!(std::abs(step) < 1.0)) throw TiltBoundError("girsanov: tilt bound |theta| sqrt(dt) < 1 violated");
    const double q = (1.0 + step) / 2.0;
    return up ? 2.0 * q : 2.0 * (1.0 - q);
}

}  // namespace

PolicyValue evaluate_strategy_exact(const ScenarioTree& tree, const ImpulseModel& impulse, const Strategy& strategy,
                                    unsigned threads) {
    check_depth(tree, strategy);
    const int N = tree.depth();
    const std::size_t leaves = std::size_t{1} << N;
    std::vector<double> reward(leaves), cost(leaves);

    parallel_for(leaves, threads, [&](std::size_t j) {
        const auto leaf = static_cast<std::ptrdiff_t>(j);
        int s = 0;
        double r = 0.0, c = 0.0;
        for (int k = 0; k < N; ++k) {
            const NodeRef node{k, ancestor(leaf, N, k)};
            s = strategy.settle(node, s, [&](int beta) { c += impulse.costs[static_cast<std::size_t>(beta)]; });
            const double shift = strategy.states()[static_cast<std::size_t>(s)].cumulative;
            r += impulse.reward.evaluate(tree.features(node).env(shift)) * tree.dt();
        }
        reward[j] = r;
        cost[j] = c;
    });

    PolicyValue pv;
    pv.reward_part = mean_of(reward);
    pv.cost_part = mean_of(cost);
    pv.value = pv.reward_part - pv.cost_part;
    pv.samples = leaves;
    return pv;
}

Eigen::ArrayXd girsanov_weights(const ScenarioTree& tree, const HamiltonianSpec& spec, const ControlTable& controls,
                                const Strategy& strategy) {
    check_depth(tree, strategy);
    const int N = tree.depth();
    const std::ptrdiff_t leaves = std::ptrdiff_t{1} << N;
    Eigen::ArrayXd w(leaves);
    for (std::ptrdiff_t j = 0; j < leaves; ++j) {
        int s = 0;
        double weight = 1.0;
        for (int k = 0; k < N; ++k) {
            const NodeRef node{k, ancestor(j, N, k)};
            s = strategy.settle(node, s, [](int) {});
            const double u = spec.grid.controls.at(static_cast<std::size_t>(controls.at(node, s)));
            const double theta = tilt(spec, tree.features(node).env(), u);
            const bool up = (ancestor(j, N, k + 1) & 1) == 0;
            weight *= branch_factor(theta, tree.sqrt_dt(), up);
        }
        w[j] = weight;
    }
    return w;
}

PolicyValue evaluate_pair(const ScenarioTree& tree, const ImpulseModel& impulse, const HamiltonianSpec& spec,
                          const Strategy& strategy, const ControlTable& controls) {
    check_depth(tree, strategy);
    const int N = tree.depth();
    const Eigen::ArrayXd weights = girsanov_weights(tree, spec, controls, strategy);
    const std::size_t leaves = std::size_t{1} << N;
    std::vector<double> reward(leaves), cost(leaves);
    for (std::size_t j = 0; j < leaves; ++j) {
        const auto leaf = static_cast<std::ptrdiff_t>(j);
        int s = 0;
        double r = 0.0, c = 0.0;
        for (int k = 0; k < N; ++k) {
            const NodeRef node{k, ancestor(leaf, N, k)};
            s = strategy.settle(node, s, [&](int beta) { c += impulse.costs[static_cast<std::size_t>(beta)]; });
            const double shift = strategy.states()[static_cast<std::size_t>(s)].cumulative;
            const double u = spec.grid.controls.at(static_cast<std::size_t>(controls.at(node, s)));
            r += spec.reward.evaluate(tree.features(node).env(shift, u)) * tree.dt();
        }
        reward[j] = weights[leaf] * r;
        cost[j] = weights[leaf] * c;
    }
    PolicyValue pv;
    pv.reward_part = mean_of(reward);
    pv.cost_part = mean_of(cost);
    pv.value = pv.reward_part - pv.cost_part;
    pv.samples = leaves;
    return pv;
}

namespace {

// Brute-force search: at each node try every impulse chain the remaining budget allows,
// then recurse into both children. No memoisation, no value iteration.
class Enumerator {
public:
    Enumerator(const ScenarioTree& tree, const ImpulseModel& impulse, int max_impulses, std::size_t limit)
        : tree_(tree), impulse_(impulse), states_(impulse.impulses, max_impulses), limit_(limit) {}

    struct Choice {
        double value = -std::numeric_limits<double>::infinity();
        std::vector<int> chain;
    };

    double value(int k, Eigen::Index i, int s) {
        if (++visited_ > limit_) {
            throw SearchLimitError("enumerate_optimal: search space exceeds limit " + std::to_string(limit_));
        }
        if (k == tree_.depth()) return 0.0;
        return best_chain(k, i, s).value;
    }

    Choice best_chain(int k, Eigen::Index i, int s) {
        Choice best;
        std::vector<int> chain;
        extend(k, i, s, 0.0, chain, best);
        return best;
    }

    void materialize(Strategy& out, int k, Eigen::Index i, int s) {
        if (k < tree_.depth()) {
            const Choice c = best_chain(k, i, s);
            for (int beta : c.chain) {
                out.set({k, i}, s, Action::impulse(beta));
                s = states_.successor(s, static_cast<std::size_t>(beta));
            }
        }
        out.set({k, i}, s, Action::keep());
        if (k < tree_.depth()) {
            materialize(out, k + 1, 2 * i, s);
            materialize(out, k + 1, 2 * i + 1, s);
        }
    }

    const StateSpace& states() const { return states_; }
    std::size_t visited() const { return visited_; }

private:
    void extend(int k, Eigen::Index i, int s, double cost, std::vector<int>& chain, Choice& best) {
        const double h = impulse_.reward.evaluate(tree_.features({k, i}).env(states_[static_cast<std::size_t>(s)].cumulative));
        const double cont = -cost + h * tree_.dt() + 0.5 * (value(k + 1, 2 * i, s) + value(k + 1, 2 * i + 1, s));
        if (cont > best.value) best = {cont, chain};
        for (std::size_t b = 0; b < impulse_.size(); ++b) {
            const int next = states_.successor(s, b);
            if (next < 0) continue;
            chain.push_back(static_cast<int>(b));
            extend(k, i, next, cost + impulse_.costs[b], chain, best);
            chain.pop_back();
        }
    }

    const ScenarioTree& tree_;
    const ImpulseModel& impulse_;
    StateSpace states_;
    std::size_t limit_;
    std::size_t visited_ = 0;
};

}  // namespace

OracleResult enumerate_optimal(const ScenarioTree& tree, const ImpulseModel& impulse, int max_impulses,
                               std::size_t limit) {
    if (max_impulses < 0) throw std::invalid_argument("enumerate_optimal: max_impulses must be >= 0");
    Enumerator e(tree, impulse, max_impulses, limit);
    OracleResult r;
    r.value = e.value(0, 0, 0);
    r.strategy = Strategy(e.states(), tree.depth());
    r.strategy.iteration = max_impulses;
    e.materialize(r.strategy, 0, 0, 0);
    r.nodes_visited = e.visited();
    return r;
}

PolicyValue mc_evaluate_strategy(const ImpulseModel& impulse, const ProcessModel& process, const Strategy& strategy,
                                 std::size_t samples, std::uint64_t seed) {
    const int N = strategy.depth();
    if (N < 1 || N > 63) throw std::invalid_argument("mc_evaluate_strategy: depth must be in [1, 63]");
    if (samples == 0) throw std::invalid_argument("mc_evaluate_strategy: need at least one sample");
    const double dt = process.horizon / N;
    const double sqrt_dt = std::sqrt(dt);

    std::mt19937_64 rng(seed);
    double mean = 0.0, m2 = 0.0, mean_reward = 0.0, mean_cost = 0.0;
    for (std::size_t n = 1; n <= samples; ++n) {
        const std::uint64_t bits = rng();
        double L = process.x0, xmax = L, xmin = L, sum = L;
        Eigen::Index idx = 0;
        int s = 0;
        double r = 0.0, c = 0.0;
        for (int k = 0; k < N; ++k) {
            const PathFeatures feats{process.horizon * k / N, L, xmax, xmin, sum / (k + 1)};
            s = strategy.settle({k, idx}, s, [&](int beta) { c += impulse.costs[static_cast<std::size_t>(beta)]; });
            r += impulse.reward.evaluate(feats.env(strategy.states()[static_cast<std::size_t>(s)].cumulative)) * dt;

            const Env env = feats.env();
            const double sigma = process.sigma.evaluate(env);
            const double drift = process.drift ? process.drift->evaluate(env) * dt : 0.0;
            const bool down = (bits >> k) & 1u;
            L = L + drift + sigma * (down ? -sqrt_dt : sqrt_dt);
            xmax = std::max(xmax, L);
            xmin = std::min(xmin, L);
            sum += L;
            idx = 2 * idx + (down ? 1 : 0);
        }
        const double x = r - c;
        const double delta = x - mean;
        mean += delta / static_cast<double>(n);
        m2 += delta * (x - mean);
        mean_reward += (r - mean_reward) / static_cast<double>(n);
        mean_cost += (c - mean_cost) / static_cast<double>(n);
    }

    PolicyValue pv;
    pv.method = PolicyValue::Method::MonteCarlo;
    pv.value = mean;
    pv.reward_part = mean_reward;
    pv.cost_part = mean_cost;
    pv.samples = samples;
    pv.seed = seed;
    pv.std_error = samples > 1 ? std::sqrt(m2 / static_cast<double>(samples - 1) / static_cast<double>(samples)) : 0.0;
    return pv;
}

}  // namespace impctl
