#include "impctl/impulse.hpp"

#include <cmath>
#include <string>

#include "impctl/parallel.hpp"

namespace impctl {

Strategy::Strategy(StateSpace states, int depth) : states_(std::move(states)), depth_(depth) {
    const auto S = static_cast<Eigen::Index>(states_.size());
    for (int k = 0; k <= depth; ++k) table_.push_back(Eigen::ArrayXXi::Constant(ScenarioTree::width(k), S, kAbsent));
}

void Strategy::set(NodeRef node, int state, Action action) {
    if (action.kind == Action::Kind::Impulse) {
        if (node.level >= depth_) throw std::invalid_argument("strategy: no impulses at the horizon");
        if (action.beta < 0 || static_cast<std::size_t>(action.beta) >= states_.impulse_count()) {
            throw std::invalid_argument("strategy: impulse index out of range");
        }
        if (states_.successor(state, static_cast<std::size_t>(action.beta)) < 0) {
            throw std::invalid_argument("strategy: impulse would exceed the budget");
        }
    }
    table_.at(static_cast<std::size_t>(node.level))(node.index, state) =
        action.kind == Action::Kind::Continue ? kContinue : action.beta;
}

std::optional<Action> Strategy::at(NodeRef node, int state) const {
    const int code = table_.at(static_cast<std::size_t>(node.level))(node.index, state);
    if (code == kAbsent) return std::nullopt;
    return decode(code);
}

std::size_t Strategy::impulse_entries() const {
    std::size_t n = 0;
    for (const auto& t : table_) n += static_cast<std::size_t>((t >= 0).count());
    return n;
}

RewardDriver::RewardDriver(const ScenarioTree& tree, const ImpulseModel& impulse, const StateSpace& states,
                           unsigned threads) {
    const auto S = static_cast<Eigen::Index>(states.size());
    for (int k = 0; k < tree.depth(); ++k) {
        Eigen::ArrayXXd h(ScenarioTree::width(k), S);
        parallel_for(static_cast<std::size_t>(h.rows()), threads, [&](std::size_t iu) {
            const auto i = static_cast<Eigen::Index>(iu);
            const PathFeatures feats = tree.features({k, i});
            for (Eigen::Index s = 0; s < S; ++s) {
                h(i, s) = impulse.reward.evaluate(feats.env(states[static_cast<std::size_t>(s)].cumulative));
            }
        });
        table_.push_back(std::move(h));
    }
}

int effective_budget(const ImpulseModel& impulse, double horizon, const SolveOptions& options) {
    if (options.budget) {
        if (*options.budget < 0) throw std::invalid_argument("budget must be >= 0");
        return *options.budget;
    }
    return impulse_budget(impulse.reward_bound, impulse.cost_floor, horizon);
}

ValueField solve_y0(const ScenarioTree& tree, const ImpulseModel& impulse, const StateSpace& states,
                    unsigned threads) {
    const RewardDriver driver(tree, impulse, states, threads);
    return reflected_step(nullptr, tree, impulse, states, driver, threads);
}

ValueField iterate_value(const ValueField& prev, const ScenarioTree& tree, const ImpulseModel& impulse,
                         const StateSpace& states, unsigned threads) {
    const RewardDriver driver(tree, impulse, states, threads);
    return reflected_step(&prev, tree, impulse, states, driver, threads);
}

IterationResult value_iteration(const ScenarioTree& tree, const ImpulseModel& impulse, const SolveOptions& options) {
    StateSpace states(impulse.impulses, effective_budget(impulse, tree.horizon(), options), options.state_limit);
    const RewardDriver driver(tree, impulse, states, options.threads);
    return iterate_to_fixed_point(tree, impulse, std::move(states), driver, options.tol, options.threads);
}

Strategy extract_strategy(const IterationResult& result, const ScenarioTree& tree, const ImpulseModel& impulse,
                          double tol) {
    (void)impulse;
    const int N = tree.depth();
    const StateSpace& states = result.states;

    for (const ValueField& f : result.fields) {
        for (std::size_t k = 0; k < f.levels.size(); ++k) {
            if ((f.levels[k].y - f.levels[k].obstacle < -tol).any()) {
                throw InconsistentFieldsError("extract_strategy: Y < O - tol in iteration " + std::to_string(f.n) +
                                              ", level " + std::to_string(k));
            }
        }
    }

    Strategy strategy(states, N);
    strategy.iteration = result.top();
    strategy.tol = tol;

    Eigen::ArrayXi arrival = Eigen::ArrayXi::Zero(1);
    for (int k = 0; k <= N; ++k) {
        Eigen::ArrayXi next_arrival;
        if (k < N) next_arrival.resize(ScenarioTree::width(k + 1));
        for (Eigen::Index i = 0; i < arrival.size(); ++i) {
            int s = arrival[i];
            if (k < N) {
                int m = result.top() - states[static_cast<std::size_t>(s)].count;
                while (m > 0) {
                    const LevelValues& lv = result.fields[static_cast<std::size_t>(m)].levels[static_cast<std::size_t>(k)];
                    const int beta = lv.beta(i, s);
                    if (beta < 0 || std::abs(lv.y(i, s) - lv.obstacle(i, s)) > tol) break;
                    strategy.set({k, i}, s, Action::impulse(beta));
                    s = states.successor(s, static_cast<std::size_t>(beta));
                    --m;
                }
                next_arrival[2 * i] = s;
                next_arrival[2 * i + 1] = s;
            }
            strategy.set({k, i}, s, Action::keep());
        }
        arrival = std::move(next_arrival);
    }
    return strategy;
}

std::vector<Eigen::ArrayXi> arrival_states(const Strategy& strategy) {
    std::vector<Eigen::ArrayXi> arrival;
    arrival.push_back(Eigen::ArrayXi::Zero(1));
    for (int k = 0; k < strategy.depth(); ++k) {
        const Eigen::ArrayXi& cur = arrival.back();
        Eigen::ArrayXi next(ScenarioTree::width(k + 1));
        for (Eigen::Index i = 0; i < cur.size(); ++i) {
            const int s = strategy.settle({k, i}, cur[i], [](int) {});
            next[2 * i] = s;
            next[2 * i + 1] = s;
        }
        arrival.push_back(std::move(next));
    }
    return arrival;
}

}  // namespace impctl
