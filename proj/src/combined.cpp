#include "impctl/combined.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "impctl/parallel.hpp"

namespace impctl {

double tilt(const HamiltonianSpec& spec, const Env& env, double control) {
    Env e = env;
    e.set(Var::u, control);
    const double sigma = spec.sigma.evaluate(e);
    const double theta = spec.grid.drift.evaluate(e) / sigma;
    if (!std::isfinite(theta)) throw NonFiniteError("tilt: non-finite sigma^{-1} f");
    return theta;
}

double hamiltonian(const HamiltonianSpec& spec, const Env& env, double z, double control) {
    Env e = env;
    e.set(Var::u, control);
    const double h = spec.reward.evaluate(e);
    const double value = z * tilt(spec, env, control) + h;
    if (!std::isfinite(value)) throw NonFiniteError("hamiltonian: non-finite value");
    return value;
}

HamiltonianMax hamiltonian_max(const HamiltonianSpec& spec, const Env& env, double z) {
    if (spec.grid.controls.empty()) throw std::invalid_argument("hamiltonian_max: empty control grid");
    HamiltonianMax best{hamiltonian(spec, env, z, spec.grid.controls[0]), 0};
    for (std::size_t u = 1; u < spec.grid.controls.size(); ++u) {
        const double h = hamiltonian(spec, env, z, spec.grid.controls[u]);
        if (h > best.value) best = {h, static_cast<int>(u)};
    }
    return best;
}

ControlTable ControlTable::constant(int depth, std::size_t states, int control) {
    ControlTable t;
    for (int k = 0; k < depth; ++k) {
        t.index.push_back(Eigen::ArrayXXi::Constant(ScenarioTree::width(k), static_cast<Eigen::Index>(states), control));
    }
    return t;
}

ControlTable ControlTable::random(int depth, std::size_t states, std::size_t controls, std::mt19937_64& rng) {
    ControlTable t = constant(depth, states, 0);
    for (auto& level : t.index) {
        for (Eigen::Index j = 0; j < level.size(); ++j) level(j) = static_cast<int>(rng() % controls);
    }
    return t;
}

HamiltonianTables::HamiltonianTables(const ScenarioTree& tree, const HamiltonianSpec& spec, const StateSpace& states,
                                     unsigned threads) {
    const std::size_t V = spec.grid.controls.size();
    if (V == 0) throw std::invalid_argument("HamiltonianTables: empty control grid");
    const auto S = static_cast<Eigen::Index>(states.size());
    theta_.resize(V);
    reward_.resize(V);
    for (int k = 0; k < tree.depth(); ++k) {
        for (std::size_t u = 0; u < V; ++u) {
            theta_[u].emplace_back(ScenarioTree::width(k), S);
            reward_[u].emplace_back(ScenarioTree::width(k), S);
        }
        parallel_for(static_cast<std::size_t>(ScenarioTree::width(k)), threads, [&](std::size_t iu) {
            const auto i = static_cast<Eigen::Index>(iu);
            const PathFeatures feats = tree.features({k, i});
            for (Eigen::Index s = 0; s < S; ++s) {
                const Env env = feats.env(states[static_cast<std::size_t>(s)].cumulative);
                for (std::size_t u = 0; u < V; ++u) {
                    const double control = spec.grid.controls[u];
                    const double theta = tilt(spec, env, control);
                    if (!(std::abs(theta) * tree.sqrt_dt() < 1.0)) {
                        std::ostringstream os;
                        os << "tilt bound violated: |sigma^{-1} f| sqrt(dt) = " << std::abs(theta) * tree.sqrt_dt()
                           << " at level " << k << ", node " << i << ", u = " << control;
                        throw TiltBoundError(os.str());
                    }
                    theta_[u][static_cast<std::size_t>(k)](i, s) = theta;
                    reward_[u][static_cast<std::size_t>(k)](i, s) = spec.reward.evaluate(Env(env).set(Var::u, control));
                }
            }
        });
    }
}

DriverValue MaxHamiltonianDriver::operator()(int level, Eigen::Index node, int state, double z) const {
    DriverValue best{z * tables_.theta(0, level, node, state) + tables_.reward(0, level, node, state), 0};
    for (std::size_t u = 1; u < tables_.controls(); ++u) {
        const double h = z * tables_.theta(u, level, node, state) + tables_.reward(u, level, node, state);
        if (h > best.value) best = {h, static_cast<int>(u)};
    }
    return best;
}

DriverValue FixedControlDriver::operator()(int level, Eigen::Index node, int state, double z) const {
    const int u = controls_.at({level, node}, state);
    const auto uu = static_cast<std::size_t>(u);
    return {z * tables_.theta(uu, level, node, state) + tables_.reward(uu, level, node, state), u};
}

namespace {

StateSpace combined_states(const ScenarioTree& tree, const ImpulseModel& impulse, const SolveOptions& options) {
    return StateSpace(impulse.impulses, effective_budget(impulse, tree.horizon(), options), options.state_limit);
}

}  // namespace

IterationResult combined_value_iteration(const ScenarioTree& tree, const ImpulseModel& impulse,
                                         const HamiltonianSpec& spec, const SolveOptions& options) {
    StateSpace states = combined_states(tree, impulse, options);
    const HamiltonianTables tables(tree, spec, states, options.threads);
    const MaxHamiltonianDriver driver(tables);
    return iterate_to_fixed_point(tree, impulse, std::move(states), driver, options.tol, options.threads);
}

IterationResult fixed_control_value_iteration(const ScenarioTree& tree, const ImpulseModel& impulse,
                                              const HamiltonianSpec& spec, const ControlTable& controls,
                                              const SolveOptions& options) {
    StateSpace states = combined_states(tree, impulse, options);
    if (controls.index.size() != static_cast<std::size_t>(tree.depth())) {
        throw std::invalid_argument("fixed_control_value_iteration: control table depth mismatch");
    }
    for (const auto& level : controls.index) {
        if (level.cols() != static_cast<Eigen::Index>(states.size()) || (level < 0).any() ||
            (level >= static_cast<int>(spec.grid.controls.size())).any()) {
            throw std::invalid_argument("fixed_control_value_iteration: control table does not match the grid");
        }
    }
    const HamiltonianTables tables(tree, spec, states, options.threads);
    const FixedControlDriver driver(tables, controls);
    return iterate_to_fixed_point(tree, impulse, std::move(states), driver, options.tol, options.threads);
}

std::pair<Strategy, ControlTable> extract_pair(const IterationResult& result, const ScenarioTree& tree,
                                               const ImpulseModel& impulse, const HamiltonianSpec& spec,
                                               double tol) {
    Strategy strategy = extract_strategy(result, tree, impulse, tol);
    const StateSpace& states = result.states;
    ControlTable controls = ControlTable::constant(tree.depth(), states.size(), 0);
    for (int k = 0; k < tree.depth(); ++k) {
        auto& level = controls.index[static_cast<std::size_t>(k)];
        for (Eigen::Index s = 0; s < level.cols(); ++s) {
            const int m = std::clamp(result.top() - states[static_cast<std::size_t>(s)].count, 0, result.top());
            level.col(s) = result.fields[static_cast<std::size_t>(m)].levels[static_cast<std::size_t>(k)].control.col(s);
        }
        if ((level < 0).any() || (level >= static_cast<int>(spec.grid.controls.size())).any()) {
            throw InconsistentFieldsError("extract_pair: recorded control outside the grid");
        }
    }
    return {std::move(strategy), std::move(controls)};
}

}  // namespace impctl
