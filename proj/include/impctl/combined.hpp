#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "impctl/backward.hpp"
#include "impctl/impulse.hpp"

namespace impctl {

/// Data of H(t, w, z, u) = z sigma^{-1}(t, w) f(t, w, u) + h(t, w, u).
struct HamiltonianSpec {
    ControlGrid grid;
    CoefficientExpr sigma;
    CoefficientExpr reward;

    HamiltonianSpec(const ProcessModel& process, const ImpulseModel& impulse, ControlGrid grid)
        : grid(std::move(grid)), sigma(process.sigma), reward(impulse.reward) {}
};

class TiltBoundError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// sigma^{-1} f at the given bindings (u must not be bound yet).
double tilt(const HamiltonianSpec& spec, const Env& env, double control);

/// H at one environment; `env` carries the (shifted) path features, u is bound here.
double hamiltonian(const HamiltonianSpec& spec, const Env& env, double z, double control);

struct HamiltonianMax {
    double value = 0.0;
    int control = 0;  // index into V; smallest index among ties
};

/// Exhaustive maximum of H over the control grid.
HamiltonianMax hamiltonian_max(const HamiltonianSpec& spec, const Env& env, double z);

/// Control index per (node, state) for levels 0..N-1.
struct ControlTable {
    std::vector<Eigen::ArrayXXi> index;

    int at(NodeRef node, int state) const { return index.at(static_cast<std::size_t>(node.level))(node.index, state); }

    static ControlTable constant(int depth, std::size_t states, int control);
    static ControlTable random(int depth, std::size_t states, std::size_t controls, std::mt19937_64& rng);
};

/// theta = sigma^{-1} f and h, tabulated per control, level, node and state on the shifted path.
class HamiltonianTables {
public:
    HamiltonianTables(const ScenarioTree& tree, const HamiltonianSpec& spec, const StateSpace& states,
                      unsigned threads = 1);

    double theta(std::size_t u, int level, Eigen::Index node, int state) const {
        return theta_[u][static_cast<std::size_t>(level)](node, state);
    }
    double reward(std::size_t u, int level, Eigen::Index node, int state) const {
        return reward_[u][static_cast<std::size_t>(level)](node, state);
    }
    std::size_t controls() const { return theta_.size(); }

private:
    std::vector<std::vector<Eigen::ArrayXXd>> theta_;
    std::vector<std::vector<Eigen::ArrayXXd>> reward_;
};

/// Driver H*(t, L + xi, z) with the argmax recorded as the control.
class MaxHamiltonianDriver final : public Driver {
public:
    explicit MaxHamiltonianDriver(const HamiltonianTables& tables) : tables_(tables) {}
    DriverValue operator()(int level, Eigen::Index node, int state, double z) const override;

private:
    const HamiltonianTables& tables_;
};

/// Driver H(t, L + xi, z, u(node, state)) for a fixed control table.
class FixedControlDriver final : public Driver {
public:
    FixedControlDriver(const HamiltonianTables& tables, const ControlTable& controls)
        : tables_(tables), controls_(controls) {}
    DriverValue operator()(int level, Eigen::Index node, int state, double z) const override;

private:
    const HamiltonianTables& tables_;
    const ControlTable& controls_;
};

IterationResult combined_value_iteration(const ScenarioTree& tree, const ImpulseModel& impulse,
                                         const HamiltonianSpec& spec, const SolveOptions& options = {});

/// Y^u: the same reflected recursion with the control frozen to `controls`.
IterationResult fixed_control_value_iteration(const ScenarioTree& tree, const ImpulseModel& impulse,
                                              const HamiltonianSpec& spec, const ControlTable& controls,
                                              const SolveOptions& options = {});

/// Strategy as in extract_strategy; the control at (node, s) is the argmax recorded
/// in iteration top - count(s), i.e. the one driving the current segment.
std::pair<Strategy, ControlTable> extract_pair(const IterationResult& result, const ScenarioTree& tree,
                                               const ImpulseModel& impulse, const HamiltonianSpec& spec,
                                               double tol = 1e-12);

}  // namespace impctl
