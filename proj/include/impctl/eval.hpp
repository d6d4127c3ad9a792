#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>

#include <Eigen/Core>

#include "impctl/combined.hpp"
#include "impctl/strategy.hpp"

namespace impctl {

/// Expected reward of a policy, split into the running-reward and impulse-cost parts.
struct PolicyValue {
    enum class Method { Exact, MonteCarlo };

    double value = 0.0;
    double reward_part = 0.0;
    double cost_part = 0.0;
    Method method = Method::Exact;
    std::size_t samples = 0;
    std::optional<double> std_error;  // Monte Carlo only
    std::uint64_t seed = 0;
};

/// E[sum_k h(t_k, L + xi) dt - sum psi], enumerating all 2^N paths.
PolicyValue evaluate_strategy_exact(const ScenarioTree& tree, const ImpulseModel& impulse, const Strategy& strategy,
                                    unsigned threads = 1);

/// Per-leaf Radon-Nikodym weights of the controlled measure. Each step tilts the
/// branch probability to q = (1 + theta sqrt(dt)) / 2, theta = sigma^{-1} f on the
/// unshifted path with the control in force at (node, state).
Eigen::ArrayXd girsanov_weights(const ScenarioTree& tree, const HamiltonianSpec& spec, const ControlTable& controls,
                                const Strategy& strategy);

/// J(delta, u): reward with h(t, L + xi, u) under the tilted measure.
PolicyValue evaluate_pair(const ScenarioTree& tree, const ImpulseModel& impulse, const HamiltonianSpec& spec,
                          const Strategy& strategy, const ControlTable& controls);

class SearchLimitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct OracleResult {
    double value = 0.0;
    Strategy strategy;
    std::size_t nodes_visited = 0;
};

/// Exhaustive search over adapted strategies with at most `max_impulses` impulses,
/// trying every impulse chain at every node. Intended for depth <= 4, |U| <= 2.
OracleResult enumerate_optimal(const ScenarioTree& tree, const ImpulseModel& impulse, int max_impulses,
                               std::size_t limit = 50'000'000);

/// Monte Carlo estimate from sampled sign paths; L is re-simulated by the same Euler scheme.
PolicyValue mc_evaluate_strategy(const ImpulseModel& impulse, const ProcessModel& process, const Strategy& strategy,
                                 std::size_t samples, std::uint64_t seed);

}  // namespace impctl
