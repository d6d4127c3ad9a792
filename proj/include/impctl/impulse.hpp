#pragma once

#include <optional>
#include <vector>

#include "impctl/backward.hpp"
#include "impctl/strategy.hpp"

namespace impctl {

/// Driver of the pure impulse problem: the reward h(t_k, L + xi) tabulated per (node, state).
class RewardDriver final : public Driver {
public:
    RewardDriver(const ScenarioTree& tree, const ImpulseModel& impulse, const StateSpace& states,
                 unsigned threads = 1);
    explicit RewardDriver(std::vector<Eigen::ArrayXXd> table) : table_(std::move(table)) {}

    DriverValue operator()(int level, Eigen::Index node, int state, double) const override {
        return {table_[static_cast<std::size_t>(level)](node, state), -1};
    }

    const std::vector<Eigen::ArrayXXd>& table() const { return table_; }

private:
    std::vector<Eigen::ArrayXXd> table_;  // levels 0..N-1
};

struct SolveOptions {
    double tol = 1e-12;
    std::optional<int> budget;  // defaults to impulse_budget(gamma, c, T)
    unsigned threads = 1;
    std::size_t state_limit = StateSpace::kDefaultLimit;
};

/// Budget actually used: options.budget if set, else ceil(gamma T / c).
int effective_budget(const ImpulseModel& impulse, double horizon, const SolveOptions& options);

/// Y^0: value of holding xi from level k onward with no further impulses.
ValueField solve_y0(const ScenarioTree& tree, const ImpulseModel& impulse, const StateSpace& states,
                    unsigned threads = 1);

/// Y^n from Y^{n-1}: explicit step reflected on the obstacle built from Y^{n-1}.
ValueField iterate_value(const ValueField& prev, const ScenarioTree& tree, const ImpulseModel& impulse,
                         const StateSpace& states, unsigned threads = 1);

IterationResult value_iteration(const ScenarioTree& tree, const ImpulseModel& impulse,
                                const SolveOptions& options = {});

class InconsistentFieldsError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Walks forward from (root, (0,0)) with m = top impulses left, impulsing while
/// |Y^m - O^m| <= tol and continuing otherwise. Covers every reachable (node, state).
Strategy extract_strategy(const IterationResult& result, const ScenarioTree& tree, const ImpulseModel& impulse,
                          double tol = 1e-12);

/// Arrival state id at every node under `strategy` (state before any impulse at that node).
std::vector<Eigen::ArrayXi> arrival_states(const Strategy& strategy);

}  // namespace impctl
