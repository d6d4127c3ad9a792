#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace impctl {

/// Cumulative impulse applied so far and how many impulses produced it.
struct ImpulseState {
    double cumulative = 0.0;
    int count = 0;

    bool operator==(const ImpulseState&) const = default;
};

/// Maximum number of impulses worth considering: ceil(gamma * T / c).
int impulse_budget(double reward_bound, double cost_floor, double horizon);

/// All impulse states reachable with at most `budget` impulses, deduplicated
/// on (cumulative rounded to 12 decimals, count). State 0 is always (0, 0);
/// states are ordered by count, then breadth-first discovery order.
class StateSpace {
public:
    StateSpace() = default;
    StateSpace(std::span<const double> impulses, int budget, std::size_t limit = kDefaultLimit);

    static constexpr std::size_t kDefaultLimit = 1u << 16;

    std::size_t size() const { return states_.size(); }
    int budget() const { return budget_; }
    std::size_t impulse_count() const { return impulse_count_; }
    const ImpulseState& operator[](std::size_t id) const { return states_[id]; }
    const std::vector<ImpulseState>& states() const { return states_; }

    /// Id of the state reached from `id` by impulse index `beta`; -1 when the budget is exhausted.
    int successor(int id, std::size_t beta) const { return successors_(id, static_cast<Eigen::Index>(beta)); }

    std::optional<int> find(double cumulative, int count) const;

    bool operator==(const StateSpace&) const;

private:
    using Key = std::pair<long long, int>;
    static Key key(double cumulative, int count);

    int budget_ = 0;
    std::size_t impulse_count_ = 0;
    std::vector<ImpulseState> states_;
    Eigen::ArrayXXi successors_;
    std::map<Key, int> index_;
};

inline StateSpace enumerate_states(std::span<const double> impulses, int budget,
                                   std::size_t limit = StateSpace::kDefaultLimit) {
    return StateSpace(impulses, budget, limit);
}

}  // namespace impctl
