#include "impctl/states.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace impctl {

int impulse_budget(double reward_bound, double cost_floor, double horizon) {
    if (!(cost_floor > 0.0)) throw std::invalid_argument("impulse_budget: cost floor c must be > 0");
    if (reward_bound < 0.0 || !(horizon > 0.0)) {
        throw std::invalid_argument("impulse_budget: requires gamma >= 0 and T > 0");
    }
    const double ratio = reward_bound * horizon / cost_floor;
    // Absorb representation error so that e.g. 0.3 / 0.1 still counts as 3.
    const double slack = 1e-12 * std::max(1.0, ratio);
    const double budget = std::ceil(ratio - slack);
    if (budget > 1e6) throw std::invalid_argument("impulse_budget: budget too large");
    return static_cast<int>(std::max(0.0, budget));
}

StateSpace::Key StateSpace::key(double cumulative, int count) {
    if (!(std::abs(cumulative) < 1e6)) throw std::out_of_range("impulse state: cumulative impulse out of range");
    return {std::llround(cumulative * 1e12), count};
}

StateSpace::StateSpace(std::span<const double> impulses, int budget, std::size_t limit)
    : budget_(budget), impulse_count_(impulses.size()) {
    if (budget < 0) throw std::invalid_argument("enumerate_states: budget must be >= 0");

    states_.push_back({0.0, 0});
    index_.emplace(key(0.0, 0), 0);
    std::size_t frontier_begin = 0;
    for (int count = 1; count <= budget; ++count) {
        const std::size_t frontier_end = states_.size();
        for (std::size_t s = frontier_begin; s < frontier_end; ++s) {
            for (double beta : impulses) {
                const double cum = states_[s].cumulative + beta;
                if (index_.emplace(key(cum, count), static_cast<int>(states_.size())).second) {
                    states_.push_back({cum, count});
                    if (states_.size() > limit) {
                        throw std::length_error("enumerate_states: state count exceeds limit " +
                                                std::to_string(limit));
                    }
                }
            }
        }
        frontier_begin = frontier_end;
    }

    successors_ = Eigen::ArrayXXi::Constant(static_cast<Eigen::Index>(states_.size()),
                                            static_cast<Eigen::Index>(impulses.size()), -1);
    for (std::size_t s = 0; s < states_.size(); ++s) {
        if (states_[s].count >= budget) continue;
        for (std::size_t b = 0; b < impulses.size(); ++b) {
            auto it = index_.find(key(states_[s].cumulative + impulses[b], states_[s].count + 1));
            successors_(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(b)) = it->second;
        }
    }
}

std::optional<int> StateSpace::find(double cumulative, int count) const {
    auto it = index_.find(key(cumulative, count));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

bool StateSpace::operator==(const StateSpace& other) const {
    return budget_ == other.budget_ && impulse_count_ == other.impulse_count_ && states_ == other.states_;
}

}  // namespace impctl
