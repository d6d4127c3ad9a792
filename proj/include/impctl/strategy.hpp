#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "impctl/states.hpp"
#include "impctl/tree.hpp"

namespace impctl {

struct Action {
    enum class Kind { Continue, Impulse };

    Kind kind = Kind::Continue;
    int beta = -1;  // index into U when kind == Impulse

    static Action keep() { return {}; }
    static Action impulse(int beta) { return {Kind::Impulse, beta}; }
    bool operator==(const Action&) const = default;
};

class StrategyGapError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Decision table (node, impulse state) -> continue | impulse(beta).
/// Several impulses at one date appear as a chain of entries on the same node.
class Strategy {
public:
    Strategy() = default;
    Strategy(StateSpace states, int depth);

    int depth() const { return depth_; }
    const StateSpace& states() const { return states_; }

    void set(NodeRef node, int state, Action action);
    std::optional<Action> at(NodeRef node, int state) const;

    /// Follows impulse entries from `state` at `node`; returns the state the node continues in.
    /// Throws StrategyGapError on a missing entry or an impulse past the budget.
    template <typename OnImpulse>
    int settle(NodeRef node, int state, OnImpulse&& on_impulse) const {
        for (;;) {
            auto a = at(node, state);
            if (!a) throw StrategyGapError("strategy has no decision at a reachable (node, state)");
            if (a->kind == Action::Kind::Continue) return state;
            const int next = states_.successor(state, static_cast<std::size_t>(a->beta));
            if (next < 0) throw StrategyGapError("strategy impulses past its budget");
            on_impulse(a->beta);
            state = next;
        }
    }

    /// Calls fn(node, state, action) for every entry in (level, index, state) order.
    template <typename Fn>
    void for_each(Fn&& fn) const {
        for (int k = 0; k <= depth_; ++k) {
            const Eigen::ArrayXXi& t = table_[static_cast<std::size_t>(k)];
            for (Eigen::Index i = 0; i < t.rows(); ++i) {
                for (Eigen::Index s = 0; s < t.cols(); ++s) {
                    if (t(i, s) == kAbsent) continue;
                    fn(NodeRef{k, i}, static_cast<int>(s), decode(t(i, s)));
                }
            }
        }
    }

    std::size_t impulse_entries() const;

    int iteration = 0;
    double tol = 0.0;

private:
    static constexpr int kAbsent = -2;
    static constexpr int kContinue = -1;
    static Action decode(int code) { return code == kContinue ? Action::keep() : Action::impulse(code); }

    StateSpace states_;
    int depth_ = 0;
    std::vector<Eigen::ArrayXXi> table_;
};

}  // namespace impctl
