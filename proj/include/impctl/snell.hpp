#pragma once

#include <vector>

#include <Eigen/Core>

#include "impctl/tree.hpp"

namespace impctl {

/// Payoff X_k on every node; values[k] has 2^k entries.
struct PayoffProcess {
    std::vector<Eigen::ArrayXd> values;

    int depth() const { return static_cast<int>(values.size()) - 1; }
    static PayoffProcess zeros(int depth);
};

struct EnvelopeResult {
    std::vector<Eigen::ArrayXd> envelope;
    std::vector<Eigen::Array<bool, Eigen::Dynamic, 1>> stop_region;
    /// Earliest level j >= k at which some path through the node enters the stop region.
    std::vector<Eigen::ArrayXi> first_optimal_stop;
};

/// Smallest supermartingale dominating X: V_N = X_N, V_k = max(X_k, E[V_{k+1} | node]).
/// Nodes with |V - X| <= tol form the stop region.
EnvelopeResult snell_envelope(const PayoffProcess& payoff, double tol = 1e-12);
EnvelopeResult snell_envelope(const PayoffProcess& payoff, const ScenarioTree& tree, double tol = 1e-12);

/// E[X_tau] for tau the first entry of each path into the stop region, summed path by path.
double stopping_value(const PayoffProcess& payoff, const EnvelopeResult& result);

}  // namespace impctl
