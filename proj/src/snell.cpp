#include "impctl/snell.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "impctl/numeric.hpp"

namespace impctl {

PayoffProcess PayoffProcess::zeros(int depth) {
    PayoffProcess p;
    for (int k = 0; k <= depth; ++k) p.values.push_back(Eigen::ArrayXd::Zero(ScenarioTree::width(k)));
    return p;
}

EnvelopeResult snell_envelope(const PayoffProcess& payoff, double tol) {
    const int depth = payoff.depth();
    if (depth < 0) throw std::invalid_argument("snell_envelope: empty payoff");
    for (int k = 0; k <= depth; ++k) {
        const auto& x = payoff.values[static_cast<std::size_t>(k)];
        if (x.size() != ScenarioTree::width(k)) {
            throw std::invalid_argument("snell_envelope: level " + std::to_string(k) + " has wrong width");
        }
        if (!x.allFinite()) throw NonFiniteError("snell_envelope: non-finite payoff at level " + std::to_string(k));
    }

    EnvelopeResult r;
    const auto levels = static_cast<std::size_t>(depth) + 1;
    r.envelope.resize(levels);
    r.stop_region.resize(levels);
    r.first_optimal_stop.resize(levels);

    const auto last = static_cast<std::size_t>(depth);
    r.envelope[last] = payoff.values[last];
    r.stop_region[last].setConstant(ScenarioTree::width(depth), true);
    r.first_optimal_stop[last].setConstant(ScenarioTree::width(depth), depth);

    for (int k = depth - 1; k >= 0; --k) {
        const auto ku = static_cast<std::size_t>(k);
        const Eigen::ArrayXd cont = cond_expect_level(r.envelope[ku + 1]).col(0);
        const Eigen::ArrayXd& x = payoff.values[ku];
        r.envelope[ku] = x.max(cont);
        r.stop_region[ku] = (r.envelope[ku] - x).abs() <= tol;

        const Eigen::ArrayXi& below = r.first_optimal_stop[ku + 1];
        const Eigen::ArrayXi later =
            below(Eigen::seq(0, Eigen::last, 2)).min(below(Eigen::seq(1, Eigen::last, 2)));
        r.first_optimal_stop[ku] = r.stop_region[ku].select(Eigen::ArrayXi::Constant(x.size(), k), later);
    }
    return r;
}

EnvelopeResult snell_envelope(const PayoffProcess& payoff, const ScenarioTree& tree, double tol) {
    if (payoff.depth() != tree.depth()) throw std::invalid_argument("snell_envelope: payoff depth != tree depth");
    return snell_envelope(payoff, tol);
}

double stopping_value(const PayoffProcess& payoff, const EnvelopeResult& result) {
    const int depth = payoff.depth();
    const std::ptrdiff_t leaves = std::ptrdiff_t{1} << depth;
    std::vector<double> stopped(static_cast<std::size_t>(leaves));
    for (std::ptrdiff_t j = 0; j < leaves; ++j) {
        for (int k = 0; k <= depth; ++k) {
            const auto i = ancestor(j, depth, k);
            if (result.stop_region[static_cast<std::size_t>(k)][i]) {
                stopped[static_cast<std::size_t>(j)] = payoff.values[static_cast<std::size_t>(k)][i];
                break;
            }
        }
    }
    return pairwise_sum<double>(stopped) / static_cast<double>(leaves);
}

}  // namespace impctl
