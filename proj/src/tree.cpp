#include "impctl/tree.hpp"

#include <algorithm>
#include <string>

#include "impctl/parallel.hpp"

namespace impctl {

ScenarioTree build_tree(const ProcessModel& process, int depth, const TreeOptions& options) {
    if (depth < 1) throw std::invalid_argument("build_tree: depth must be >= 1");
    if (!(process.horizon > 0.0)) throw std::invalid_argument("build_tree: horizon T must be > 0");
    if (depth >= 62 || ((std::size_t{1} << (depth + 1)) - 1) > options.max_nodes) {
        throw std::length_error("build_tree: depth " + std::to_string(depth) + " exceeds node limit " +
                                std::to_string(options.max_nodes));
    }

    ScenarioTree tree;
    tree.depth_ = depth;
    tree.horizon_ = process.horizon;
    tree.dt_ = process.horizon / depth;
    tree.sqrt_dt_ = std::sqrt(tree.dt_);
    tree.levels_.resize(static_cast<std::size_t>(depth) + 1);

    TreeLevel& root = tree.levels_[0];
    root.L = Eigen::ArrayXd::Constant(1, process.x0);
    root.xmax = root.L;
    root.xmin = root.L;
    root.xavg = root.L;
    root.brownian = Eigen::ArrayXd::Zero(1);

    // Running sums of L samples, so xavg matches a left-to-right recomputation bit for bit.
    Eigen::ArrayXd sums = root.L;

    for (int k = 0; k < depth; ++k) {
        const TreeLevel& cur = tree.levels_[static_cast<std::size_t>(k)];
        TreeLevel& next = tree.levels_[static_cast<std::size_t>(k) + 1];
        const Eigen::Index n = ScenarioTree::width(k + 1);
        next.L.resize(n);
        next.xmax.resize(n);
        next.xmin.resize(n);
        next.xavg.resize(n);
        next.brownian.resize(n);
        Eigen::ArrayXd next_sums(n);
        const double samples = k + 2;

        parallel_for(static_cast<std::size_t>(ScenarioTree::width(k)), options.threads, [&](std::size_t i) {
            const auto idx = static_cast<Eigen::Index>(i);
            const Env env = tree.features({k, idx}).env();
            const double sigma = process.sigma.evaluate(env);
            const double drift = process.drift ? process.drift->evaluate(env) * tree.dt_ : 0.0;
            for (int side = 0; side < 2; ++side) {
                const double dB = side == 0 ? tree.sqrt_dt_ : -tree.sqrt_dt_;
                const Eigen::Index c = 2 * idx + side;
                const double L = cur.L[idx] + drift + sigma * dB;
                next.L[c] = L;
                next.xmax[c] = std::max(cur.xmax[idx], L);
                next.xmin[c] = std::min(cur.xmin[idx], L);
                next_sums[c] = sums[idx] + L;
                next.xavg[c] = next_sums[c] / samples;
                next.brownian[c] = cur.brownian[idx] + dB;
            }
        });
        sums = std::move(next_sums);
    }
    return tree;
}

bool ScenarioTree::operator==(const ScenarioTree& other) const {
    if (depth_ != other.depth_ || horizon_ != other.horizon_ || dt_ != other.dt_) return false;
    for (std::size_t k = 0; k < levels_.size(); ++k) {
        const TreeLevel& a = levels_[k];
        const TreeLevel& b = other.levels_[k];
        if (!((a.L == b.L).all() && (a.xmax == b.xmax).all() && (a.xmin == b.xmin).all() &&
              (a.xavg == b.xavg).all() && (a.brownian == b.brownian).all())) {
            return false;
        }
    }
    return true;
}

}  // namespace impctl
