#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "impctl/model.hpp"

namespace impctl {

/// Node (k, i) of the binary tree; children are (k+1, 2i) [up] and (k+1, 2i+1) [down].
struct NodeRef {
    int level = 0;
    Eigen::Index index = 0;

    NodeRef up() const { return {level + 1, 2 * index}; }
    NodeRef down() const { return {level + 1, 2 * index + 1}; }
    bool operator==(const NodeRef&) const = default;
};

/// Cached path functionals for all 2^k nodes of one level.
struct TreeLevel {
    Eigen::ArrayXd L;
    Eigen::ArrayXd xmax;
    Eigen::ArrayXd xmin;
    Eigen::ArrayXd xavg;
    Eigen::ArrayXd brownian;
};

struct TreeOptions {
    /// Upper bound on 2^(N+1) - 1.
    std::size_t max_nodes = std::size_t{1} << 23;
    unsigned threads = 1;
};

/// Exhaustive binary tree of +-sqrt(dt) Brownian increments with the
/// Euler path of L cached at every node.
class ScenarioTree {
public:
    int depth() const { return depth_; }
    double horizon() const { return horizon_; }
    double dt() const { return dt_; }
    double sqrt_dt() const { return sqrt_dt_; }
    double time(int level) const { return horizon_ * level / depth_; }

    static Eigen::Index width(int level) { return Eigen::Index{1} << level; }
    std::size_t node_count() const { return (std::size_t{1} << (depth_ + 1)) - 1; }

    const TreeLevel& level(int k) const { return levels_.at(static_cast<std::size_t>(k)); }

    PathFeatures features(NodeRef node) const {
        const TreeLevel& lv = levels_[static_cast<std::size_t>(node.level)];
        return {time(node.level), lv.L[node.index], lv.xmax[node.index], lv.xmin[node.index],
                lv.xavg[node.index]};
    }

    bool operator==(const ScenarioTree& other) const;

private:
    friend ScenarioTree build_tree(const ProcessModel&, int, const TreeOptions&);

    int depth_ = 0;
    double horizon_ = 0.0;
    double dt_ = 0.0;
    double sqrt_dt_ = 0.0;
    std::vector<TreeLevel> levels_;
};

/// Builds the full tree. Coefficients use left-endpoint (Euler) evaluation.
ScenarioTree build_tree(const ProcessModel& process, int depth, const TreeOptions& options = {});

class NonFiniteError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Discrete conditional expectation under symmetric +-1 increments.
template <typename Scalar>
Scalar cond_expect(Scalar up, Scalar down) {
    if (!std::isfinite(up) || !std::isfinite(down)) throw NonFiniteError("cond_expect: non-finite child value");
    return (up + down) / Scalar(2);
}

/// Martingale-representation coefficient: V(child) = V(parent) + z * dB(child).
template <typename Scalar>
Scalar z_repr(Scalar up, Scalar down, Scalar dt) {
    if (!std::isfinite(up) || !std::isfinite(down)) throw NonFiniteError("z_repr: non-finite child value");
    if (!(dt > Scalar(0))) throw std::invalid_argument("z_repr: dt must be positive");
    return (up - down) / (Scalar(2) * std::sqrt(dt));
}

/// Level-wide cond_expect: rows of `next` are the 2^(k+1) children, columns are
/// independent value columns. Returns 2^k rows.
template <typename Derived>
Eigen::Array<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> cond_expect_level(
    const Eigen::ArrayBase<Derived>& next) {
    if (!next.allFinite()) throw NonFiniteError("cond_expect: non-finite child value");
    const auto& d = next.derived();
    return (d(Eigen::seq(0, Eigen::last, 2), Eigen::all) + d(Eigen::seq(1, Eigen::last, 2), Eigen::all)) /
           typename Derived::Scalar(2);
}

template <typename Derived>
Eigen::Array<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> z_repr_level(
    const Eigen::ArrayBase<Derived>& next, typename Derived::Scalar dt) {
    using Scalar = typename Derived::Scalar;
    if (!next.allFinite()) throw NonFiniteError("z_repr: non-finite child value");
    if (!(dt > Scalar(0))) throw std::invalid_argument("z_repr: dt must be positive");
    const auto& d = next.derived();
    return (d(Eigen::seq(0, Eigen::last, 2), Eigen::all) - d(Eigen::seq(1, Eigen::last, 2), Eigen::all)) /
           (Scalar(2) * std::sqrt(dt));
}

}  // namespace impctl
