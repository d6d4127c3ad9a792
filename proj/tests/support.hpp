#pragma once

// Test-side helpers and oracles. The oracles below deliberately avoid the
// library's tree caches and backward operators: path features are recomputed
// from sign bits and values come from plain recursion.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "impctl/combined.hpp"
#include "impctl/expr.hpp"
#include "impctl/impulse.hpp"
#include "impctl/model.hpp"
#include "impctl/snell.hpp"
#include "impctl/tree.hpp"

namespace testing {

using namespace impctl;

inline CoefficientExpr ex(const std::string& s) { return CoefficientExpr::parse(s); }

inline ProcessModel process(double x0, double T, const std::string& sigma, const std::string& drift = "") {
    ProcessModel p;
    p.x0 = x0;
    p.horizon = T;
    p.sigma = ex(sigma);
    if (!drift.empty()) p.drift = ex(drift);
    return p;
}

inline ImpulseModel impulse(std::vector<double> U, std::vector<double> psi, double c, double gamma,
                            const std::string& h) {
    ImpulseModel m;
    m.impulses = std::move(U);
    m.costs = std::move(psi);
    m.cost_floor = c;
    m.reward_bound = gamma;
    m.reward = ex(h);
    return m;
}

// The pinned two-step instance: L stays at 0, one unit impulse pays 1 - 0.3.
inline ProcessModel det_process() { return process(0.0, 1.0, "1e-9"); }
inline ImpulseModel det_impulse() { return impulse({1.0}, {0.3}, 0.3, 1.0, "clamp(x, 0, 1)"); }

// ---------------------------------------------------------------- path oracle

struct PathSample {
    double t, x, xmax, xmin, xavg, brownian;
};

// Euler path along the sign bits of `index` (most significant bit = first step,
// bit set = down), recomputed from scratch.
inline std::vector<PathSample> path_of(const ProcessModel& p, int depth, int level, std::int64_t index) {
    const double dt = p.horizon / depth;
    std::vector<PathSample> out;
    double x = p.x0, b = 0.0;
    std::vector<double> xs{x};
    for (int k = 0;; ++k) {
        double mx = xs[0], mn = xs[0], sum = 0.0;
        for (double v : xs) {
            mx = std::max(mx, v);
            mn = std::min(mn, v);
            sum += v;
        }
        const PathSample s{p.horizon * k / depth, x, mx, mn, sum / static_cast<double>(xs.size()), b};
        out.push_back(s);
        if (k == level) break;
        const bool down = (index >> (level - k - 1)) & 1;
        const double db = down ? -std::sqrt(dt) : std::sqrt(dt);
        Env e;
        e.set(Var::t, s.t).set(Var::x, s.x).set(Var::xmax, s.xmax).set(Var::xmin, s.xmin).set(Var::xavg, s.xavg);
        double drift = p.drift ? p.drift->evaluate(e) : 0.0;
        x = x + drift * dt + p.sigma.evaluate(e) * db;
        b += db;
        xs.push_back(x);
    }
    return out;
}

inline Env env_of(const PathSample& s, double shift) {
    Env e;
    e.set(Var::t, s.t).set(Var::x, s.x + shift).set(Var::xmax, s.xmax + shift);
    e.set(Var::xmin, s.xmin + shift).set(Var::xavg, s.xavg + shift);
    return e;
}

// ------------------------------------------------------------ bellman oracle

// Sup over adapted strategies with at most `remaining` impulses, by direct
// recursion over (node, xi, remaining). No impulses at the horizon.
class BellmanOracle {
public:
    BellmanOracle(ProcessModel p, ImpulseModel m, int depth) : p_(std::move(p)), m_(std::move(m)), depth_(depth) {}

    double value(int remaining) { return at(0, 0, 0.0, remaining); }

private:
    double at(int level, std::int64_t index, double xi, int remaining) {
        if (level == depth_) return 0.0;
        const auto path = path_of(p_, depth_, level, index);
        const double dt = p_.horizon / depth_;
        double best = m_.reward.evaluate(env_of(path.back(), xi)) * dt +
                      0.5 * (at(level + 1, 2 * index, xi, remaining) + at(level + 1, 2 * index + 1, xi, remaining));
        if (remaining > 0) {
            for (std::size_t b = 0; b < m_.impulses.size(); ++b) {
                best = std::max(best, -m_.costs[b] + at(level, index, xi + m_.impulses[b], remaining - 1));
            }
        }
        return best;
    }

    ProcessModel p_;
    ImpulseModel m_;
    int depth_;
};

// Combined problem: the controller picks u per step (tilted branch probability)
// and impulse chains per node.
class CombinedOracle {
public:
    CombinedOracle(ProcessModel p, ImpulseModel m, ControlGrid g, int depth)
        : p_(std::move(p)), m_(std::move(m)), g_(std::move(g)), depth_(depth) {}

    double value(int remaining) { return at(0, 0, 0.0, remaining); }

private:
    double at(int level, std::int64_t index, double xi, int remaining) {
        if (level == depth_) return 0.0;
        const auto path = path_of(p_, depth_, level, index);
        const double dt = p_.horizon / depth_;
        const double up = at(level + 1, 2 * index, xi, remaining);
        const double down = at(level + 1, 2 * index + 1, xi, remaining);
        double best = -std::numeric_limits<double>::infinity();
        for (double u : g_.controls) {
            Env e = env_of(path.back(), xi);
            e.set(Var::u, u);
            const double theta = g_.drift.evaluate(e) / p_.sigma.evaluate(e);
            const double q = 0.5 * (1.0 + theta * std::sqrt(dt));
            best = std::max(best, m_.reward.evaluate(e) * dt + q * up + (1.0 - q) * down);
        }
        if (remaining > 0) {
            for (std::size_t b = 0; b < m_.impulses.size(); ++b) {
                best = std::max(best, -m_.costs[b] + at(level, index, xi + m_.impulses[b], remaining - 1));
            }
        }
        return best;
    }

    ProcessModel p_;
    ImpulseModel m_;
    ControlGrid g_;
    int depth_;
};

// -------------------------------------------------------------- snell oracle

// Best expected payoff over every stopping rule (stop/continue flag per
// non-terminal node). Only sensible for depth <= 3.
inline double best_stopping_rule(const PayoffProcess& x) {
    const int n = x.depth();
    const int internal = (1 << n) - 1;
    double best = -std::numeric_limits<double>::infinity();
    for (std::uint32_t rule = 0; rule < (1u << internal); ++rule) {
        double total = 0.0;
        for (std::int64_t leaf = 0; leaf < (std::int64_t{1} << n); ++leaf) {
            double got = x.values[static_cast<std::size_t>(n)][leaf];
            for (int k = 0; k < n; ++k) {
                const std::int64_t i = leaf >> (n - k);
                const int flat = (1 << k) - 1 + static_cast<int>(i);
                if ((rule >> flat) & 1u) {
                    got = x.values[static_cast<std::size_t>(k)][i];
                    break;
                }
            }
            total += got;
        }
        best = std::max(best, total / static_cast<double>(std::int64_t{1} << n));
    }
    return best;
}

inline PayoffProcess random_payoff(int depth, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    PayoffProcess p;
    for (int k = 0; k <= depth; ++k) {
        Eigen::ArrayXd v(ScenarioTree::width(k));
        for (auto& x : v) x = g(rng);
        p.values.push_back(v);
    }
    return p;
}

// ------------------------------------------------------- random instances

struct Instance {
    ProcessModel process;
    ImpulseModel impulse;
    int depth = 3;
    std::string label;
};

inline double uniform(std::mt19937_64& rng, double a, double b) {
    return std::uniform_real_distribution<double>(a, b)(rng);
}

inline std::string num(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

// Bounded random reward: a clamped affine mix of the path features.
inline std::string random_reward(std::mt19937_64& rng, double gamma) {
    return "clamp(" + num(uniform(rng, 0.0, 0.5 * gamma)) + " + " + num(uniform(rng, -2, 2)) + "*x + " +
           num(uniform(rng, -0.5, 0.5)) + "*(xmax - xmin) + " + num(uniform(rng, -0.5, 0.5)) + "*t, 0, " +
           num(gamma) + ")";
}

inline Instance random_instance(std::mt19937_64& rng, int depth, int n_impulses) {
    Instance in;
    in.depth = depth;
    const double gamma = uniform(rng, 0.5, 1.5);
    in.process = process(uniform(rng, -0.8, 0.8), 1.0,
                         "0.3 + 0.2*abs(x) + " + num(uniform(rng, 0.0, 0.3)) + "*(xmax - xmin)");
    std::vector<double> U, psi;
    const double c = uniform(rng, 0.1, 0.3);
    const double pool[] = {-1.0, -0.5, 0.5, 1.0, 0.75, -0.25};
    std::vector<double> choices(std::begin(pool), std::end(pool));
    std::shuffle(choices.begin(), choices.end(), rng);
    for (int i = 0; i < n_impulses; ++i) {
        U.push_back(choices[static_cast<std::size_t>(i)]);
        psi.push_back(c + uniform(rng, 0.0, 0.1));
    }
    in.impulse = impulse(U, psi, c, gamma, random_reward(rng, gamma));
    in.label = "depth " + std::to_string(depth) + ", |U| " + std::to_string(n_impulses);
    return in;
}

// Combined instance: theta depends only on u, t and the shift-invariant range
// features, so shifted and unshifted paths tilt identically.
struct CombinedInstance {
    ProcessModel process;
    ImpulseModel impulse;
    ControlGrid grid;
    int depth = 3;
};

inline CombinedInstance random_combined(std::mt19937_64& rng, int depth, int n_controls) {
    CombinedInstance in;
    in.depth = depth;
    in.process = process(0.0, 1.0, "1 + 0.3*(xmax - xmin)");
    const double gamma = 1.0;
    const double c = uniform(rng, 0.2, 0.4);
    in.impulse = impulse({1.0, -0.5}, {c, c + 0.1}, c, gamma,
                         "clamp(0.4 + 0.5*x - 0.3*u*(xmax - x) + 0.2*u, 0, 1)");
    const std::vector<double> all{-1.0, 1.0, 0.0};
    in.grid.controls.assign(all.begin(), all.begin() + n_controls);
    // |f| <= 1.2 |u| / sqrt(depth) keeps the tilt below one.
    in.grid.drift = ex("u*(" + num(uniform(rng, 0.3, 0.9)) + " + 0.3*clamp(xmax - x, 0, 1))*" +
                       num(1.0 / std::sqrt(static_cast<double>(depth))));
    return in;
}

}  // namespace testing
