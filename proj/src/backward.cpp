#include "impctl/backward.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "impctl/parallel.hpp"

namespace impctl {

namespace {

constexpr double kNoObstacle = -std::numeric_limits<double>::infinity();

}  // namespace

ObstacleField obstacle(const ValueField& prev, const ImpulseModel& impulse, const StateSpace& states) {
    const auto S = static_cast<Eigen::Index>(states.size());
    ObstacleField out;
    out.value.reserve(prev.levels.size());
    out.beta.reserve(prev.levels.size());
    for (const LevelValues& lv : prev.levels) {
        if (lv.y.cols() != S) throw std::invalid_argument("obstacle: field does not cover the state space");
        const Eigen::Index rows = lv.y.rows();
        Eigen::ArrayXXd value = Eigen::ArrayXXd::Constant(rows, S, kNoObstacle);
        Eigen::ArrayXXi beta = Eigen::ArrayXXi::Constant(rows, S, -1);
        for (Eigen::Index s = 0; s < S; ++s) {
            if (states[static_cast<std::size_t>(s)].count + 1 > states.budget()) continue;
            for (std::size_t b = 0; b < impulse.size(); ++b) {
                const int next = states.successor(static_cast<int>(s), b);
                if (next < 0) {
                    throw std::logic_error("obstacle: missing successor state for state " + std::to_string(s));
                }
                const auto cand = -impulse.costs[b] + lv.y.col(next);
                for (Eigen::Index i = 0; i < rows; ++i) {
                    if (cand[i] > value(i, s)) {
                        value(i, s) = cand[i];
                        beta(i, s) = static_cast<int>(b);
                    }
                }
            }
        }
        out.value.push_back(std::move(value));
        out.beta.push_back(std::move(beta));
    }
    return out;
}

ValueField reflected_step(const ValueField* prev, const ScenarioTree& tree, const ImpulseModel& impulse,
                          const StateSpace& states, const Driver& driver, unsigned threads) {
    const int N = tree.depth();
    const auto S = static_cast<Eigen::Index>(states.size());
    const double dt = tree.dt();

    ObstacleField obs;
    if (prev) obs = obstacle(*prev, impulse, states);

    ValueField field;
    field.n = prev ? prev->n + 1 : 0;
    field.levels.resize(static_cast<std::size_t>(N) + 1);

    for (int k = N; k >= 0; --k) {
        const auto ku = static_cast<std::size_t>(k);
        const Eigen::Index rows = ScenarioTree::width(k);
        LevelValues& lv = field.levels[ku];
        lv.z = Eigen::ArrayXXd::Zero(rows, S);
        lv.k_inc = Eigen::ArrayXXd::Zero(rows, S);
        lv.control = Eigen::ArrayXXi::Constant(rows, S, -1);
        if (prev) {
            lv.obstacle = std::move(obs.value[ku]);
            lv.beta = std::move(obs.beta[ku]);
        } else {
            lv.obstacle = Eigen::ArrayXXd::Constant(rows, S, kNoObstacle);
            lv.beta = Eigen::ArrayXXi::Constant(rows, S, -1);
        }

        if (k == N) {
            // No impulses at the horizon: the terminal obstacle is ignored.
            lv.y = Eigen::ArrayXXd::Zero(rows, S);
            continue;
        }

        lv.y.resize(rows, S);
        const Eigen::ArrayXXd& next = field.levels[ku + 1].y;
        parallel_for(static_cast<std::size_t>(rows), threads, [&](std::size_t iu) {
            const auto i = static_cast<Eigen::Index>(iu);
            for (Eigen::Index s = 0; s < S; ++s) {
                const double up = next(2 * i, s);
                const double down = next(2 * i + 1, s);
                const double z = z_repr(up, down, dt);
                const DriverValue g = driver(k, i, static_cast<int>(s), z);
                const double cont = cond_expect(up, down) + g.value * dt;
                if (!std::isfinite(cont)) throw NonFiniteError("reflected_step: non-finite continuation value");
                const double y = std::max(cont, lv.obstacle(i, s));
                lv.y(i, s) = y;
                lv.z(i, s) = z;
                lv.k_inc(i, s) = y - cont;
                lv.control(i, s) = g.control;
            }
        }, 64);
    }
    return field;
}

double sup_increment(const ValueField& a, const ValueField& b) {
    double sup = 0.0;
    for (std::size_t k = 0; k < a.levels.size(); ++k) {
        sup = std::max(sup, (a.levels[k].y - b.levels[k].y).abs().maxCoeff());
    }
    return sup;
}

IterationResult iterate_to_fixed_point(const ScenarioTree& tree, const ImpulseModel& impulse, StateSpace states,
                                       const Driver& driver, double tol, unsigned threads) {
    IterationResult result;
    result.budget = states.budget();
    result.states = std::move(states);
    result.fields.push_back(reflected_step(nullptr, tree, impulse, result.states, driver, threads));

    const int max_n = std::max(result.budget, 1);
    for (int n = 1; n <= max_n; ++n) {
        result.fields.push_back(reflected_step(&result.fields.back(), tree, impulse, result.states, driver, threads));
        const double inc = sup_increment(result.fields[static_cast<std::size_t>(n)],
                                         result.fields[static_cast<std::size_t>(n) - 1]);
        result.increments.push_back(inc);
        if (inc <= tol) {
            result.stalled = true;
            break;
        }
    }
    return result;
}

}  // namespace impctl
