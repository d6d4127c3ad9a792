#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "impctl/expr.hpp"

namespace impctl {

/// Uncontrolled state process: dL = b(t, L.) dt + sigma(t, L.) dB, L_0 = x0.
struct ProcessModel {
    double x0 = 0.0;
    double horizon = 1.0;
    CoefficientExpr sigma = CoefficientExpr::constant(1.0);
    std::optional<CoefficientExpr> drift;
};

/// Finite impulse set with tabulated costs and a bounded running reward.
struct ImpulseModel {
    std::vector<double> impulses;
    std::vector<double> costs;  // costs[i] is the cost of impulses[i]
    double cost_floor = 0.0;
    double reward_bound = 0.0;
    CoefficientExpr reward;

    std::size_t size() const { return impulses.size(); }
};

/// Finite control grid and the controlled drift f(t, w, u).
struct ControlGrid {
    std::vector<double> controls;
    CoefficientExpr drift;

    std::size_t size() const { return controls.size(); }
};

/// Running functionals of one path prefix, at grid time t.
struct PathFeatures {
    double t = 0.0;
    double x = 0.0;
    double xmax = 0.0;
    double xmin = 0.0;
    double xavg = 0.0;

    /// Bindings for the path shifted by a constant `shift` (w + a).
    Env env(double shift = 0.0) const {
        Env e;
        e.set(Var::t, t).set(Var::x, x + shift).set(Var::xmax, xmax + shift);
        e.set(Var::xmin, xmin + shift).set(Var::xavg, xavg + shift);
        return e;
    }

    Env env(double shift, double control) const { return env(shift).set(Var::u, control); }
};

}  // namespace impctl
