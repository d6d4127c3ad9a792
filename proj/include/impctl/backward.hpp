#pragma once

#include <vector>

#include <Eigen/Core>

#include "impctl/model.hpp"
#include "impctl/states.hpp"
#include "impctl/tree.hpp"

namespace impctl {

/// One iteration's values on one level: rows are nodes, columns impulse states.
struct LevelValues {
    Eigen::ArrayXXd y;
    Eigen::ArrayXXd z;
    Eigen::ArrayXXd k_inc;
    Eigen::ArrayXXd obstacle;  // -inf where no impulse is admissible
    Eigen::ArrayXXi beta;      // obstacle argmax (index into U), -1 if none
    Eigen::ArrayXXi control;   // driver argmax (index into V), -1 if the driver has no control
};

/// Y^n together with its Z and reflection increments, for every (node, state).
struct ValueField {
    int n = 0;
    std::vector<LevelValues> levels;

    double root_value(int state = 0) const { return levels.front().y(0, state); }
};

struct DriverValue {
    double value = 0.0;
    int control = -1;
};

/// Generator g of the explicit backward step cont = E[Y_{k+1}] + g(k, node, state, z) dt.
class Driver {
public:
    virtual ~Driver() = default;
    virtual DriverValue operator()(int level, Eigen::Index node, int state, double z) const = 0;
};

struct ObstacleField {
    std::vector<Eigen::ArrayXXd> value;
    std::vector<Eigen::ArrayXXi> beta;
};

/// O^n(node, s) = max over admissible beta of (-psi(beta) + Y^{n-1}(node, s + beta)),
/// first maximiser in U order. Budget-exhausted states get -inf.
ObstacleField obstacle(const ValueField& prev, const ImpulseModel& impulse, const StateSpace& states);

/// One reflected backward pass. With prev == nullptr this is the unreflected n = 0 pass.
ValueField reflected_step(const ValueField* prev, const ScenarioTree& tree, const ImpulseModel& impulse,
                          const StateSpace& states, const Driver& driver, unsigned threads = 1);

/// Sup over every (level, node, state) of |a.y - b.y|.
double sup_increment(const ValueField& a, const ValueField& b);

struct IterationResult {
    StateSpace states;
    int budget = 0;
    std::vector<ValueField> fields;      // Y^0, Y^1, ..., Y^top
    std::vector<double> increments;      // increments[n - 1] = sup |Y^n - Y^{n-1}|
    bool stalled = false;

    int top() const { return static_cast<int>(fields.size()) - 1; }
    double y0() const { return fields.back().root_value(); }
    /// First n with sup |Y^n - Y^{n-1}| <= tol, or -1.
    int stall_index() const { return stalled ? top() : -1; }
};

/// Runs Y^0, Y^1, ... until the sup increment is <= tol or n reaches max(budget, 1).
IterationResult iterate_to_fixed_point(const ScenarioTree& tree, const ImpulseModel& impulse, StateSpace states,
                                       const Driver& driver, double tol, unsigned threads = 1);

}  // namespace impctl
