#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "impctl/model.hpp"
#include "impctl/states.hpp"
#include "impctl/tree.hpp"

namespace impctl {

struct Violation {
    enum class Kind { Structure, RewardBound, CostFloor, Volatility, TiltBound, Evaluation };

    Kind kind;
    std::string message;
};

std::string_view violation_name(Violation::Kind kind);

/// Result of exhaustively evaluating the model on the tree. Only the first
/// few violations of each kind are kept verbatim; `counts` has the totals.
struct AuditReport {
    std::vector<Violation> violations;
    std::array<std::size_t, 6> counts{};
    std::size_t environments = 0;

    bool passed() const { return violations.empty(); }
    std::size_t count(Violation::Kind kind) const { return counts[static_cast<std::size_t>(kind)]; }
    std::string summary() const;
};

/// Checks reward bounds 0 <= h <= gamma, cost floor psi >= c > 0, sigma > 0 and,
/// when a control grid is given, the tilt bound |f / sigma| sqrt(dt) < 1, over
/// every (node, impulse state, control) environment. Never throws on violations.
AuditReport validate_model(const ProcessModel& process, const ImpulseModel& impulse, const ControlGrid* grid,
                           const ScenarioTree& tree, const StateSpace& states);

}  // namespace impctl
