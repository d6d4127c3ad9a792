#include "impctl/audit.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace impctl {

namespace {

constexpr std::size_t kKeepPerKind = 5;

class Recorder {
public:
    explicit Recorder(AuditReport& report) : report_(report) {}

    void add(Violation::Kind kind, const std::string& message) {
        auto& n = report_.counts[static_cast<std::size_t>(kind)];
        if (n++ < kKeepPerKind) report_.violations.push_back({kind, message});
    }

private:
    AuditReport& report_;
};

std::string where(const ScenarioTree& tree, NodeRef node, const ImpulseState& s) {
    std::ostringstream os;
    os << "node (" << node.level << ", " << node.index << "), t=" << tree.time(node.level)
       << ", state (" << s.cumulative << ", " << s.count << ")";
    return os.str();
}

bool has_duplicates(const std::vector<double>& values) {
    std::set<double> seen(values.begin(), values.end());
    return seen.size() != values.size();
}

}  // namespace

std::string_view violation_name(Violation::Kind kind) {
    switch (kind) {
        case Violation::Kind::Structure: return "structure";
        case Violation::Kind::RewardBound: return "A1 reward bound";
        case Violation::Kind::CostFloor: return "A2 cost floor";
        case Violation::Kind::Volatility: return "sigma positivity";
        case Violation::Kind::TiltBound: return "tilt bound";
        case Violation::Kind::Evaluation: return "evaluation";
    }
    return "?";
}

std::string AuditReport::summary() const {
    std::ostringstream os;
    if (passed()) {
        os << "audit passed (" << environments << " environments)";
        return os.str();
    }
    os << "audit failed:";
    for (std::size_t k = 0; k < counts.size(); ++k) {
        if (counts[k]) os << " " << violation_name(static_cast<Violation::Kind>(k)) << " x" << counts[k] << ";";
    }
    for (const auto& v : violations) os << "\n  [" << violation_name(v.kind) << "] " << v.message;
    return os.str();
}

AuditReport validate_model(const ProcessModel& process, const ImpulseModel& impulse, const ControlGrid* grid,
                           const ScenarioTree& tree, const StateSpace& states) {
    AuditReport report;
    Recorder rec(report);
    using K = Violation::Kind;

    if (impulse.impulses.empty()) rec.add(K::Structure, "impulse set U is empty");
    if (has_duplicates(impulse.impulses)) rec.add(K::Structure, "impulse set U has duplicate values");
    if (impulse.costs.size() != impulse.impulses.size()) rec.add(K::Structure, "cost table does not cover U");
    if (!(impulse.reward_bound >= 0.0)) rec.add(K::Structure, "reward bound gamma must be >= 0");
    if (grid) {
        if (grid->controls.empty()) rec.add(K::Structure, "control grid V is empty");
        if (has_duplicates(grid->controls)) rec.add(K::Structure, "control grid V has duplicate values");
        if (process.drift) rec.add(K::Structure, "process drift must be absent in combined mode");
    }

    if (!(impulse.cost_floor > 0.0)) rec.add(K::CostFloor, "cost floor c must be > 0");
    for (std::size_t b = 0; b < std::min(impulse.costs.size(), impulse.impulses.size()); ++b) {
        if (!(impulse.costs[b] >= impulse.cost_floor)) {
            std::ostringstream os;
            os << "psi(" << impulse.impulses[b] << ") = " << impulse.costs[b] << " is below c = " << impulse.cost_floor;
            rec.add(K::CostFloor, os.str());
        }
    }

    const double gamma = impulse.reward_bound;
    const std::vector<double> no_control{0.0};
    const auto& controls = grid ? grid->controls : no_control;

    auto check_reward = [&](double h, const std::string& at) {
        if (!(h >= 0.0 && h <= gamma)) {
            std::ostringstream os;
            os << "h = " << h << " outside [0, " << gamma << "] at " << at;
            rec.add(K::RewardBound, os.str());
        }
    };

    for (int k = 0; k <= tree.depth(); ++k) {
        for (Eigen::Index i = 0; i < ScenarioTree::width(k); ++i) {
            const NodeRef node{k, i};
            const PathFeatures feats = tree.features(node);
            for (std::size_t s = 0; s < states.size(); ++s) {
                const ImpulseState& st = states[s];
                // Sigma only needs the shifted path when it enters the Hamiltonian.
                const bool need_sigma = s == 0 || grid != nullptr;
                double sigma = 0.0;
                if (need_sigma) {
                    try {
                        sigma = process.sigma.evaluate(feats.env(st.cumulative));
                        if (!(sigma > 0.0)) {
                            std::ostringstream os;
                            os << "sigma = " << sigma << " at " << where(tree, node, st);
                            rec.add(K::Volatility, os.str());
                        }
                    } catch (const ExprError& e) {
                        rec.add(K::Evaluation, std::string("sigma: ") + e.what() + " at " + where(tree, node, st));
                    }
                }
                for (double u : controls) {
                    ++report.environments;
                    const Env env = grid ? feats.env(st.cumulative, u) : feats.env(st.cumulative);
                    try {
                        check_reward(impulse.reward.evaluate(env), where(tree, node, st));
                    } catch (const ExprError& e) {
                        rec.add(K::Evaluation, std::string("h: ") + e.what() + " at " + where(tree, node, st));
                    }
                    if (grid && sigma > 0.0) {
                        try {
                            const double theta = grid->drift.evaluate(env) / sigma;
                            if (!(std::abs(theta) * tree.sqrt_dt() < 1.0)) {
                                std::ostringstream os;
                                os << "|f/sigma| sqrt(dt) = " << std::abs(theta) * tree.sqrt_dt() << " >= 1 for u = "
                                   << u << " at " << where(tree, node, st);
                                rec.add(K::TiltBound, os.str());
                            }
                        } catch (const ExprError& e) {
                            rec.add(K::Evaluation, std::string("f: ") + e.what() + " at " + where(tree, node, st));
                        }
                    }
                }
            }
        }
    }
    return report;
}

}  // namespace impctl
