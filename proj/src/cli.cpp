#include "impctl/cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "impctl/audit.hpp"
#include "impctl/config.hpp"
#include "impctl/eval.hpp"
#include "impctl/impulse.hpp"
#include "impctl/io.hpp"
#include "impctl/numeric.hpp"
#include "impctl/parallel.hpp"

namespace impctl::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class AuditFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Flags {
    std::string config;
    std::string out;
    std::string strategy;
    std::string payoff;
    int depth = 0;
    double tol = 0.0;
    int budget = 0;
    unsigned threads = 0;
    std::size_t mc_samples = 0;
    std::uint64_t seed = 0;
    int max_impulses = 0;
    int level = 0;

    CLI::Option* depth_opt = nullptr;
    CLI::Option* tol_opt = nullptr;
    CLI::Option* budget_opt = nullptr;
};

class Stopwatch {
public:
    double lap() {
        const auto now = std::chrono::steady_clock::now();
        const double s = std::chrono::duration<double>(now - last_).count();
        last_ = now;
        return s;
    }

private:
    std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

// Flags override config values, which override defaults.
struct Settings {
    int depth;
    double tol;
    std::optional<int> budget;
    unsigned threads;
};

Settings resolve(const Flags& f, const Problem& p) {
    Settings s{p.numerics.depth, p.numerics.tol, p.numerics.budget, f.threads ? f.threads : default_threads()};
    if (f.depth_opt && f.depth_opt->count()) s.depth = f.depth;
    if (f.tol_opt && f.tol_opt->count()) s.tol = f.tol;
    if (f.budget_opt && f.budget_opt->count()) s.budget = f.budget;
    return s;
}

fs::path out_dir(const Flags& f) {
    fs::path dir(f.out);
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream o(path, std::ios::binary);
    if (!o) throw std::runtime_error("cannot write " + path.string());
    o << text;
}

void write_json(const fs::path& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

template <typename Writer>
void write_csv(const fs::path& path, Writer&& writer) {
    std::ostringstream os;
    writer(os);
    write_file(path, os.str());
}

void require_audit(const AuditReport& audit) {
    if (!audit.passed()) throw AuditFailure(audit.summary());
}

json policy_json(const PolicyValue& pv) {
    json j{{"value", pv.value}, {"reward_part", pv.reward_part}, {"cost_part", pv.cost_part}, {"samples", pv.samples}};
    if (pv.method == PolicyValue::Method::MonteCarlo) {
        j["method"] = "monte-carlo";
        j["std_error"] = *pv.std_error;
        j["seed"] = pv.seed;
    } else {
        j["method"] = "exact";
    }
    return j;
}

json impulse_distribution(const Strategy& strategy) {
    const auto arrival = arrival_states(strategy);
    const Eigen::ArrayXi& leaves = arrival.back();
    std::vector<double> counts(static_cast<std::size_t>(strategy.states().budget()) + 1, 0.0);
    for (Eigen::Index j = 0; j < leaves.size(); ++j) {
        counts[static_cast<std::size_t>(strategy.states()[static_cast<std::size_t>(leaves[j])].count)] += 1.0;
    }
    for (double& c : counts) c /= static_cast<double>(leaves.size());
    while (counts.size() > 1 && counts.back() == 0.0) counts.pop_back();
    return counts;
}

json strategy_entries(const Strategy& strategy, const ImpulseModel& impulse) {
    json entries = json::array();
    strategy.for_each([&](NodeRef node, int s, Action a) {
        const ImpulseState& st = strategy.states()[static_cast<std::size_t>(s)];
        json e{{"level", node.level}, {"index", node.index}, {"state_cum", st.cumulative}, {"state_count", st.count}};
        if (a.kind == Action::Kind::Impulse) {
            e["action"] = "impulse";
            e["beta"] = impulse.impulses[static_cast<std::size_t>(a.beta)];
        } else {
            e["action"] = "continue";
            e["beta"] = nullptr;
        }
        entries.push_back(std::move(e));
    });
    return entries;
}

json solve_report(const char* mode, const Problem& p, const Settings& s, const ScenarioTree& tree,
                  const IterationResult& result, const Strategy& strategy, const PolicyValue& forward,
                  double residual) {
    std::vector<double> per_iteration;
    for (const ValueField& f : result.fields) per_iteration.push_back(f.root_value());
    json j;
    j["mode"] = mode;
    j["config"] = p.source;
    j["config_hash"] = config_hash(p.source);
    j["numerics"] = {{"depth", s.depth}, {"tol", s.tol}};
    j["tree"] = {{"depth", tree.depth()}, {"nodes", tree.node_count()}, {"states", result.states.size()}};
    j["Y0"] = result.y0();
    j["iterations"] = result.top();
    j["stalled"] = result.stalled;
    j["stall_index"] = result.stall_index();
    j["budget_used"] = result.budget;
    j["per_iteration_Y0"] = per_iteration;
    j["increments"] = result.increments;
    j["strategy"] = {{"impulse_entries", strategy.impulse_entries()},
                     {"impulse_count_distribution", impulse_distribution(strategy)}};
    j["forward"] = policy_json(forward);
    j["forward_value"] = forward.value;
    j["consistency_residual"] = residual;
    j["consistency_tolerance"] = kConsistencyTolerance;
    j["status"] = residual <= kConsistencyTolerance ? "ok" : "inconsistent";
    return j;
}

int cmd_solve(const Flags& f, bool combined, std::ostream& out) {
    Stopwatch clock;
    json timings;
    const Problem p = load_config(f.config);
    const Settings s = resolve(f, p);
    if (combined && !p.control) throw ConfigError("solve-combined: config has no \"control\" block");

    const ScenarioTree tree = build_tree(p.process, s.depth, {.threads = s.threads});
    timings["build_tree_s"] = clock.lap();

    SolveOptions opts{.tol = s.tol, .budget = s.budget, .threads = s.threads};
    const StateSpace states(p.impulse.impulses, effective_budget(p.impulse, tree.horizon(), opts));
    const ControlGrid* grid = combined ? &*p.control : nullptr;
    require_audit(validate_model(p.process, p.impulse, grid, tree, states));
    timings["audit_s"] = clock.lap();

    const fs::path dir = out_dir(f);
    json report;
    if (!combined) {
        const IterationResult result = value_iteration(tree, p.impulse, opts);
        timings["solve_s"] = clock.lap();
        const Strategy strategy = extract_strategy(result, tree, p.impulse, s.tol);
        timings["extract_s"] = clock.lap();
        const PolicyValue forward = evaluate_strategy_exact(tree, p.impulse, strategy, s.threads);
        timings["evaluate_s"] = clock.lap();
        const double residual = std::abs(result.y0() - forward.value);
        report = solve_report("impulse", p, s, tree, result, strategy, forward, residual);
        write_csv(dir / "strategy.csv", [&](std::ostream& o) { write_strategy_csv(o, strategy, p.impulse); });
        write_csv(dir / "values.csv", [&](std::ostream& o) { write_values_csv(o, result); });
    } else {
        const HamiltonianSpec spec(p.process, p.impulse, *p.control);
        const IterationResult result = combined_value_iteration(tree, p.impulse, spec, opts);
        timings["solve_s"] = clock.lap();
        const auto [strategy, controls] = extract_pair(result, tree, p.impulse, spec, s.tol);
        timings["extract_s"] = clock.lap();
        const PolicyValue forward = evaluate_pair(tree, p.impulse, spec, strategy, controls);
        timings["evaluate_s"] = clock.lap();
        const double residual = std::abs(result.y0() - forward.value);
        report = solve_report("combined", p, s, tree, result, strategy, forward, residual);
        write_csv(dir / "strategy.csv", [&](std::ostream& o) { write_strategy_csv(o, strategy, p.impulse); });
        write_csv(dir / "values.csv", [&](std::ostream& o) { write_values_csv(o, result); });
        write_csv(dir / "controls.csv",
                  [&](std::ostream& o) { write_controls_csv(o, strategy, controls, *p.control); });
    }
    write_json(dir / "report.json", report);
    timings["threads"] = s.threads;
    write_json(dir / "timings.json", timings);

    out << "Y0 = " << format_double(report["Y0"].get<double>()) << ", iterations = " << report["iterations"]
        << ", stalled = " << report["stalled"] << ", residual = " << report["consistency_residual"] << "\n";
    return report["status"] == "ok" ? kExitOk : kExitError;
}

int cmd_oracle(const Flags& f, std::ostream& out) {
    const Problem p = load_config(f.config);
    const Settings s = resolve(f, p);
    const ScenarioTree tree = build_tree(p.process, s.depth, {.threads = s.threads});
    require_audit(validate_model(p.process, p.impulse, nullptr, tree, StateSpace(p.impulse.impulses, f.max_impulses)));
    const OracleResult r = enumerate_optimal(tree, p.impulse, f.max_impulses);
    json j{{"config_hash", config_hash(p.source)},
           {"depth", s.depth},
           {"max_impulses", f.max_impulses},
           {"value", r.value},
           {"nodes_visited", r.nodes_visited},
           {"strategy", strategy_entries(r.strategy, p.impulse)}};
    write_json(out_dir(f) / "oracle.json", j);
    out << "oracle value = " << format_double(r.value) << "\n";
    return kExitOk;
}

int cmd_eval(const Flags& f, std::ostream& out) {
    const Problem p = load_config(f.config);
    const Settings s = resolve(f, p);

    std::ifstream scan(f.strategy);
    if (!scan) throw std::runtime_error("cannot open strategy file " + f.strategy);
    const StrategyCsvExtent extent = scan_strategy_csv(scan);
    if (extent.max_level > s.depth) throw std::runtime_error("strategy is deeper than the tree");
    const SolveOptions opts{.tol = s.tol, .budget = s.budget, .threads = s.threads};
    const int budget = std::max(effective_budget(p.impulse, p.process.horizon, opts), extent.max_count);

    const ScenarioTree tree = build_tree(p.process, s.depth, {.threads = s.threads});
    require_audit(validate_model(p.process, p.impulse, nullptr, tree, StateSpace(p.impulse.impulses, budget)));

    std::ifstream in(f.strategy);
    const Strategy strategy = read_strategy_csv(in, p.impulse, s.depth, budget);
    const PolicyValue exact = evaluate_strategy_exact(tree, p.impulse, strategy, s.threads);
    json j{{"config_hash", config_hash(p.source)}, {"depth", s.depth}, {"exact", policy_json(exact)}};
    out << "exact value = " << format_double(exact.value) << "\n";
    if (f.mc_samples > 0) {
        const PolicyValue mc = mc_evaluate_strategy(p.impulse, p.process, strategy, f.mc_samples, f.seed);
        j["monte_carlo"] = policy_json(mc);
        out << "monte carlo = " << format_double(mc.value) << " +- " << format_double(*mc.std_error) << "\n";
    }
    write_json(out_dir(f) / "policy_value.json", j);
    return kExitOk;
}

int cmd_snell(const Flags& f, std::ostream& out) {
    std::ifstream in(f.payoff);
    if (!in) throw std::runtime_error("cannot open payoff file " + f.payoff);
    const PayoffProcess payoff = read_payoff_csv(in);
    const double tol = f.tol_opt->count() ? f.tol : 1e-12;
    const EnvelopeResult env = snell_envelope(payoff, tol);
    const fs::path dir = out_dir(f);
    write_csv(dir / "envelope.csv", [&](std::ostream& o) { write_envelope_csv(o, payoff, env); });
    json j{{"depth", payoff.depth()}, {"tol", tol}, {"V0", env.envelope[0][0]},
           {"stopping_value", stopping_value(payoff, env)}};
    write_json(dir / "snell.json", j);
    out << "V0 = " << format_double(env.envelope[0][0]) << "\n";
    return kExitOk;
}

int cmd_dump(const Flags& f, std::ostream& out) {
    const Problem p = load_config(f.config);
    const Settings s = resolve(f, p);
    const ScenarioTree tree = build_tree(p.process, s.depth, {.threads = s.threads});
    if (f.out.empty()) {
        write_tree_level_csv(out, tree, f.level);
    } else {
        write_csv(out_dir(f) / ("tree_level_" + std::to_string(f.level) + ".csv"),
                  [&](std::ostream& o) { write_tree_level_csv(o, tree, f.level); });
    }
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Impulse control of path-dependent processes on an exact binary scenario tree", "impctl"};
    app.require_subcommand(1);
    Flags f;

    auto add_numerics = [&f](CLI::App* cmd) {
        f.depth_opt = cmd->add_option("--depth", f.depth, "Tree depth N")->check(CLI::Range(1, 40));
        f.tol_opt = cmd->add_option("--tol", f.tol, "Equality tolerance for Y = O and the stall test");
        f.budget_opt = cmd->add_option("--budget", f.budget, "Impulse budget (default ceil(gamma T / c))")
                           ->check(CLI::NonNegativeNumber);
        cmd->add_option("--threads", f.threads, "Worker threads (0 = hardware concurrency)");
    };

    auto* solve = app.add_subcommand("solve", "Solve the impulse control problem");
    solve->add_option("--config", f.config)->required();
    solve->add_option("--out", f.out)->required();
    add_numerics(solve);

    auto* solve_combined = app.add_subcommand("solve-combined", "Solve the combined stochastic and impulse problem");
    solve_combined->add_option("--config", f.config)->required();
    solve_combined->add_option("--out", f.out)->required();
    add_numerics(solve_combined);

    auto* oracle = app.add_subcommand("oracle", "Brute-force optimum over strategies with few impulses");
    oracle->add_option("--config", f.config)->required();
    oracle->add_option("--out", f.out)->required();
    oracle->add_option("--max-impulses", f.max_impulses)->required()->check(CLI::Range(0, 16));
    add_numerics(oracle);

    auto* eval = app.add_subcommand("eval", "Evaluate a strategy exactly and optionally by Monte Carlo");
    eval->add_option("--config", f.config)->required();
    eval->add_option("--strategy", f.strategy)->required();
    eval->add_option("--out", f.out)->required();
    eval->add_option("--mc-samples", f.mc_samples);
    eval->add_option("--seed", f.seed);
    add_numerics(eval);

    auto* snell = app.add_subcommand("snell", "Snell envelope of a payoff given on tree nodes");
    snell->add_option("--payoff", f.payoff)->required();
    snell->add_option("--out", f.out)->required();
    f.tol_opt = nullptr;
    auto* snell_tol = snell->add_option("--tol", f.tol);

    auto* dump = app.add_subcommand("dump", "Print the cached path functionals of one tree level");
    dump->add_option("--config", f.config)->required();
    dump->add_option("--level", f.level)->required();
    dump->add_option("--out", f.out);
    add_numerics(dump);

    std::vector<std::string> argv_storage{"impctl"};
    argv_storage.insert(argv_storage.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_storage) argv.push_back(a.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    }

    // Each subcommand registered its own numerics options; point Flags at the parsed one.
    auto bind = [&f](CLI::App* cmd) {
        f.depth_opt = cmd->get_option_no_throw("--depth");
        f.tol_opt = cmd->get_option_no_throw("--tol");
        f.budget_opt = cmd->get_option_no_throw("--budget");
    };

    try {
        if (solve->parsed()) return bind(solve), cmd_solve(f, false, out);
        if (solve_combined->parsed()) return bind(solve_combined), cmd_solve(f, true, out);
        if (oracle->parsed()) return bind(oracle), cmd_oracle(f, out);
        if (eval->parsed()) return bind(eval), cmd_eval(f, out);
        if (snell->parsed()) {
            f.tol_opt = snell_tol;
            return cmd_snell(f, out);
        }
        if (dump->parsed()) return bind(dump), cmd_dump(f, out);
    } catch (const AuditFailure& e) {
        err << e.what() << "\n";
        return kExitAudit;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}

}  // namespace impctl::cli
