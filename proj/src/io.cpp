#include "impctl/io.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace impctl {

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

template <typename T>
T parse_cell(const std::string& cell, const char* what, std::size_t line_no) {
    T value{};
    auto res = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size()) {
        throw std::runtime_error("csv line " + std::to_string(line_no) + ": bad " + what + " '" + cell + "'");
    }
    return value;
}

void expect_header(std::istream& in, const std::string& header) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("csv: empty input, expected header '" + header + "'");
    strip_cr(line);
    if (line != header) throw std::runtime_error("csv: expected header '" + header + "', got '" + line + "'");
}

constexpr const char* kStrategyHeader = "level,index,state_cum,state_count,action,beta";
constexpr const char* kPayoffHeader = "level,index,value";

}  // namespace

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_strategy_csv(std::ostream& out, const Strategy& strategy, const ImpulseModel& impulse) {
    out << kStrategyHeader << '\n';
    strategy.for_each([&](NodeRef node, int s, Action a) {
        const ImpulseState& st = strategy.states()[static_cast<std::size_t>(s)];
        out << node.level << ',' << node.index << ',' << format_double(st.cumulative) << ',' << st.count << ',';
        if (a.kind == Action::Kind::Impulse) {
            out << "impulse," << format_double(impulse.impulses[static_cast<std::size_t>(a.beta)]);
        } else {
            out << "continue,";
        }
        out << '\n';
    });
}

StrategyCsvExtent scan_strategy_csv(std::istream& in) {
    expect_header(in, kStrategyHeader);
    StrategyCsvExtent ext;
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (line.empty()) continue;
        const auto cells = split(line);
        if (cells.size() != 6) throw std::runtime_error("csv line " + std::to_string(line_no) + ": expected 6 columns");
        ext.max_level = std::max(ext.max_level, parse_cell<int>(cells[0], "level", line_no));
        ext.max_count = std::max(ext.max_count, parse_cell<int>(cells[3], "state_count", line_no));
    }
    return ext;
}

Strategy read_strategy_csv(std::istream& in, const ImpulseModel& impulse, int depth, int budget) {
    expect_header(in, kStrategyHeader);
    Strategy strategy(StateSpace(impulse.impulses, budget), depth);
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (line.empty()) continue;
        const auto cells = split(line);
        if (cells.size() != 6) throw std::runtime_error("csv line " + std::to_string(line_no) + ": expected 6 columns");
        const int level = parse_cell<int>(cells[0], "level", line_no);
        const auto index = parse_cell<long long>(cells[1], "index", line_no);
        const double cum = parse_cell<double>(cells[2], "state_cum", line_no);
        const int count = parse_cell<int>(cells[3], "state_count", line_no);
        if (level < 0 || level > depth || index < 0 || index >= ScenarioTree::width(level)) {
            throw std::runtime_error("csv line " + std::to_string(line_no) + ": node outside the tree");
        }
        const auto state = strategy.states().find(cum, count);
        if (!state) throw std::runtime_error("csv line " + std::to_string(line_no) + ": unknown impulse state");

        Action action;
        if (cells[4] == "continue") {
            action = Action::keep();
        } else if (cells[4] == "impulse") {
            const double beta = parse_cell<double>(cells[5], "beta", line_no);
            int found = -1;
            for (std::size_t b = 0; b < impulse.size(); ++b) {
                if (std::abs(impulse.impulses[b] - beta) <= 1e-12) found = static_cast<int>(b);
            }
            if (found < 0) throw std::runtime_error("csv line " + std::to_string(line_no) + ": beta not in U");
            action = Action::impulse(found);
        } else {
            throw std::runtime_error("csv line " + std::to_string(line_no) + ": unknown action '" + cells[4] + "'");
        }
        try {
            strategy.set({level, static_cast<Eigen::Index>(index)}, *state, action);
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error("csv line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return strategy;
}

void write_values_csv(std::ostream& out, const IterationResult& result) {
    out << "n,level,index,state_cum,state_count,Y,Z,K_inc\n";
    for (const ValueField& f : result.fields) {
        for (std::size_t k = 0; k < f.levels.size(); ++k) {
            const LevelValues& lv = f.levels[k];
            for (Eigen::Index i = 0; i < lv.y.rows(); ++i) {
                for (Eigen::Index s = 0; s < lv.y.cols(); ++s) {
                    const ImpulseState& st = result.states[static_cast<std::size_t>(s)];
                    out << f.n << ',' << k << ',' << i << ',' << format_double(st.cumulative) << ',' << st.count << ','
                        << format_double(lv.y(i, s)) << ',' << format_double(lv.z(i, s)) << ','
                        << format_double(lv.k_inc(i, s)) << '\n';
                }
            }
        }
    }
}

void write_controls_csv(std::ostream& out, const Strategy& strategy, const ControlTable& controls,
                        const ControlGrid& grid) {
    out << "level,index,state_cum,state_count,u_star\n";
    strategy.for_each([&](NodeRef node, int s, Action a) {
        if (a.kind != Action::Kind::Continue || node.level >= strategy.depth()) return;
        const ImpulseState& st = strategy.states()[static_cast<std::size_t>(s)];
        out << node.level << ',' << node.index << ',' << format_double(st.cumulative) << ',' << st.count << ','
            << format_double(grid.controls[static_cast<std::size_t>(controls.at(node, s))]) << '\n';
    });
}

void write_tree_level_csv(std::ostream& out, const ScenarioTree& tree, int level) {
    if (level < 0 || level > tree.depth()) throw std::out_of_range("dump: level outside [0, depth]");
    out << "level,index,t,L,xmax,xmin,xavg\n";
    for (Eigen::Index i = 0; i < ScenarioTree::width(level); ++i) {
        const PathFeatures f = tree.features({level, i});
        out << level << ',' << i << ',' << format_double(f.t) << ',' << format_double(f.x) << ','
            << format_double(f.xmax) << ',' << format_double(f.xmin) << ',' << format_double(f.xavg) << '\n';
    }
}

PayoffProcess read_payoff_csv(std::istream& in) {
    expect_header(in, kPayoffHeader);
    struct Row {
        int level;
        long long index;
        double value;
    };
    std::vector<Row> rows;
    int depth = -1;
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (line.empty()) continue;
        const auto cells = split(line);
        if (cells.size() != 3) throw std::runtime_error("csv line " + std::to_string(line_no) + ": expected 3 columns");
        Row r{parse_cell<int>(cells[0], "level", line_no), parse_cell<long long>(cells[1], "index", line_no),
              parse_cell<double>(cells[2], "value", line_no)};
        if (r.level < 0 || r.level > 30 || r.index < 0 || r.index >= ScenarioTree::width(r.level)) {
            throw std::runtime_error("csv line " + std::to_string(line_no) + ": node outside the tree");
        }
        depth = std::max(depth, r.level);
        rows.push_back(r);
    }
    if (depth < 0) throw std::runtime_error("payoff csv: no rows");

    PayoffProcess p;
    for (int k = 0; k <= depth; ++k) {
        p.values.push_back(Eigen::ArrayXd::Constant(ScenarioTree::width(k), std::numeric_limits<double>::quiet_NaN()));
    }
    for (const Row& r : rows) {
        double& slot = p.values[static_cast<std::size_t>(r.level)][r.index];
        if (!std::isnan(slot)) throw std::runtime_error("payoff csv: duplicate node");
        slot = r.value;
    }
    for (const auto& level : p.values) {
        if (level.isNaN().any()) throw std::runtime_error("payoff csv: missing nodes");
    }
    return p;
}

void write_envelope_csv(std::ostream& out, const PayoffProcess& payoff, const EnvelopeResult& env) {
    out << "level,index,X,V,stop,first_stop\n";
    for (std::size_t k = 0; k < env.envelope.size(); ++k) {
        for (Eigen::Index i = 0; i < env.envelope[k].size(); ++i) {
            out << k << ',' << i << ',' << format_double(payoff.values[k][i]) << ','
                << format_double(env.envelope[k][i]) << ',' << (env.stop_region[k][i] ? 1 : 0) << ','
                << env.first_optimal_stop[k][i] << '\n';
        }
    }
}

}  // namespace impctl
