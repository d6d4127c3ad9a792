#include "impctl/config.hpp"

#include <charconv>
#include <cstdio>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

namespace impctl {

namespace {

using nlohmann::json;

const json& require(const json& obj, const char* key, const char* section) {
    if (!obj.is_object() || !obj.contains(key)) {
        throw ConfigError(std::string("config: missing \"") + section + "." + key + "\"");
    }
    return obj.at(key);
}

double number(const json& v, const std::string& what) {
    if (!v.is_number()) throw ConfigError("config: " + what + " must be a number");
    return v.get<double>();
}

CoefficientExpr expression(const json& v, const std::string& what) {
    if (!v.is_string()) throw ConfigError("config: " + what + " must be an expression string");
    try {
        return CoefficientExpr::parse(v.get<std::string>());
    } catch (const ExprError& e) {
        throw ConfigError("config: " + what + ": " + e.what());
    }
}

std::vector<double> number_list(const json& v, const std::string& what) {
    if (!v.is_array()) throw ConfigError("config: " + what + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) out.push_back(number(x, what));
    return out;
}

double parse_key(const std::string& key) {
    double value = 0.0;
    const char* first = key.data();
    const char* last = first + key.size();
    if (!key.empty() && *first == '+') ++first;
    auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc{} || res.ptr != last) throw ConfigError("config: psi key \"" + key + "\" is not a number");
    return value;
}

}  // namespace

Problem parse_config(const json& j) {
    if (!j.is_object()) throw ConfigError("config: top level must be an object");
    Problem p;
    p.source = j;

    const json& proc = require(j, "process", "");
    p.process.x0 = number(require(proc, "x0", "process"), "process.x0");
    p.process.horizon = number(require(proc, "T", "process"), "process.T");
    p.process.sigma = expression(require(proc, "sigma", "process"), "process.sigma");
    if (proc.contains("drift") && !proc.at("drift").is_null()) {
        p.process.drift = expression(proc.at("drift"), "process.drift");
    }
    if (!(p.process.horizon > 0.0)) throw ConfigError("config: process.T must be > 0");

    const json& imp = require(j, "impulse", "");
    p.impulse.impulses = number_list(require(imp, "U", "impulse"), "impulse.U");
    p.impulse.cost_floor = number(require(imp, "c", "impulse"), "impulse.c");
    p.impulse.reward_bound = number(require(imp, "gamma", "impulse"), "impulse.gamma");
    p.impulse.reward = expression(require(imp, "h", "impulse"), "impulse.h");

    const json& psi = require(imp, "psi", "impulse");
    if (!psi.is_object()) throw ConfigError("config: impulse.psi must be an object");
    p.impulse.costs.assign(p.impulse.impulses.size(), std::nan(""));
    for (const auto& [key, cost] : psi.items()) {
        const double beta = parse_key(key);
        bool matched = false;
        for (std::size_t b = 0; b < p.impulse.impulses.size(); ++b) {
            if (std::abs(p.impulse.impulses[b] - beta) <= 1e-12) {
                p.impulse.costs[b] = number(cost, "impulse.psi[" + key + "]");
                matched = true;
            }
        }
        if (!matched) throw ConfigError("config: impulse.psi key \"" + key + "\" is not an element of U");
    }
    for (std::size_t b = 0; b < p.impulse.impulses.size(); ++b) {
        if (std::isnan(p.impulse.costs[b])) {
            std::ostringstream os;
            os << "config: impulse.psi has no cost for impulse " << p.impulse.impulses[b];
            throw ConfigError(os.str());
        }
    }

    if (j.contains("control") && !j.at("control").is_null()) {
        const json& ctl = j.at("control");
        ControlGrid grid;
        grid.controls = number_list(require(ctl, "V", "control"), "control.V");
        grid.drift = expression(require(ctl, "f", "control"), "control.f");
        p.control = std::move(grid);
    }

    if (j.contains("numerics") && !j.at("numerics").is_null()) {
        const json& num = j.at("numerics");
        if (num.contains("depth")) {
            if (!num.at("depth").is_number_integer()) throw ConfigError("config: numerics.depth must be an integer");
            p.numerics.depth = num.at("depth").get<int>();
        }
        if (num.contains("tol")) p.numerics.tol = number(num.at("tol"), "numerics.tol");
        if (num.contains("budget") && !num.at("budget").is_null()) {
            if (!num.at("budget").is_number_integer()) throw ConfigError("config: numerics.budget must be an integer");
            p.numerics.budget = num.at("budget").get<int>();
        }
    }
    return p;
}

Problem load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("config: malformed JSON in " + path.string() + ": " + e.what());
    }
    return parse_config(j);
}

std::string config_hash(const json& j) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : j.dump()) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace impctl
