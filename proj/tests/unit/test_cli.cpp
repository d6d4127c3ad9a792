#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "../support.hpp"
#include "impctl/audit.hpp"
#include "impctl/cli.hpp"
#include "impctl/config.hpp"
#include "impctl/io.hpp"

using namespace testing;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* kDet = R"json({"process": {"x0": 0, "T": 1, "sigma": "1e-9", "drift": null},
 "impulse": {"U": [1], "psi": {"1": 0.3}, "c": 0.3, "gamma": 1, "h": "clamp(x, 0, 1)"},
 "control": null, "numerics": {"depth": 2, "tol": 1e-12, "budget": 4}})json";

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("impctl_test_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    fs::path write(const std::string& name, const std::string& text) const {
        std::ofstream(path / name) << text;
        return path / name;
    }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run(std::vector<std::string> args, std::string* err_text = nullptr) {
    std::ostringstream out, err;
    const int rc = cli::run(args, out, err);
    if (err_text) *err_text = err.str();
    return rc;
}

}  // namespace

TEST_CASE("config: parse and errors") {
    const auto p = parse_config(json::parse(kDet));
    CHECK(p.impulse.costs == std::vector<double>{0.3});
    CHECK(p.numerics.depth == 2);
    CHECK(*p.numerics.budget == 4);
    CHECK_FALSE(p.control);
    CHECK_FALSE(p.process.drift);

    auto j = json::parse(kDet);
    j["impulse"]["psi"] = {{"2", 0.3}};
    CHECK_THROWS_AS(parse_config(j), ConfigError);
    j = json::parse(kDet);
    j["impulse"].erase("gamma");
    CHECK_THROWS_AS(parse_config(j), ConfigError);
    j = json::parse(kDet);
    j["impulse"]["h"] = "x +";
    CHECK_THROWS_AS(parse_config(j), ConfigError);
    j = json::parse(kDet);
    j["numerics"]["depth"] = 2.5;
    CHECK_THROWS_AS(parse_config(j), ConfigError);

    CHECK(config_hash(json::parse(kDet)) == config_hash(json::parse(kDet)));
    CHECK(config_hash(json::parse(kDet)).size() == 16);
    j = json::parse(kDet);
    j["process"]["x0"] = 0.1;
    CHECK(config_hash(j) != config_hash(json::parse(kDet)));
}

TEST_CASE("audit: violations") {
    const auto tree = build_tree(process(0, 1, "1"), 3);
    const std::vector<double> U{1.0};
    const StateSpace states(U, 2);
    CHECK(validate_model(process(0, 1, "1"), impulse(U, {0.5}, 0.5, 1.0, "0.5"), nullptr, tree, states).passed());

    auto r = validate_model(process(0, 1, "1"), impulse(U, {0.0}, 0.1, 1.0, "0.5"), nullptr, tree, states);
    CHECK(r.count(Violation::Kind::CostFloor) > 0);
    r = validate_model(process(0, 1, "0"), impulse(U, {0.5}, 0.5, 1.0, "0.5"), nullptr, tree, states);
    CHECK(r.count(Violation::Kind::Volatility) > 0);
    r = validate_model(process(0, 1, "1"), impulse(U, {0.5}, 0.5, 1.0, "x"), nullptr, tree, states);
    CHECK(r.count(Violation::Kind::RewardBound) > 0);
    CHECK_FALSE(r.summary().empty());
    r = validate_model(process(0, 1, "1"), impulse(U, {0.5}, 0.5, 1.0, "u"), nullptr, tree, states);
    CHECK(r.count(Violation::Kind::Evaluation) > 0);
    r = validate_model(process(0, 1, "1"), impulse({1.0, 1.0}, {0.5, 0.5}, 0.5, 1.0, "0.5"), nullptr, tree, states);
    CHECK(r.count(Violation::Kind::Structure) > 0);
    ControlGrid g{{1.0}, ex("u")};
    r = validate_model(process(0, 1, "1", "0.1"), impulse(U, {0.5}, 0.5, 1.0, "0.5"), &g, tree, states);
    CHECK(r.count(Violation::Kind::Structure) > 0);
}

TEST_CASE("io: strategy csv round trip") {
    const auto tree = build_tree(det_process(), 2);
    const auto m = det_impulse();
    const auto r = value_iteration(tree, m, {.budget = 4});
    const auto st = extract_strategy(r, tree, m);
    std::ostringstream os;
    write_strategy_csv(os, st, m);
    std::istringstream is(os.str());
    const auto back = read_strategy_csv(is, m, 2, 4);
    std::ostringstream os2;
    write_strategy_csv(os2, back, m);
    CHECK(os.str() == os2.str());

    std::istringstream bad("level,index,state_cum,state_count,action,beta\n0,0,0,0,jump,\n");
    CHECK_THROWS(read_strategy_csv(bad, m, 2, 4));
    std::istringstream badhdr("lvl\n");
    CHECK_THROWS(read_strategy_csv(badhdr, m, 2, 4));
}

TEST_CASE("io: payoff csv") {
    std::istringstream in("level,index,value\n0,0,0\n1,0,1\n1,1,0\n2,0,0\n2,1,0\n2,2,3\n2,3,0\n");
    const auto p = read_payoff_csv(in);
    CHECK(p.depth() == 2);
    CHECK(snell_envelope(p).envelope[0][0] == 1.25);
    std::istringstream missing("level,index,value\n0,0,0\n1,0,1\n");
    CHECK_THROWS(read_payoff_csv(missing));
}

TEST_CASE("cli: solve writes the reports") {
    TempDir tmp;
    const auto cfg = tmp.write("det.json", kDet);
    REQUIRE(run({"solve", "--config", cfg.string(), "--out", (tmp.path / "r").string()}) == cli::kExitOk);
    const auto rep = json::parse(slurp(tmp.path / "r" / "report.json"));
    CHECK(rep["Y0"].get<double>() == doctest::Approx(0.7).epsilon(1e-8));
    CHECK(rep["iterations"] == 2);
    CHECK(rep["stalled"] == true);
    CHECK(rep["budget_used"] == 4);
    CHECK(rep["per_iteration_Y0"].size() == 3);
    CHECK(rep["status"] == "ok");
    CHECK(rep["config_hash"] == config_hash(json::parse(kDet)));
    const auto csv = slurp(tmp.path / "r" / "strategy.csv");
    CHECK(csv.rfind("level,index,state_cum,state_count,action,beta\n0,0,0,0,impulse,1\n", 0) == 0);
    CHECK(slurp(tmp.path / "r" / "values.csv").rfind("n,level,index,state_cum,state_count,Y,Z,K_inc\n", 0) == 0);

    // flags override config
    REQUIRE(run({"solve", "--config", cfg.string(), "--out", (tmp.path / "b").string(), "--budget", "1", "--depth",
                 "3"}) == 0);
    const auto rb = json::parse(slurp(tmp.path / "b" / "report.json"));
    CHECK(rb["budget_used"] == 1);
    CHECK(rb["tree"]["depth"] == 3);

    // eval on the produced strategy
    REQUIRE(run({"eval", "--config", cfg.string(), "--strategy", (tmp.path / "r" / "strategy.csv").string(),
                 "--mc-samples", "1000", "--seed", "9", "--out", (tmp.path / "e").string()}) == 0);
    const auto pv = json::parse(slurp(tmp.path / "e" / "policy_value.json"));
    CHECK(pv["exact"]["value"].get<double>() == doctest::Approx(0.7).epsilon(1e-8));
    CHECK(pv["monte_carlo"]["seed"] == 9);

    REQUIRE(run({"oracle", "--config", cfg.string(), "--max-impulses", "2", "--out", (tmp.path / "o").string()}) == 0);
    const auto oj = json::parse(slurp(tmp.path / "o" / "oracle.json"));
    CHECK(oj["value"].get<double>() == doctest::Approx(rep["Y0"].get<double>()).epsilon(1e-15));
    CHECK(oj["strategy"].is_array());
}

TEST_CASE("cli: zero reward and exit codes") {
    TempDir tmp;
    auto j = json::parse(kDet);
    j["impulse"]["h"] = "0";
    j["impulse"]["gamma"] = 0;
    const auto zero = tmp.write("zero.json", j.dump());
    REQUIRE(run({"solve", "--config", zero.string(), "--out", (tmp.path / "z").string()}) == 0);
    const auto rep = json::parse(slurp(tmp.path / "z" / "report.json"));
    CHECK(rep["Y0"] == 0.0);
    CHECK(rep["strategy"]["impulse_entries"] == 0);

    j = json::parse(kDet);
    j["impulse"]["psi"]["1"] = 0.1;  // below the floor c = 0.3
    const auto bad = tmp.write("bad_psi.json", j.dump());
    std::string err;
    CHECK(run({"solve", "--config", bad.string(), "--out", (tmp.path / "x").string()}, &err) == cli::kExitAudit);
    CHECK(err.find("cost") != std::string::npos);

    CHECK(run({"solve", "--config", (tmp.path / "nope.json").string(), "--out", tmp.path.string()}) == cli::kExitError);
    const auto broken = tmp.write("broken.json", "{\"process\": ");
    CHECK(run({"solve", "--config", broken.string(), "--out", tmp.path.string()}) == cli::kExitError);
    CHECK(run({"solve", "--config", zero.string(), "--out", tmp.path.string(), "--frobnicate"}) == cli::kExitError);
    CHECK(run({"launch"}) == cli::kExitError);
    CHECK(run({"--help"}) == cli::kExitOk);
}

TEST_CASE("cli: snell and dump") {
    TempDir tmp;
    const auto pay = tmp.write("pay.csv", "level,index,value\n0,0,0\n1,0,1\n1,1,0\n2,0,0\n2,1,0\n2,2,3\n2,3,0\n");
    REQUIRE(run({"snell", "--payoff", pay.string(), "--out", (tmp.path / "s").string()}) == 0);
    const auto sj = json::parse(slurp(tmp.path / "s" / "snell.json"));
    CHECK(sj["V0"] == 1.25);
    CHECK(slurp(tmp.path / "s" / "envelope.csv").rfind("level,index,X,V,stop,first_stop\n0,0,0,1.25,0,1\n", 0) == 0);

    auto j = json::parse(kDet);
    j["process"]["sigma"] = "1";
    const auto cfg = tmp.write("unit.json", j.dump());
    std::ostringstream out, err;
    REQUIRE(cli::run({"dump", "--config", cfg.string(), "--level", "1", "--depth", "1"}, out, err) == 0);
    CHECK(out.str() == "level,index,t,L,xmax,xmin,xavg\n1,0,1,1,1,0,0.5\n1,1,1,-1,0,-1,-0.5\n");
}
