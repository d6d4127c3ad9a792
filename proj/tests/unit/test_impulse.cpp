#include <doctest.h>

#include <random>

#include "../support.hpp"
#include "impctl/eval.hpp"

using namespace testing;

TEST_CASE("impulse: y0 with constant reward telescopes") {
    const auto tree = build_tree(process(0, 1, "1"), 6);
    const auto m = impulse({1.0}, {0.5}, 0.5, 1.0, "1");
    const StateSpace states(m.impulses, 2);
    const ValueField y0 = solve_y0(tree, m, states);
    for (int k = 0; k <= 6; ++k) {
        const auto& lv = y0.levels[static_cast<std::size_t>(k)];
        CHECK((lv.y - (1.0 - tree.time(k))).abs().maxCoeff() < 1e-14);
        CHECK((lv.k_inc == 0.0).all());
    }
}

TEST_CASE("impulse: shifted reward at xi = 1") {
    const auto tree = build_tree(det_process(), 2);
    const auto m = det_impulse();
    const StateSpace states(m.impulses, 2);
    const ValueField y0 = solve_y0(tree, m, states);
    const int s1 = *states.find(1.0, 1);
    CHECK(y0.root_value(s1) == doctest::Approx(1.0).epsilon(1e-8));
    // exact: h = clamp(L + 1, 0, 1) with L a hair above/below 0
    const double exact = BellmanOracle(det_process(), impulse({1.0}, {0.3}, 0.3, 1.0, "clamp(x + 1, 0, 1)"), 2).value(0);
    CHECK(y0.root_value(s1) == doctest::Approx(exact).epsilon(1e-15));
}

TEST_CASE("impulse: zero reward keeps everything at zero") {
    const auto tree = build_tree(process(0, 1, "1"), 4);
    const auto m = impulse({1.0, -1.0}, {0.2, 0.2}, 0.2, 0.0, "0");
    const auto r = value_iteration(tree, m, {.budget = 3});
    CHECK(r.stalled);
    CHECK(r.top() == 1);
    for (const auto& f : r.fields) for (const auto& lv : f.levels) CHECK((lv.y == 0.0).all());
    const auto st = extract_strategy(r, tree, m);
    CHECK(st.impulse_entries() == 0);
    CHECK(effective_budget(m, 1.0, {}) == 0);
}

TEST_CASE("impulse: expensive impulses never bind") {
    const auto tree = build_tree(process(0, 1, "1 + 0.2*xmax"), 5);
    const auto m = impulse({1.0}, {1.0}, 1.0, 1.0, "clamp(0.5 + x, 0, 1)");
    const auto r = value_iteration(tree, m, {.budget = 3});
    REQUIRE(r.fields.size() >= 2);
    const int states = static_cast<int>(r.states.size());
    for (std::size_t n = 1; n < r.fields.size(); ++n) {
        for (int k = 0; k <= 5; ++k) {
            const auto& a = r.fields[n].levels[static_cast<std::size_t>(k)];
            const auto& b = r.fields[0].levels[static_cast<std::size_t>(k)];
            CHECK((a.y - b.y).abs().maxCoeff() == 0.0);
            CHECK((a.obstacle <= 0.0 + 1e-15 || a.obstacle == -INFINITY).all());
        }
    }
    CHECK(states > 0);
    CHECK(extract_strategy(r, tree, m).impulse_entries() == 0);
}

TEST_CASE("impulse: pinned deterministic instance") {
    const auto tree = build_tree(det_process(), 2);
    const auto m = det_impulse();
    const auto r = value_iteration(tree, m, {.budget = 4});
    REQUIRE(r.stalled);
    CHECK(r.stall_index() == 2);
    CHECK(r.fields[1].root_value() == doctest::Approx(0.7).epsilon(1e-8));
    CHECK(r.y0() == doctest::Approx(0.7).epsilon(1e-8));
    const BellmanOracle oracle(det_process(), m, 2);
    for (int n = 0; n <= 2; ++n) CHECK(r.fields[static_cast<std::size_t>(n)].root_value() == doctest::Approx(BellmanOracle(oracle).value(n)).epsilon(1e-15));

    const auto obst = obstacle(r.fields[0], m, r.states);
    CHECK(obst.value[0](0, 0) == doctest::Approx(0.7).epsilon(1e-8));
    const int last = *r.states.find(4.0, 4);
    CHECK(obst.value[0](0, last) == -INFINITY);
    CHECK(obst.beta[0](0, last) == -1);

    const auto st = extract_strategy(r, tree, m);
    CHECK(st.impulse_entries() == 1);
    CHECK(st.at({0, 0}, 0) == Action::impulse(0));
    CHECK(st.at({0, 0}, 1) == Action::keep());
    for (int i = 0; i < 2; ++i) CHECK(st.at({1, i}, 1) == Action::keep());
    CHECK(evaluate_strategy_exact(tree, m, st).value == doctest::Approx(r.y0()).epsilon(1e-15));
}

TEST_CASE("impulse: tie break picks the first impulse in U order") {
    const auto tree = build_tree(det_process(), 2);
    // both impulses land h at exactly 1 on every path
    for (auto U : {std::vector<double>{2.0, 3.0}, std::vector<double>{3.0, 2.0}}) {
        const auto m = impulse(U, {0.3, 0.3}, 0.3, 1.0, "clamp(x, 0, 1)");
        const auto r = value_iteration(tree, m, {.budget = 1});
        const auto st = extract_strategy(r, tree, m);
        CHECK(st.at({0, 0}, 0) == Action::impulse(0));
        CHECK(r.fields[1].levels[0].beta(0, 0) == 0);
    }
}

TEST_CASE("impulse: random instances against the Bellman oracle") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 8; ++trial) {
        const auto in = random_instance(rng, 2 + trial % 3, 1 + trial % 2);
        const auto tree = build_tree(in.process, in.depth);
        for (int n = 0; n <= 3; ++n) {
            const StateSpace states(in.impulse.impulses, n);
            ValueField f = solve_y0(tree, in.impulse, states);
            for (int j = 1; j <= n; ++j) f = iterate_value(f, tree, in.impulse, states);
            BellmanOracle oracle(in.process, in.impulse, in.depth);
            CHECK_MESSAGE(f.root_value() == doctest::Approx(oracle.value(n)).epsilon(1e-12), in.label << " n=" << n);
        }
    }
}

TEST_CASE("impulse: thread count does not change fields") {
    std::mt19937_64 rng(99);
    const auto in = random_instance(rng, 9, 2);
    const auto tree = build_tree(in.process, in.depth);
    const auto a = value_iteration(tree, in.impulse, {.threads = 1});
    const auto b = value_iteration(tree, in.impulse, {.threads = 4});
    REQUIRE(a.fields.size() == b.fields.size());
    for (std::size_t n = 0; n < a.fields.size(); ++n) CHECK(sup_increment(a.fields[n], b.fields[n]) == 0.0);
}

TEST_CASE("impulse: strategy table validation") {
    const std::vector<double> U{1.0};
    Strategy st(StateSpace(U, 1), 2);
    CHECK_THROWS_AS(st.set({2, 0}, 0, Action::impulse(0)), std::invalid_argument);
    CHECK_THROWS_AS(st.set({0, 0}, 1, Action::impulse(0)), std::invalid_argument);
    CHECK_THROWS_AS(st.set({0, 0}, 0, Action::impulse(3)), std::invalid_argument);
    st.set({0, 0}, 0, Action::keep());
    const auto tree = build_tree(det_process(), 2);
    CHECK_THROWS_AS(evaluate_strategy_exact(tree, det_impulse(), st), StrategyGapError);
}
