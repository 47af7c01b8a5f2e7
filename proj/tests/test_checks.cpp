#include <catch2/catch_amalgamated.hpp>

#include "mqlab/checks.hpp"
#include "mqlab/expr.hpp"
#include "mqlab/history.hpp"
#include "mqlab/strategy.hpp"

using namespace mqlab;

TEST_CASE("share grid enumerates the full box") {
    auto grid = share_grid(2, 2);
    CHECK(grid.size() == 9);
    CHECK(grid.front() == ShareVector{0, 0});
    CHECK(grid.back() == ShareVector{2, 2});
    CHECK(share_grid(3, 1).size() == 8);
}

TEST_CASE("monotonicity violations report the lexicographically first witness") {
    // keyed so that (FSS, FSF) is the first violating pair
    std::map<History, double> entries{{History::parse("SSS"), 0.9},
                                      {History::parse("SSF"), 0.9},
                                      {History::parse("FSS"), 0.2},
                                      {History::parse("FSF"), 0.9}};
    TableStrategy adversarial(entries, 0.5);
    CheckReport report = check_monotone(adversarial, 3, {{0, 0}});
    REQUIRE_FALSE(report.passed());
    CHECK(report.violations.front().h1 == History::parse("FSS"));
    CHECK(report.violations.front().h2 == History::parse("FSF"));
    CHECK(report.violations.front().value1 == 0.2);
    CHECK(report.violations.front().value2 == 0.9);
}

TEST_CASE("history-only strategies are weakly and competitively weakly herding") {
    for (const char* name : {"constant", "beta-posterior", "last-experience", "window-average"}) {
        auto s = make_strategy(name);
        INFO(name);
        CHECK(check_weak_herding(*s, false, 3, 3).passed());
        CHECK(check_weak_herding(*s, true, 3, 3).passed());
    }
}

TEST_CASE("the elitist fails weak herding with a located witness") {
    auto s = make_strategy("elitist");
    CheckReport weak = check_weak_herding(*s, false, 2, 3);
    REQUIRE_FALSE(weak.passed());
    const CheckViolation& v = weak.violations.front();
    // own share grew and the probability dropped from 1 to 0
    CHECK(v.shares2[v.product] == v.shares1[v.product] + 1);
    CHECK(v.value1 == 1.0);
    CHECK(v.value2 == 0.0);
}

TEST_CASE("leader-follower passes competitive mode and fails weak mode") {
    auto s = make_strategy("leader-follower");
    CHECK(check_weak_herding(*s, true, 3, 3).passed());
    CheckReport weak = check_weak_herding(*s, false, 3, 3);
    CHECK_FALSE(weak.passed());
}

TEST_CASE("herding-mix is weakly herding") {
    auto s = make_strategy("herding-mix");
    CHECK(check_weak_herding(*s, false, 3, 4).passed());
    CHECK(check_weak_herding(*s, true, 3, 4).passed());
}

TEST_CASE("weak herding implies competitive weak herding across the catalog") {
    for (const CatalogEntry& entry : strategy_catalog()) {
        auto s = make_strategy(entry.name);
        if (check_weak_herding(*s, false, 2, 3).passed()) {
            INFO(entry.name);
            CHECK(check_weak_herding(*s, true, 2, 3).passed());
        }
    }
}

TEST_CASE("anonymity holds for share-blind and label-symmetric strategies") {
    auto beta = make_strategy("beta-posterior");
    CHECK(check_anonymous(*beta, *beta, 3, 3).passed());
    auto elitist = make_strategy("elitist");
    CHECK(check_anonymous(*elitist, *elitist, 2, 3).passed());
}

TEST_CASE("a label-bound strategy fails anonymity with a witness") {
    auto follows_one = ExprStrategy::parse("share(1) / (share(1) + share(2) + 1)");
    CheckReport report = check_anonymous(*follows_one, *follows_one, 1, 2);
    REQUIRE_FALSE(report.passed());
    CHECK_FALSE(report.violations.empty());
    CHECK(report.violations.front().value1 != report.violations.front().value2);
}

TEST_CASE("anonymity check requires two products") {
    auto s = make_strategy("constant");
    CHECK_THROWS_AS(check_anonymous(*s, *s, 2, 2, 1), ValidationError);
}
