#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "mqlab/exact.hpp"
#include "mqlab/spec_io.hpp"

using namespace mqlab;

#ifndef MQLAB_SPEC_DIR
#define MQLAB_SPEC_DIR "specs"
#endif

namespace {

std::filesystem::path spec_path(const char* name) {
    return std::filesystem::path(MQLAB_SPEC_DIR) / name;
}

}  // namespace

TEST_CASE("the bundled elitist spec loads with a configurable customer count") {
    SpecDocument doc = load_market_spec(spec_path("elitist_example.spec"));
    CHECK(doc.market.customers == 2);
    CHECK(doc.market.products == 2);
    CHECK(doc.market.qualities == QualityVector{0.8, 0.3});
    CHECK(doc.market.initial_shares == ShareVector{0, 0});
    // customer 1 follows her last experience, everyone else is an elitist
    CHECK(doc.market.strategy(0, 0).probability(History::parse("F"), {0, 0}, 0) == 0.0);
    CHECK(doc.market.strategy(0, 1).probability(History::parse("F"), {0, 1}, 0) == 1.0);
    CHECK(doc.market.strategy(0, 1).probability(History(), {3, 1}, 0) == 0.0);
    CHECK_FALSE(doc.digest.empty());

    SpecDocument wide = load_market_spec(spec_path("elitist_example.spec"), 5);
    CHECK(wide.market.customers == 5);
    // the extra customers replicate the last declared one (an elitist)
    CHECK(wide.market.strategy(0, 4).probability(History(), {3, 1}, 0) == 0.0);
    CHECK(wide.market.strategy(0, 0).probability(History::parse("F"), {0, 0}, 0) == 0.0);
}

TEST_CASE("the herding baseline passes every theorem-mode check") {
    SpecDocument doc = load_market_spec(spec_path("herding_baseline.spec"));
    REQUIRE(doc.prior.has_value());
    CHECK(doc.prior->is_symmetric_in_first_two());
    HypothesisReport report = check_spec_hypotheses(doc.market, false);
    for (const auto& item : report.items) {
        INFO(item.strategy << " " << item.check << " " << item.witness);
        CHECK(item.passed);
    }
    CHECK(report.all_passed());
}

TEST_CASE("the elitist spec fails the weak herding hypothesis with a witness") {
    SpecDocument doc = load_market_spec(spec_path("elitist_example.spec"));
    HypothesisReport report = check_spec_hypotheses(doc.market, false);
    CHECK_FALSE(report.all_passed());
    bool found = false;
    for (const auto& item : report.items)
        if (!item.passed && item.check == "weak-herding") {
            found = true;
            CHECK_FALSE(item.witness.empty());
        }
    CHECK(found);
}

TEST_CASE("competitive theorem mode rejects three products") {
    std::string text = R"json({
      "schema_version": 1, "customers": 1, "products": 3,
      "qualities": [0.5, 0.5, 0.5], "horizon": 2,
      "strategies": {"default": {"name": "leader-follower"}}
    })json";
    SpecDocument doc = parse_spec_json(text);
    HypothesisReport report = check_spec_hypotheses(doc.market, true);
    CHECK_FALSE(report.all_passed());
    CHECK(report.items.front().check == "competitive-herding-products");
}

TEST_CASE("schema violations are rejected") {
    CHECK_THROWS_AS(parse_spec_json("nonsense"), ValidationError);
    CHECK_THROWS_AS(parse_spec_json("{}"), ValidationError);
    CHECK_THROWS_AS(parse_spec_json(R"json({"schema_version": 2})json"), ValidationError);
    // missing strategies
    CHECK_THROWS_AS(parse_spec_json(R"json({
        "schema_version": 1, "customers": 1, "products": 1,
        "qualities": [0.5], "horizon": 2, "strategies": {}})json"),
                    ValidationError);
    // quality vector length mismatch
    CHECK_THROWS_AS(parse_spec_json(R"json({
        "schema_version": 1, "customers": 1, "products": 2,
        "qualities": [0.5], "horizon": 2,
        "strategies": {"default": {"name": "constant"}}})json"),
                    ValidationError);
    // unknown strategy
    CHECK_THROWS_AS(parse_spec_json(R"json({
        "schema_version": 1, "customers": 1, "products": 1,
        "qualities": [0.5], "horizon": 2,
        "strategies": {"default": {"name": "nope"}}})json"),
                    ValidationError);
    // override out of range
    CHECK_THROWS_AS(parse_spec_json(R"json({
        "schema_version": 1, "customers": 1, "products": 1,
        "qualities": [0.5], "horizon": 2,
        "strategies": {"default": {"name": "constant"},
                       "overrides": [{"customer": 3, "strategy": {"name": "constant"}}]}})json"),
                    ValidationError);
    // two strategy forms at once
    CHECK_THROWS_AS(parse_spec_json(R"json({
        "schema_version": 1, "customers": 1, "products": 1,
        "qualities": [0.5], "horizon": 2,
        "strategies": {"default": {"name": "constant", "expr": "1"}}})json"),
                    ValidationError);
    // malformed expression propagates with its position
    CHECK_THROWS_AS(parse_spec_json(R"json({
        "schema_version": 1, "customers": 1, "products": 1,
        "qualities": [0.5], "horizon": 2,
        "strategies": {"default": {"expr": "(s + ) / 2"}}})json"),
                    ValidationError);
}

TEST_CASE("strategies load from expressions, tables and files") {
    std::string text = R"json({
      "schema_version": 1, "customers": 2, "products": 2,
      "qualities": [0.6, 0.5], "horizon": 2,
      "strategies": {
        "default": {"expr": "(s + 1) / (c + 2)"},
        "overrides": [
          {"customer": 2, "product": 2,
           "strategy": {"table": {".": 0.5, "S": 0.9, "*": 0.25}}}
        ]
      }
    })json";
    SpecDocument doc = parse_spec_json(text);
    CHECK(doc.market.strategy(0, 0).probability(History::parse("FSS"), {}, 0) ==
          Catch::Approx(0.6));
    CHECK(doc.market.strategy(1, 1).probability(History::parse("S"), {}, 1) == 0.9);
    CHECK(doc.market.strategy(1, 1).probability(History::parse("FF"), {}, 1) == 0.25);

    auto dir = std::filesystem::temp_directory_path() / "mqlab_spec_io_test";
    std::filesystem::create_directories(dir);
    {
        std::ofstream table(dir / "table.txt");
        table << "# comment\n. 0.5\nS 0.875\n* 0.125\n";
    }
    std::string file_text = R"json({
      "schema_version": 1, "customers": 1, "products": 1,
      "qualities": [0.5], "horizon": 2,
      "strategies": {"default": {"table_file": "table.txt"}}
    })json";
    SpecDocument file_doc = parse_spec_json(file_text, dir);
    CHECK(file_doc.market.strategy(0, 0).probability(History::parse("S"), {}, 0) == 0.875);
    CHECK(file_doc.market.strategy(0, 0).probability(History::parse("N"), {}, 0) == 0.125);
}

TEST_CASE("priors parse in all three forms") {
    std::string base = R"json({
      "schema_version": 1, "customers": 1, "products": 2,
      "qualities": [0.5, 0.5], "horizon": 1,
      "strategies": {"default": {"name": "constant"}},
      "prior": )json";
    SpecDocument two = parse_spec_json(base + R"json({"type": "two-point", "a": 0.8, "b": 0.3}})json");
    REQUIRE(two.prior.has_value());
    CHECK(two.prior->points.size() == 2);
    CHECK(two.prior->is_symmetric_in_first_two());

    SpecDocument uniform = parse_spec_json(base + R"json({"type": "uniform", "points_per_axis": 3}})json");
    REQUIRE(uniform.prior.has_value());
    CHECK(uniform.prior->points.size() == 9);

    SpecDocument points = parse_spec_json(
        base + R"json({"type": "points", "symmetric": false,
                   "points": [{"q": [0.7, 0.2], "weight": 1.0}]}})json");
    REQUIRE(points.prior.has_value());
    CHECK(points.prior->points.front().qualities == QualityVector{0.7, 0.2});

    CHECK_THROWS_AS(parse_spec_json(base + R"json({"type": "mystery"}})json"), ValidationError);
}

TEST_CASE("strict expression mode escalates clamps during runs") {
    std::string text = R"json({
      "schema_version": 1, "customers": 1, "products": 1,
      "qualities": [0.5], "horizon": 2,
      "strategies": {"default": {"expr": "s + 1"}}
    })json";
    SpecDocument lax = parse_spec_json(text);
    CHECK(lax.market.strategy(0, 0).probability(History::parse("S"), {}, 0) == 1.0);  // clamped
    SpecDocument strict = parse_spec_json(text, ".", std::nullopt, true);
    CHECK_THROWS_AS(strict.market.strategy(0, 0).probability(History::parse("S"), {}, 0),
                    ValidationError);
}

TEST_CASE("spec digests are deterministic and content sensitive") {
    std::string a = R"json({"schema_version": 1, "customers": 1, "products": 1,
        "qualities": [0.5], "horizon": 1,
        "strategies": {"default": {"name": "constant"}}})json";
    CHECK(parse_spec_json(a).digest == parse_spec_json(a).digest);
    std::string b = a;
    b.replace(b.find("0.5"), 3, "0.6");
    CHECK(parse_spec_json(a).digest != parse_spec_json(b).digest);
}
