#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mqlab/checks.hpp"
#include "mqlab/errors.hpp"
#include "mqlab/exact.hpp"
#include "mqlab/expr.hpp"
#include "mqlab/history.hpp"
#include "mqlab/market.hpp"
#include "mqlab/strategy.hpp"

namespace mqlab {

/// A parsed market-spec file: the market itself plus the optional prior the
/// inference experiment uses.
struct SpecDocument {
    MarketSpec market;
    std::optional<PriorGrid> prior;
    std::string digest;  ///< FNV-1a of the file bytes, embedded in artifacts
};

namespace spec_io_detail {

using nlohmann::json;

inline std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline StrategyPtr parse_strategy_object(const json& node, const std::filesystem::path& base_dir,
                                         bool strict_expressions) {
    if (!node.is_object()) throw ValidationError("strategy entries must be JSON objects");
    const int forms = node.contains("name") + node.contains("expr") + node.contains("table") +
                      node.contains("table_file");
    if (forms != 1)
        throw ValidationError("a strategy needs exactly one of: name, expr, table, table_file");
    if (node.contains("name")) {
        std::map<std::string, double> params;
        if (node.contains("params"))
            for (const auto& [key, value] : node.at("params").items())
                params[key] = value.get<double>();
        return make_strategy(node.at("name").get<std::string>(), params);
    }
    if (node.contains("expr"))
        return ExprStrategy::parse(node.at("expr").get<std::string>(), strict_expressions);
    if (node.contains("table")) {
        std::map<History, double> table;
        std::optional<double> fallback;
        for (const auto& [key, value] : node.at("table").items()) {
            if (key == "*") fallback = value.get<double>();
            else table[History::parse(key == "." ? "" : key)] = value.get<double>();
        }
        return std::make_shared<TableStrategy>(std::move(table), fallback);
    }
    std::filesystem::path path = node.at("table_file").get<std::string>();
    if (path.is_relative()) path = base_dir / path;
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open table file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return std::make_shared<TableStrategy>(TableStrategy::deserialize(buffer.str()));
}

inline PriorGrid parse_prior(const json& node) {
    const std::string type = node.at("type").get<std::string>();
    if (type == "two-point")
        return PriorGrid::symmetric_two_point(node.at("a").get<double>(), node.at("b").get<double>());
    if (type == "uniform")
        return PriorGrid::product_uniform(node.value("points_per_axis", std::size_t{11}));
    if (type == "points") {
        PriorGrid grid;
        for (const auto& p : node.at("points"))
            grid.points.push_back(
                {p.at("q").get<QualityVector>(), p.at("weight").get<double>()});
        grid.symmetric = node.value("symmetric", false);
        return grid;
    }
    throw ValidationError("unknown prior type '" + type + "'");
}

}  // namespace spec_io_detail

inline constexpr int kSpecSchemaVersion = 1;

/// Parses a market-spec JSON document. `customers_override` rescales the
/// customer count, replicating the last customer's strategies (the bundled
/// elitist scenario uses this to scan n).
inline SpecDocument parse_spec_json(const std::string& text,
                                    const std::filesystem::path& base_dir = ".",
                                    std::optional<std::size_t> customers_override = std::nullopt,
                                    bool strict_expressions = false) {
    using nlohmann::json;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& err) {
        throw ValidationError(std::string("spec is not valid JSON: ") + err.what());
    }
    try {
        if (doc.value("schema_version", 0) != kSpecSchemaVersion)
            throw ValidationError("unsupported or missing schema_version (expected " +
                                  std::to_string(kSpecSchemaVersion) + ")");
        SpecDocument out;
        MarketSpec& spec = out.market;
        spec.customers = doc.at("customers").get<std::size_t>();
        if (customers_override) spec.customers = *customers_override;
        spec.products = doc.at("products").get<std::size_t>();
        spec.qualities = doc.at("qualities").get<QualityVector>();
        if (doc.contains("initial_shares"))
            spec.initial_shares = doc.at("initial_shares").get<ShareVector>();
        else
            spec.initial_shares.assign(spec.products, 0);
        spec.horizon = doc.at("horizon").get<std::size_t>();
        spec.seed = doc.value("seed", std::uint64_t{0});
        spec.name = doc.value("name", std::string("unnamed"));
        spec.anonymous_declared = doc.value("anonymous", false);
        if (doc.contains("caps")) {
            const json& caps = doc.at("caps");
            spec.caps.history_depth = caps.value("history_depth", spec.caps.history_depth);
            spec.caps.ensemble_cells = caps.value("ensemble_cells", spec.caps.ensemble_cells);
            spec.caps.coupling_depth = caps.value("coupling_depth", spec.caps.coupling_depth);
            spec.caps.ensemble_coupling_cells =
                caps.value("ensemble_coupling_cells", spec.caps.ensemble_coupling_cells);
        }

        const json& strategies = doc.at("strategies");
        const std::size_t declared_customers = doc.at("customers").get<std::size_t>();
        StrategyPtr fallback;
        if (strategies.contains("default"))
            fallback = spec_io_detail::parse_strategy_object(strategies.at("default"), base_dir,
                                                             strict_expressions);
        // Assignments keyed by the declared customer count; an override scan
        // reuses the last declared customer's strategy for the extra ones.
        std::vector<StrategyPtr> declared(declared_customers * spec.products, fallback);
        if (strategies.contains("overrides")) {
            for (const auto& entry : strategies.at("overrides")) {
                StrategyPtr s = spec_io_detail::parse_strategy_object(entry.at("strategy"), base_dir,
                                                                      strict_expressions);
                std::vector<std::size_t> customer_range, product_range;
                if (entry.contains("customer")) {
                    auto c = entry.at("customer").get<std::size_t>();
                    if (c < 1 || c > declared_customers)
                        throw ValidationError("override customer index out of range");
                    customer_range.push_back(c - 1);
                } else {
                    for (std::size_t j = 0; j < declared_customers; ++j) customer_range.push_back(j);
                }
                if (entry.contains("product")) {
                    auto p = entry.at("product").get<std::size_t>();
                    if (p < 1 || p > spec.products)
                        throw ValidationError("override product index out of range");
                    product_range.push_back(p - 1);
                } else {
                    for (std::size_t i = 0; i < spec.products; ++i) product_range.push_back(i);
                }
                for (std::size_t i : product_range)
                    for (std::size_t j : customer_range) declared[i * declared_customers + j] = s;
            }
        }
        for (const auto& s : declared)
            if (!s) throw ValidationError("strategy grid is not fully populated (set a default)");
        spec.strategies.resize(spec.products * spec.customers);
        for (std::size_t i = 0; i < spec.products; ++i)
            for (std::size_t j = 0; j < spec.customers; ++j)
                spec.strategies[i * spec.customers + j] =
                    declared[i * declared_customers + std::min(j, declared_customers - 1)];

        spec.validate();
        if (doc.contains("prior")) {
            out.prior = spec_io_detail::parse_prior(doc.at("prior"));
            out.prior->validate(spec.products);
        }
        out.digest = spec_io_detail::fnv1a_hex(text);
        return out;
    } catch (const json::exception& err) {
        throw ValidationError(std::string("spec schema violation: ") + err.what());
    }
}

/// Loads and validates a market-spec file.
inline SpecDocument load_market_spec(const std::filesystem::path& path,
                                     std::optional<std::size_t> customers_override = std::nullopt,
                                     bool strict_expressions = false) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open spec file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_spec_json(buffer.str(), path.parent_path(), customers_override,
                           strict_expressions);
}

// ---------------------------------------------------------------------------
// Theorem-mode hypothesis verification
// ---------------------------------------------------------------------------

/// Mechanical verification of the hypotheses the theorems need, run before
/// asserting any of their conclusions.
struct HypothesisReport {
    struct Item {
        std::string strategy;
        std::string check;
        bool passed = false;
        std::string witness;
    };
    std::vector<Item> items;

    bool all_passed() const {
        for (const auto& item : items)
            if (!item.passed) return false;
        return true;
    }
};

namespace spec_io_detail {

inline std::string violation_text(const CheckReport& report) {
    if (report.passed()) return {};
    const CheckViolation& v = report.violations.front();
    std::string out = "history '" + v.h1.str() + "'";
    if (!(v.h2 == v.h1)) out += " vs '" + v.h2.str() + "'";
    out += ", shares (";
    for (std::size_t i = 0; i < v.shares1.size(); ++i)
        out += (i ? "," : "") + std::to_string(v.shares1[i]);
    out += ") -> (";
    for (std::size_t i = 0; i < v.shares2.size(); ++i)
        out += (i ? "," : "") + std::to_string(v.shares2[i]);
    out += "), product " + std::to_string(v.product + 1) + ": " +
           ConstantStrategy::format_double(v.value1) + " vs " +
           ConstantStrategy::format_double(v.value2) + " (" + v.detail + ")";
    return out;
}

}  // namespace spec_io_detail

/// Checks monotonicity for every distinct strategy, the herding discipline
/// (weak, or competitive when requested), and anonymity when the spec
/// declares it. Depth and share bounds are chosen from the spec's horizon.
inline HypothesisReport check_spec_hypotheses(const MarketSpec& spec, bool competitive,
                                              std::size_t check_depth = 4,
                                              long long share_bound = 4) {
    HypothesisReport report;
    if (competitive && spec.products > 2) {
        report.items.push_back({"(spec)", "competitive-herding-products", false,
                                "competitive weak herding is only supported for two products"});
        return report;
    }
    std::vector<ShareVector> share_set = share_grid(spec.products, std::min<long long>(share_bound, 2));
    std::set<const PartialityStrategy*> seen;
    for (const auto& s : spec.strategies) {
        if (!seen.insert(s.get()).second) continue;
        CheckReport mono = check_monotone(*s, check_depth, share_set);
        report.items.push_back({s->describe(), "monotone", mono.passed(),
                                spec_io_detail::violation_text(mono)});
        CheckReport herd =
            check_weak_herding(*s, competitive, check_depth, share_bound, spec.products);
        report.items.push_back({s->describe(), competitive ? "competitive-weak-herding" : "weak-herding",
                                herd.passed(), spec_io_detail::violation_text(herd)});
    }
    if (spec.anonymous_declared && spec.products >= 2) {
        for (std::size_t j = 0; j < spec.customers; ++j) {
            CheckReport anon = check_anonymous(spec.strategy(0, j), spec.strategy(1, j), check_depth,
                                               share_bound, spec.products);
            report.items.push_back({"customer " + std::to_string(j + 1), "anonymous", anon.passed(),
                                    spec_io_detail::violation_text(anon)});
            if (!anon.passed()) break;
        }
    }
    return report;
}

}  // namespace mqlab
