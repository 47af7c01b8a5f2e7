#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mqlab/errors.hpp"
#include "mqlab/history.hpp"
#include "mqlab/strategy.hpp"

namespace mqlab {

/// Probability of a satisfying experience, one entry per product.
using QualityVector = std::vector<double>;

/// Enumeration budget knobs. The defaults keep exact runs interactive.
struct Caps {
    std::size_t history_depth = kMaxEnumerationDepth;  ///< single-history t
    std::size_t ensemble_cells = 12;                   ///< n*m*t for full ensemble enumeration
    std::size_t coupling_depth = 5;                    ///< single-history coupling t
    std::size_t ensemble_coupling_cells = 8;           ///< n*m*t for ensemble couplings
};

/// A fully specified market: dimensions, qualities, initial shares, horizon,
/// and one strategy per (product, customer) cell.
struct MarketSpec {
    std::size_t customers = 1;
    std::size_t products = 1;
    QualityVector qualities;        ///< length = products
    ShareVector initial_shares;     ///< length = products
    std::size_t horizon = 1;
    std::vector<StrategyPtr> strategies;  ///< product-major: [product * customers + customer]
    std::uint64_t seed = 0;
    Caps caps;
    std::string name = "unnamed";
    bool anonymous_declared = false;  ///< products 1 and 2 claimed interchangeable

    const PartialityStrategy& strategy(std::size_t product, std::size_t customer) const {
        return *strategies.at(product * customers + customer);
    }

    bool all_history_only() const {
        for (const auto& s : strategies)
            if (!s->history_only()) return false;
        return true;
    }

    void validate() const {
        if (customers == 0) throw ValidationError("spec needs at least one customer");
        if (products == 0) throw ValidationError("spec needs at least one product");
        if (qualities.size() != products)
            throw ValidationError("quality vector length does not match product count");
        for (double q : qualities)
            if (!(q >= 0.0 && q <= 1.0)) throw ValidationError("quality outside [0,1]");
        if (initial_shares.size() != products)
            throw ValidationError("initial share vector length does not match product count");
        for (long long a : initial_shares)
            if (a < 0) throw ValidationError("initial shares must be non-negative");
        if (strategies.size() != customers * products)
            throw ValidationError("strategy grid is not fully populated");
        for (const auto& s : strategies)
            if (!s) throw ValidationError("strategy grid has an empty cell");
    }

    /// Same market with a different quality vector.
    MarketSpec with_qualities(QualityVector q) const {
        MarketSpec copy = *this;
        copy.qualities = std::move(q);
        return copy;
    }
};

/// Builds a uniform market: every cell uses the same strategy.
inline MarketSpec uniform_market(std::size_t customers, std::size_t products,
                                 QualityVector qualities, StrategyPtr strategy,
                                 std::size_t horizon, ShareVector initial_shares = {}) {
    MarketSpec spec;
    spec.customers = customers;
    spec.products = products;
    spec.qualities = std::move(qualities);
    spec.initial_shares = initial_shares.empty() ? ShareVector(products, 0) : std::move(initial_shares);
    spec.horizon = horizon;
    spec.strategies.assign(customers * products, std::move(strategy));
    spec.validate();
    return spec;
}

/// The two-product elitist market: customer 1 follows her last experience and
/// ignores shares; all other customers avoid the strict market leader.
inline MarketSpec elitist_example_market(std::size_t customers, double q1, double q2,
                                         std::size_t horizon = 3) {
    if (customers < 2) throw ValidationError("the elitist market needs at least two customers");
    MarketSpec spec;
    spec.customers = customers;
    spec.products = 2;
    spec.qualities = {q1, q2};
    spec.initial_shares = {0, 0};
    spec.horizon = horizon;
    spec.name = "elitist-example";
    StrategyPtr first = make_strategy("last-experience");
    StrategyPtr rest = make_strategy("elitist");
    spec.strategies.resize(2 * customers);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < customers; ++j)
            spec.strategies[i * customers + j] = (j == 0) ? first : rest;
    spec.validate();
    return spec;
}

}  // namespace mqlab
