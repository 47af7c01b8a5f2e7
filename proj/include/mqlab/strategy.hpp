#pragma once

#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mqlab/errors.hpp"
#include "mqlab/history.hpp"

namespace mqlab {

/// A customer's behavioral rule: the probability of consuming a product given
/// her history with it and the current market-share vector.
///
/// Implementations are immutable after construction and probability() is a
/// pure function, so strategies may be shared freely across threads.
class PartialityStrategy {
public:
    virtual ~PartialityStrategy() = default;

    /// Consumption probability in [0,1]. `product` is the 0-based index of
    /// the product being considered; history-only strategies ignore both
    /// `shares` and `product`.
    virtual double probability(const History& h, const ShareVector& shares,
                               std::size_t product) const = 0;

    /// True when the rule never reads the share vector.
    virtual bool history_only() const = 0;

    virtual std::string describe() const = 0;
};

using StrategyPtr = std::shared_ptr<const PartialityStrategy>;

/// Convenience entry point matching the per-round evaluation the engines use.
inline double evaluate(const PartialityStrategy& s, const History& h,
                       const ShareVector& shares, std::size_t product) {
    return s.probability(h, shares, product);
}

// ---------------------------------------------------------------------------
// Built-in catalog
// ---------------------------------------------------------------------------

/// Always consumes with the same probability.
class ConstantStrategy final : public PartialityStrategy {
public:
    explicit ConstantStrategy(double p) : p_(p) {
        if (p < 0.0 || p > 1.0) throw ValidationError("constant strategy probability outside [0,1]");
    }
    double probability(const History&, const ShareVector&, std::size_t) const override { return p_; }
    bool history_only() const override { return true; }
    std::string describe() const override { return "constant(p=" + format_double(p_) + ")"; }

    static std::string format_double(double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%g", v);
        return buf;
    }

private:
    double p_;
};

/// Posterior mean of quality under a uniform prior: (S+1)/(con+2).
class BetaPosteriorStrategy final : public PartialityStrategy {
public:
    double probability(const History& h, const ShareVector&, std::size_t) const override {
        return static_cast<double>(h.count(Event::S) + 1) /
               static_cast<double>(consumption(h) + 2);
    }
    bool history_only() const override { return true; }
    std::string describe() const override { return "beta-posterior"; }
};

/// Consumes iff never consumed before or the most recent consumption was
/// satisfying (the first customer of the elitist market scenario).
class LastExperienceStrategy final : public PartialityStrategy {
public:
    double probability(const History& h, const ShareVector&, std::size_t) const override {
        for (std::size_t r = h.depth(); r >= 1; --r) {
            Event e = h.at_round(r);
            if (e != Event::N) return e == Event::S ? 1.0 : 0.0;
        }
        return 1.0;
    }
    bool history_only() const override { return true; }
    std::string describe() const override { return "last-experience"; }
};

/// Average satisfaction over the most recent `window` consumption events;
/// 1/2 when there is nothing to average.
class WindowAverageStrategy final : public PartialityStrategy {
public:
    explicit WindowAverageStrategy(std::size_t window) : window_(window) {
        if (window_ == 0) throw ValidationError("window-average window must be positive");
    }
    double probability(const History& h, const ShareVector&, std::size_t) const override {
        std::size_t seen = 0, satisfied = 0;
        for (std::size_t r = h.depth(); r >= 1 && seen < window_; --r) {
            Event e = h.at_round(r);
            if (e == Event::N) continue;
            ++seen;
            if (e == Event::S) ++satisfied;
        }
        if (seen == 0) return 0.5;
        return static_cast<double>(satisfied) / static_cast<double>(seen);
    }
    bool history_only() const override { return true; }
    std::string describe() const override { return "window-average(window=" + std::to_string(window_) + ")"; }

private:
    std::size_t window_;
};

/// Avoids the strict market leader, consumes unconditionally otherwise.
/// Ties mean there is no leader.
class ElitistStrategy final : public PartialityStrategy {
public:
    double probability(const History&, const ShareVector& shares, std::size_t product) const override {
        if (shares.empty()) return 1.0;
        long long own = shares.at(product);
        for (std::size_t k = 0; k < shares.size(); ++k)
            if (k != product && shares[k] >= own) return 1.0;
        return shares.size() > 1 ? 0.0 : 1.0;
    }
    bool history_only() const override { return false; }
    std::string describe() const override { return "elitist"; }
};

/// Consumes iff the product's share is maximal (ties count as leading).
class LeaderFollowerStrategy final : public PartialityStrategy {
public:
    double probability(const History&, const ShareVector& shares, std::size_t product) const override {
        long long own = shares.at(product);
        for (long long s : shares)
            if (s > own) return 0.0;
        return 1.0;
    }
    bool history_only() const override { return false; }
    std::string describe() const override { return "leader-follower"; }
};

/// Mixture of a history-driven base rate and own-share herding:
///   sigma = (1-w) * (S+1)/(con+2) + w * own / (own + pivot).
/// Monotone in history, non-decreasing in own share, blind to other shares.
class HerdingMixStrategy final : public PartialityStrategy {
public:
    HerdingMixStrategy(double weight, double pivot) : weight_(weight), pivot_(pivot) {
        if (weight < 0.0 || weight > 1.0) throw ValidationError("herding-mix weight outside [0,1]");
        if (pivot <= 0.0) throw ValidationError("herding-mix pivot must be positive");
    }
    double probability(const History& h, const ShareVector& shares, std::size_t product) const override {
        double base = static_cast<double>(h.count(Event::S) + 1) /
                      static_cast<double>(consumption(h) + 2);
        double own = static_cast<double>(shares.at(product));
        return (1.0 - weight_) * base + weight_ * own / (own + pivot_);
    }
    bool history_only() const override { return false; }
    std::string describe() const override {
        return "herding-mix(weight=" + ConstantStrategy::format_double(weight_) +
               ",pivot=" + ConstantStrategy::format_double(pivot_) + ")";
    }

private:
    double weight_;
    double pivot_;
};

/// Lookup table keyed by exact history, with an optional default entry.
class TableStrategy final : public PartialityStrategy {
public:
    TableStrategy(std::map<History, double> table, std::optional<double> fallback = std::nullopt)
        : table_(std::move(table)), fallback_(fallback) {
        for (const auto& [h, p] : table_)
            if (p < 0.0 || p > 1.0)
                throw ValidationError("table probability outside [0,1] for history " + h.str());
        if (fallback_ && (*fallback_ < 0.0 || *fallback_ > 1.0))
            throw ValidationError("table default probability outside [0,1]");
    }

    double probability(const History& h, const ShareVector&, std::size_t) const override {
        auto it = table_.find(h);
        if (it != table_.end()) return it->second;
        if (fallback_) return *fallback_;
        throw ValidationError("table strategy has no entry for history '" + h.str() + "' and no default");
    }
    bool history_only() const override { return true; }
    std::string describe() const override { return "table(" + std::to_string(table_.size()) + " entries)"; }

    const std::map<History, double>& entries() const { return table_; }
    std::optional<double> fallback() const { return fallback_; }

    /// Two-column text format: one "<history> <probability>" pair per line,
    /// "." for the empty history, "*" for the default entry. Probabilities
    /// are printed with enough digits to round-trip bit-identically.
    std::string serialize() const {
        std::string out;
        char buf[64];
        if (fallback_) {
            std::snprintf(buf, sizeof buf, "* %.17g\n", *fallback_);
            out += buf;
        }
        for (const auto& [h, p] : table_) {
            std::snprintf(buf, sizeof buf, "%s %.17g\n", h.empty() ? "." : h.str().c_str(), p);
            out += buf;
        }
        return out;
    }

    static TableStrategy deserialize(const std::string& text) {
        std::map<History, double> table;
        std::optional<double> fallback;
        std::size_t pos = 0, line_no = 0;
        while (pos < text.size()) {
            std::size_t eol = text.find('\n', pos);
            if (eol == std::string::npos) eol = text.size();
            std::string line = text.substr(pos, eol - pos);
            pos = eol + 1;
            ++line_no;
            if (line.empty() || line[0] == '#') continue;
            std::size_t sp = line.find(' ');
            if (sp == std::string::npos)
                throw ValidationError("table line " + std::to_string(line_no) + ": expected two columns");
            std::string key = line.substr(0, sp);
            double p = 0;
            try {
                p = std::stod(line.substr(sp + 1));
            } catch (const std::exception&) {
                throw ValidationError("table line " + std::to_string(line_no) + ": bad probability");
            }
            if (key == "*")
                fallback = p;
            else
                table[key == "." ? History() : History::parse(key)] = p;
        }
        return TableStrategy(std::move(table), fallback);
    }

private:
    std::map<History, double> table_;
    std::optional<double> fallback_;
};

// ---------------------------------------------------------------------------
// Catalog access by name
// ---------------------------------------------------------------------------

struct CatalogEntry {
    std::string name;
    bool monotone;       ///< passes the history-monotonicity check
    bool history_only;
};

/// Built-in strategies addressable from spec files.
inline const std::vector<CatalogEntry>& strategy_catalog() {
    static const std::vector<CatalogEntry> entries = {
        {"constant", true, true},
        {"beta-posterior", true, true},
        {"last-experience", true, true},
        {"window-average", true, true},
        {"elitist", true, false},
        {"leader-follower", true, false},
        {"herding-mix", true, false},
    };
    return entries;
}

/// Instantiates a catalog strategy. Unknown names or bad parameters raise
/// ValidationError.
inline StrategyPtr make_strategy(const std::string& name,
                                 const std::map<std::string, double>& params = {}) {
    auto param = [&](const char* key, double fallback) {
        auto it = params.find(key);
        return it == params.end() ? fallback : it->second;
    };
    if (name == "constant") return std::make_shared<ConstantStrategy>(param("p", 0.5));
    if (name == "beta-posterior") return std::make_shared<BetaPosteriorStrategy>();
    if (name == "last-experience") return std::make_shared<LastExperienceStrategy>();
    if (name == "window-average")
        return std::make_shared<WindowAverageStrategy>(static_cast<std::size_t>(param("window", 3)));
    if (name == "elitist") return std::make_shared<ElitistStrategy>();
    if (name == "leader-follower") return std::make_shared<LeaderFollowerStrategy>();
    if (name == "herding-mix")
        return std::make_shared<HerdingMixStrategy>(param("weight", 0.25), param("pivot", 3.0));
    throw ValidationError("unknown strategy name '" + name + "'");
}

}  // namespace mqlab
