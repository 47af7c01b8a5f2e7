#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include "mqlab/errors.hpp"
#include "mqlab/history.hpp"
#include "mqlab/market.hpp"
#include "mqlab/strategy.hpp"

namespace mqlab {

/// Compensated (Kahan) accumulator for long probability sums.
class KahanSum {
public:
    void add(double x) {
        double y = x - compensation_;
        double t = total_ + y;
        compensation_ = (t - total_) - y;
        total_ = t;
    }
    double value() const { return total_; }

private:
    double total_ = 0.0;
    double compensation_ = 0.0;
};

namespace detail {

inline void require_history_only(const PartialityStrategy& s, const char* op) {
    if (!s.history_only())
        throw ValidationError(std::string(op) +
                              " requires a history-only strategy; use the ensemble engine "
                              "for share-aware rules");
}

inline const ShareVector& no_shares() {
    static const ShareVector empty;
    return empty;
}

}  // namespace detail

/// The strategy-dependent factor of a history's probability: the product of
/// sigma(prefix) over consumption rounds and 1-sigma(prefix) over N-rounds.
inline double ex_ante(const PartialityStrategy& s, const History& h) {
    detail::require_history_only(s, "ex_ante");
    double c = 1.0;
    for (std::size_t k = 1; k <= h.depth(); ++k) {
        double sigma = s.probability(h.prefix(k - 1), detail::no_shares(), 0);
        c *= (h.at_round(k) != Event::N) ? sigma : 1.0 - sigma;
        if (c == 0.0) break;
    }
    return c;
}

/// Closed-form history probability P[Z;q] = c(Z) q^S (1-q)^F.
inline double history_prob(const PartialityStrategy& s, const History& h, double q) {
    if (!(q >= 0.0 && q <= 1.0)) throw ValidationError("quality outside [0,1]");
    double c = ex_ante(s, h);
    return c * std::pow(q, static_cast<double>(h.count(Event::S))) *
           std::pow(1.0 - q, static_cast<double>(h.count(Event::F)));
}

/// The same probability computed as the product of per-round transition
/// probabilities of the history chain. Kept as an independent route so the
/// two can be cross-checked.
inline double markov_path_prob(const PartialityStrategy& s, const History& h, double q) {
    detail::require_history_only(s, "markov_path_prob");
    double p = 1.0;
    for (std::size_t k = 1; k <= h.depth(); ++k) {
        double sigma = s.probability(h.prefix(k - 1), detail::no_shares(), 0);
        switch (h.at_round(k)) {
            case Event::S: p *= sigma * q; break;
            case Event::F: p *= sigma * (1.0 - q); break;
            case Event::N: p *= 1.0 - sigma; break;
        }
        if (p == 0.0) break;
    }
    return p;
}

/// Depth-first sweep of every t-deep history reachable with positive
/// probability; calls leaf(events, probability) at depth t.
template <typename LeafFn>
void for_each_history(const PartialityStrategy& s, std::size_t t, double q, LeafFn&& leaf,
                      std::size_t cap = kMaxEnumerationDepth) {
    detail::require_history_only(s, "history enumeration");
    if (t > cap)
        throw CapExceededError("history enumeration depth " + std::to_string(t) +
                               " exceeds cap " + std::to_string(cap));
    std::vector<Event> events;
    events.reserve(t);
    auto recurse = [&](auto&& self, double prob) -> void {
        if (events.size() == t) {
            leaf(std::as_const(events), prob);
            return;
        }
        double sigma = s.probability(History(events), detail::no_shares(), 0);
        const double branch[3] = {sigma * q, sigma * (1.0 - q), 1.0 - sigma};
        const Event letters[3] = {Event::S, Event::F, Event::N};
        for (int b = 0; b < 3; ++b) {
            if (branch[b] == 0.0) continue;
            events.push_back(letters[b]);
            self(self, prob * branch[b]);
            events.pop_back();
        }
    };
    recurse(recurse, 1.0);
}

/// Exact distribution of con(Z) over t-deep histories: entry x is
/// P[con(Z) = x].
inline std::vector<double> consumption_distribution(const PartialityStrategy& s, std::size_t t,
                                                    double q,
                                                    std::size_t cap = kMaxEnumerationDepth) {
    std::vector<KahanSum> bins(t + 1);
    for_each_history(
        s, t, q,
        [&](const std::vector<Event>& events, double prob) {
            std::size_t c = 0;
            for (Event e : events)
                if (e != Event::N) ++c;
            bins[c].add(prob);
        },
        cap);
    std::vector<double> out(t + 1);
    for (std::size_t i = 0; i <= t; ++i) out[i] = bins[i].value();
    return out;
}

/// P[con(Z) >= x] over t-deep histories.
inline double tail_prob(const PartialityStrategy& s, std::size_t t, std::size_t x, double q,
                        std::size_t cap = kMaxEnumerationDepth) {
    if (x == 0) return 1.0;
    if (x > t) return 0.0;
    std::vector<double> dist = consumption_distribution(s, t, q, cap);
    KahanSum sum;
    for (std::size_t c = x; c <= t; ++c) sum.add(dist[c]);
    return sum.value();
}

/// E[con(Z)] over t-deep histories, as the sum of tail probabilities.
inline double expected_consumption(const PartialityStrategy& s, std::size_t t, double q,
                                   std::size_t cap = kMaxEnumerationDepth) {
    std::vector<double> dist = consumption_distribution(s, t, q, cap);
    KahanSum sum;
    for (std::size_t x = 1; x <= t; ++x) {
        KahanSum tail;
        for (std::size_t c = x; c <= t; ++c) tail.add(dist[c]);
        sum.add(tail.value());
    }
    return sum.value();
}

// ---------------------------------------------------------------------------
// Ensemble engine
// ---------------------------------------------------------------------------

namespace detail {

inline void check_ensemble_cap(const MarketSpec& spec, std::size_t t) {
    std::size_t cells = spec.customers * spec.products * t;
    if (cells > spec.caps.ensemble_cells)
        throw CapExceededError("ensemble enumeration needs n*m*t = " + std::to_string(cells) +
                               " <= " + std::to_string(spec.caps.ensemble_cells));
}

}  // namespace detail

/// Probability of one complete ensemble under the market chain: customers
/// decide each round from the previous round's shares, then qualities decide
/// satisfaction.
inline double ensemble_prob(const MarketSpec& spec, const HistoryEnsemble& e) {
    spec.validate();
    if (e.products() != spec.products || e.customers() != spec.customers)
        throw ValidationError("ensemble dimensions do not match the market spec");
    const std::size_t t = e.depth();
    double p = 1.0;
    ShareVector shares = spec.initial_shares;
    for (std::size_t k = 1; k <= t && p != 0.0; ++k) {
        for (std::size_t i = 0; i < spec.products; ++i) {
            for (std::size_t j = 0; j < spec.customers; ++j) {
                const History& z = e.entry(i, j);
                double sigma = spec.strategy(i, j).probability(z.prefix(k - 1), shares, i);
                switch (z.at_round(k)) {
                    case Event::S: p *= sigma * spec.qualities[i]; break;
                    case Event::F: p *= sigma * (1.0 - spec.qualities[i]); break;
                    case Event::N: p *= 1.0 - sigma; break;
                }
            }
        }
        shares = market_share(e, spec.initial_shares, k);
    }
    return p;
}

namespace detail {

/// Depth-first sweep of every positive-probability t-deep ensemble.
/// Decisions within a round are simultaneous: each cell's sigma is evaluated
/// against the shares standing when the round began (the recursion only
/// advances `shares` once a full round of letters is placed).
template <bool WithEnsemble, typename LeafFn>
void walk_ensembles(const MarketSpec& spec, std::size_t t, LeafFn&& leaf) {
    spec.validate();
    check_ensemble_cap(spec, t);
    const std::size_t m = spec.products, n = spec.customers, cells = m * n;

    std::vector<std::vector<Event>> grid(cells);
    for (auto& g : grid) g.reserve(t);
    ShareVector shares = spec.initial_shares;

    std::function<void(std::size_t, std::size_t, double)> do_cell;
    do_cell = [&](std::size_t k, std::size_t cell, double prob) {
        if (cell == cells) {
            ShareVector saved = shares;
            for (std::size_t c = 0; c < cells; ++c)
                if (grid[c].back() != Event::N) ++shares[c / n];
            if (k == t) {
                if constexpr (WithEnsemble) {
                    std::vector<History> entries;
                    entries.reserve(cells);
                    for (const auto& g : grid) entries.emplace_back(g);
                    leaf(HistoryEnsemble(m, n, std::move(entries)), prob, shares);
                } else {
                    leaf(prob, shares);
                }
            } else {
                do_cell(k + 1, 0, prob);
            }
            shares = std::move(saved);
            return;
        }
        const std::size_t i = cell / n, j = cell % n;
        double sigma = spec.strategy(i, j).probability(History(grid[cell]), shares, i);
        const double q = spec.qualities[i];
        const double branch[3] = {sigma * q, sigma * (1.0 - q), 1.0 - sigma};
        const Event letters[3] = {Event::S, Event::F, Event::N};
        for (int b = 0; b < 3; ++b) {
            if (branch[b] == 0.0) continue;
            grid[cell].push_back(letters[b]);
            do_cell(k, cell + 1, prob * branch[b]);
            grid[cell].pop_back();
        }
    };

    if (t == 0) {
        if constexpr (WithEnsemble)
            leaf(HistoryEnsemble(m, n, 0), 1.0, shares);
        else
            leaf(1.0, shares);
        return;
    }
    do_cell(1, 0, 1.0);
}

}  // namespace detail

/// Visits every positive-probability t-deep ensemble:
/// leaf(ensemble, probability, terminal_shares).
template <typename LeafFn>
void for_each_ensemble(const MarketSpec& spec, std::size_t t, LeafFn&& leaf) {
    detail::walk_ensembles<true>(spec, t, std::forward<LeafFn>(leaf));
}

/// Same sweep without materializing the ensembles:
/// leaf(probability, terminal_shares).
template <typename LeafFn>
void for_each_terminal(const MarketSpec& spec, std::size_t t, LeafFn&& leaf) {
    detail::walk_ensembles<false>(spec, t, std::forward<LeafFn>(leaf));
}

/// Exact probability table over t-deep ensembles.
struct EnsembleDistribution {
    std::vector<std::pair<HistoryEnsemble, double>> support;
    std::size_t depth = 0;

    double total_mass() const {
        KahanSum sum;
        for (const auto& [e, p] : support) sum.add(p);
        return sum.value();
    }
};

inline EnsembleDistribution enumerate_ensembles(const MarketSpec& spec, std::size_t t) {
    EnsembleDistribution dist;
    dist.depth = t;
    for_each_ensemble(spec, t, [&](const HistoryEnsemble& e, double p, const ShareVector&) {
        dist.support.emplace_back(e, p);
    });
    return dist;
}

/// Strict-leadership and tie probabilities of products 1 and 2 after round t.
struct LeadProbabilities {
    double lead1 = 0.0;
    double lead2 = 0.0;
    double tie = 0.0;
};

inline LeadProbabilities lead_probabilities(const MarketSpec& spec, std::size_t t) {
    if (spec.products < 2) throw ValidationError("leadership needs at least two products");
    KahanSum lead1, lead2, tie;
    for_each_terminal(spec, t, [&](double p, const ShareVector& shares) {
        if (shares[0] > shares[1]) lead1.add(p);
        else if (shares[1] > shares[0]) lead2.add(p);
        else tie.add(p);
    });
    return {lead1.value(), lead2.value(), tie.value()};
}

/// P[product 1 strictly leads product 2 after round t].
inline double leadership_prob(const MarketSpec& spec, std::size_t t) {
    return lead_probabilities(spec, t).lead1;
}

/// Distribution of a product's aggregate consumption Sum_j con(Z_ij) after
/// round t; entry x is the probability of the total being exactly x.
inline std::vector<double> aggregate_consumption_distribution(const MarketSpec& spec, std::size_t t,
                                                              std::size_t product) {
    if (product >= spec.products) throw ValidationError("product index out of range");
    std::vector<KahanSum> bins(spec.customers * t + 1);
    for_each_terminal(spec, t, [&](double p, const ShareVector& shares) {
        auto total = static_cast<std::size_t>(shares[product] - spec.initial_shares[product]);
        bins[total].add(p);
    });
    std::vector<double> out(bins.size());
    for (std::size_t i = 0; i < bins.size(); ++i) out[i] = bins[i].value();
    return out;
}

/// P[Sum_j con(Z_ij) >= x] for the given product.
inline double aggregate_tail_prob(const MarketSpec& spec, std::size_t t, std::size_t product,
                                  std::size_t x) {
    std::vector<double> dist = aggregate_consumption_distribution(spec, t, product);
    KahanSum sum;
    for (std::size_t c = x; c < dist.size(); ++c) sum.add(dist[c]);
    return x == 0 ? 1.0 : sum.value();
}

// ---------------------------------------------------------------------------
// Posterior inference over discrete quality priors
// ---------------------------------------------------------------------------

struct PriorPoint {
    QualityVector qualities;
    double weight = 0.0;
};

/// Discrete prior over quality vectors.
struct PriorGrid {
    std::vector<PriorPoint> points;
    bool symmetric = false;

    /// {(a,b): 1/2, (b,a): 1/2}
    static PriorGrid symmetric_two_point(double a, double b) {
        PriorGrid g;
        g.points = {{{a, b}, 0.5}, {{b, a}, 0.5}};
        g.symmetric = true;
        return g;
    }

    /// Uniform product grid over [0,1]^2 with the given points per axis.
    static PriorGrid product_uniform(std::size_t per_axis) {
        if (per_axis < 2) throw ValidationError("uniform prior grid needs at least two points per axis");
        PriorGrid g;
        double w = 1.0 / static_cast<double>(per_axis * per_axis);
        for (std::size_t a = 0; a < per_axis; ++a)
            for (std::size_t b = 0; b < per_axis; ++b)
                g.points.push_back({{static_cast<double>(a) / (per_axis - 1),
                                     static_cast<double>(b) / (per_axis - 1)},
                                    w});
        g.symmetric = true;
        return g;
    }

    void validate(std::size_t products) const {
        if (points.empty()) throw ValidationError("prior grid is empty");
        KahanSum sum;
        for (const auto& p : points) {
            if (p.qualities.size() != products)
                throw ValidationError("prior point dimension does not match product count");
            if (p.weight < 0.0) throw ValidationError("prior weights must be non-negative");
            sum.add(p.weight);
        }
        if (std::fabs(sum.value() - 1.0) > 1e-9)
            throw ValidationError("prior weights must sum to 1");
    }

    /// True when for every point (q1,q2,...) the swapped point (q2,q1,...)
    /// carries the same weight.
    bool is_symmetric_in_first_two(double tol = 1e-12) const {
        for (const auto& p : points) {
            if (p.qualities.size() < 2) return false;
            QualityVector swapped = p.qualities;
            std::swap(swapped[0], swapped[1]);
            double w = -1.0;
            for (const auto& other : points)
                if (other.qualities == swapped) {
                    w = other.weight;
                    break;
                }
            if (w < 0.0 || std::fabs(w - p.weight) > tol) return false;
        }
        return true;
    }
};

struct PosteriorOdds {
    double p_higher_given_lead = 0.0;  ///< P[q1 >= q2 | shares1 > shares2]
    double p_lower_given_lead = 0.0;   ///< P[q2 >= q1 | shares1 > shares2]
};

/// Bayesian posterior over the prior grid, conditioning on strict leadership
/// of product 1 after round t. Both components condition on the same event;
/// ties q1 = q2 contribute to both.
inline PosteriorOdds posterior_odds(const MarketSpec& spec, const PriorGrid& prior, std::size_t t) {
    prior.validate(spec.products);
    KahanSum higher, lower, total;
    for (const auto& point : prior.points) {
        if (point.weight == 0.0) continue;
        double lead = leadership_prob(spec.with_qualities(point.qualities), t);
        double mass = point.weight * lead;
        total.add(mass);
        if (point.qualities[0] >= point.qualities[1]) higher.add(mass);
        if (point.qualities[1] >= point.qualities[0]) lower.add(mass);
    }
    if (total.value() <= 0.0)
        throw UndefinedPosteriorError("conditioning event (product 1 leads) has probability zero");
    return {higher.value() / total.value(), lower.value() / total.value()};
}

// ---------------------------------------------------------------------------
// Monotonicity scans
// ---------------------------------------------------------------------------

struct ScanPoint {
    double grid_value = 0.0;
    double quantity = 0.0;
    double adjacent_difference = 0.0;  ///< quantity - previous quantity; 0 for first point
    bool pass = true;                  ///< adjacent difference >= -tolerance
};

struct ScanReport {
    std::vector<ScanPoint> points;
    double tolerance = 1e-12;

    bool passed() const {
        for (const auto& p : points)
            if (!p.pass) return false;
        return true;
    }
};

/// Evaluates `quantity` over an ascending grid and reports every adjacent
/// decrease beyond the tolerance.
template <typename QuantityFn>
ScanReport monotonicity_scan(const std::vector<double>& grid, double tolerance, QuantityFn&& quantity) {
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (grid[i] < grid[i - 1]) throw ValidationError("scan grid must be sorted ascending");
    ScanReport report;
    report.tolerance = tolerance;
    double prev = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double value = quantity(grid[i]);
        ScanPoint point;
        point.grid_value = grid[i];
        point.quantity = value;
        point.adjacent_difference = i == 0 ? 0.0 : value - prev;
        point.pass = i == 0 || point.adjacent_difference >= -tolerance;
        report.points.push_back(point);
        prev = value;
    }
    return report;
}

inline std::vector<double> uniform_grid(double lo, double hi, std::size_t count) {
    if (count < 2) throw ValidationError("grid needs at least two points");
    std::vector<double> grid(count);
    for (std::size_t i = 0; i < count; ++i)
        grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    return grid;
}

}  // namespace mqlab
