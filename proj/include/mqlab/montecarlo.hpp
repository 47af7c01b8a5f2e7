#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "mqlab/errors.hpp"
#include "mqlab/exact.hpp"
#include "mqlab/history.hpp"
#include "mqlab/market.hpp"

namespace mqlab {

// ---------------------------------------------------------------------------
// Counter-based random streams
// ---------------------------------------------------------------------------

/// SplitMix64 finalizer. Statelessly hashing (seed, replication, counter)
/// gives every replication its own reproducible stream, independent of how
/// replications are scheduled.
inline std::uint64_t mix_bits(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Uniform draw in [0,1) addressed by (seed, replication, counter).
inline double uniform_draw(std::uint64_t seed, std::uint64_t replication, std::uint64_t counter) {
    std::uint64_t key = mix_bits(seed ^ mix_bits(replication));
    std::uint64_t bits = mix_bits(key ^ (counter * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL));
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// ---------------------------------------------------------------------------
// Forward simulation
// ---------------------------------------------------------------------------

/// Results of R seeded replications of the market chain.
struct SimulationRun {
    std::size_t customers = 0, products = 0;
    ShareVector initial_shares;
    std::size_t horizon = 0;
    std::uint64_t seed = 0;
    std::size_t replications = 0;
    std::vector<ShareVector> terminal_shares;  ///< one per replication
    std::vector<HistoryEnsemble> traces;       ///< populated only when traced
    bool traced = false;
};

/// Runs R replications of the market chain. Every customer decides
/// simultaneously from the previous round's shares; each (round, product,
/// customer) cell consumes one decision draw and one satisfaction draw in
/// fixed (k, i, j) order, whether or not the product is consumed, so
/// replications are bit-reproducible from (seed, replication) alone.
inline SimulationRun simulate_market(const MarketSpec& spec, std::size_t t, std::uint64_t seed,
                                     std::size_t replications, bool keep_traces = false) {
    spec.validate();
    if (replications == 0) throw ValidationError("simulation needs at least one replication");
    const std::size_t m = spec.products, n = spec.customers;

    SimulationRun run;
    run.customers = n;
    run.products = m;
    run.initial_shares = spec.initial_shares;
    run.horizon = t;
    run.seed = seed;
    run.replications = replications;
    run.terminal_shares.reserve(replications);
    run.traced = keep_traces;

    std::vector<std::vector<Event>> grid(m * n);
    for (std::size_t r = 0; r < replications; ++r) {
        for (auto& g : grid) {
            g.clear();
            g.reserve(t);
        }
        ShareVector shares = spec.initial_shares;
        std::uint64_t counter = 0;
        for (std::size_t k = 1; k <= t; ++k) {
            ShareVector next = shares;
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    double sigma = spec.strategy(i, j).probability(History(grid[i * n + j]), shares, i);
                    double decision = uniform_draw(seed, r, counter++);
                    double satisfaction = uniform_draw(seed, r, counter++);
                    Event e;
                    if (decision < sigma) {
                        e = satisfaction < spec.qualities[i] ? Event::S : Event::F;
                        ++next[i];
                    } else {
                        e = Event::N;
                    }
                    grid[i * n + j].push_back(e);
                }
            }
            shares = std::move(next);
        }
        run.terminal_shares.push_back(shares);
        if (keep_traces) {
            std::vector<History> entries;
            entries.reserve(m * n);
            for (const auto& g : grid) entries.emplace_back(g);
            run.traces.emplace_back(m, n, std::move(entries));
        }
    }
    return run;
}

// ---------------------------------------------------------------------------
// Estimators
// ---------------------------------------------------------------------------

/// Sample mean with its standard error and 99% half-width. `pooled` is false
/// when a variance could not be formed (fewer than two replications).
struct Estimate {
    double mean = 0.0;
    double std_error = 0.0;
    double half_width_99 = 0.0;
    std::size_t replications = 0;
    bool pooled = true;
};

enum class MarketEvent { lead1, lead2, tie, tail };

inline std::string event_name(MarketEvent e, std::size_t x = 0) {
    switch (e) {
        case MarketEvent::lead1: return "lead1";
        case MarketEvent::lead2: return "lead2";
        case MarketEvent::tie: return "tie";
        default: return "tail(" + std::to_string(x) + ")";
    }
}

/// Indicator estimate of a terminal-share event. tail(x) is "product 1's
/// aggregate consumption reached x".
inline Estimate estimate_event(const SimulationRun& run, MarketEvent event, std::size_t x = 0) {
    if (run.replications == 0) throw ValidationError("empty simulation run");
    if ((event == MarketEvent::lead1 || event == MarketEvent::lead2 || event == MarketEvent::tie) &&
        run.products < 2)
        throw ValidationError("lead/tie events need at least two products");
    std::size_t hits = 0;
    for (const ShareVector& s : run.terminal_shares) {
        bool hit = false;
        switch (event) {
            case MarketEvent::lead1: hit = s[0] > s[1]; break;
            case MarketEvent::lead2: hit = s[1] > s[0]; break;
            case MarketEvent::tie: hit = s[0] == s[1]; break;
            case MarketEvent::tail:
                hit = s[0] - run.initial_shares[0] >= static_cast<long long>(x);
                break;
        }
        if (hit) ++hits;
    }
    Estimate est;
    est.replications = run.replications;
    const double r = static_cast<double>(run.replications);
    est.mean = static_cast<double>(hits) / r;
    if (run.replications >= 2) {
        // replication-level indicator variance with the n-1 correction
        double sample_var = est.mean * (1.0 - est.mean) * r / (r - 1.0);
        est.std_error = std::sqrt(sample_var / r);
    } else {
        est.pooled = false;
        est.std_error = 0.0;
    }
    est.half_width_99 = 2.576 * est.std_error;
    return est;
}

// ---------------------------------------------------------------------------
// Agreement with the exact engine
// ---------------------------------------------------------------------------

struct AgreementLine {
    std::string event;
    Estimate estimate;
    double exact = 0.0;
    double deviation_sigmas = 0.0;
    bool flagged = false;
};

struct AgreementReport {
    std::vector<AgreementLine> lines;
    bool skipped = false;
    std::string skip_reason;

    bool any_flagged() const {
        for (const auto& l : lines)
            if (l.flagged) return true;
        return false;
    }
};

/// Scores one estimate against its exact value; beyond `sigmas` standard
/// errors is flagged. Estimates without a pooled variance are flagged only on
/// exact mismatch.
inline AgreementLine compare_estimate(std::string event, const Estimate& est, double exact,
                                      double sigmas = 4.0) {
    AgreementLine line;
    line.event = std::move(event);
    line.estimate = est;
    line.exact = exact;
    double gap = std::fabs(est.mean - exact);
    if (est.std_error > 0.0) {
        line.deviation_sigmas = gap / est.std_error;
        line.flagged = line.deviation_sigmas > sigmas;
    } else {
        line.deviation_sigmas = gap == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
        line.flagged = gap > 1e-12;
    }
    return line;
}

/// Simulates the spec and compares every estimable terminal event against the
/// exact engine: lead/tie probabilities (two or more products) and the
/// product-1 consumption tail. Specs beyond the exact enumeration cap return
/// a skipped report.
inline AgreementReport agreement_report(const MarketSpec& spec, std::size_t t, std::uint64_t seed,
                                        std::size_t replications, double sigmas = 4.0) {
    AgreementReport report;
    if (spec.customers * spec.products * t > spec.caps.ensemble_cells) {
        report.skipped = true;
        report.skip_reason = "spec exceeds exact enumeration caps; nothing to compare against";
        return report;
    }
    SimulationRun run = simulate_market(spec, t, seed, replications);
    if (spec.products >= 2) {
        LeadProbabilities exact = lead_probabilities(spec, t);
        report.lines.push_back(
            compare_estimate("lead1", estimate_event(run, MarketEvent::lead1), exact.lead1, sigmas));
        report.lines.push_back(
            compare_estimate("lead2", estimate_event(run, MarketEvent::lead2), exact.lead2, sigmas));
        report.lines.push_back(
            compare_estimate("tie", estimate_event(run, MarketEvent::tie), exact.tie, sigmas));
    }
    std::vector<double> dist = aggregate_consumption_distribution(spec, t, 0);
    KahanSum tail;
    for (std::size_t x = dist.size(); x-- > 1;) {
        tail.add(dist[x]);
        report.lines.push_back(compare_estimate(event_name(MarketEvent::tail, x),
                                                estimate_event(run, MarketEvent::tail, x),
                                                tail.value(), sigmas));
    }
    return report;
}

}  // namespace mqlab
