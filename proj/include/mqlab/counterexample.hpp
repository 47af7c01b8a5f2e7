#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "mqlab/errors.hpp"
#include "mqlab/exact.hpp"
#include "mqlab/history.hpp"
#include "mqlab/market.hpp"
#include "mqlab/strategy.hpp"

namespace mqlab {

/// Exact per-round leadership probabilities for the two-product elitist
/// market: customer 1 plays a history-only rule, customers 2..n share one
/// deterministic share-only rule (the pure elitists).
///
/// This sidesteps full ensemble enumeration: the group's decisions are a
/// deterministic function of the share trajectory and their satisfaction
/// draws never feed back into anyone's decision, so marginalizing them out is
/// exact. Only customer 1's pair of histories is enumerated, which keeps the
/// computation polynomial in n.
///
/// Returns lead/tie probabilities after each round 1..t.
inline std::vector<LeadProbabilities> elitist_exact_leads(
    std::size_t customers, double q1, double q2, std::size_t t,
    const PartialityStrategy* first_customer = nullptr,
    const PartialityStrategy* group = nullptr) {
    if (customers < 2) throw ValidationError("the elitist market needs at least two customers");
    if (t > 8) throw CapExceededError("elitist exact scan supports t <= 8");
    StrategyPtr default_first, default_group;
    if (!first_customer) {
        default_first = make_strategy("last-experience");
        first_customer = default_first.get();
    }
    if (!group) {
        default_group = make_strategy("elitist");
        group = default_group.get();
    }
    if (!first_customer->history_only())
        throw ValidationError("customer 1's strategy must be history-only");

    const double q[2] = {q1, q2};
    const auto others = static_cast<long long>(customers - 1);
    std::vector<LeadProbabilities> per_round(t);

    std::vector<Event> z[2];
    z[0].reserve(t);
    z[1].reserve(t);
    const ShareVector no_shares;

    std::function<void(std::size_t, ShareVector, double)> walk;
    walk = [&](std::size_t k, ShareVector shares, double prob) {
        if (k > t) return;
        double sigma[2], group_decision[2];
        for (int i = 0; i < 2; ++i) {
            sigma[i] = first_customer->probability(History(z[i]), no_shares, static_cast<std::size_t>(i));
            group_decision[i] = group->probability(History(), shares, static_cast<std::size_t>(i));
            if (group_decision[i] != 0.0 && group_decision[i] != 1.0)
                throw ValidationError("group strategy must be deterministic (probability 0 or 1)");
        }
        const Event letters[3] = {Event::S, Event::F, Event::N};
        for (Event e1 : letters) {
            double p1 = e1 == Event::S   ? sigma[0] * q[0]
                        : e1 == Event::F ? sigma[0] * (1.0 - q[0])
                                         : 1.0 - sigma[0];
            if (p1 == 0.0) continue;
            for (Event e2 : letters) {
                double p2 = e2 == Event::S   ? sigma[1] * q[1]
                            : e2 == Event::F ? sigma[1] * (1.0 - q[1])
                                             : 1.0 - sigma[1];
                if (p2 == 0.0) continue;
                ShareVector next = shares;
                next[0] += (e1 != Event::N ? 1 : 0) + others * static_cast<long long>(group_decision[0]);
                next[1] += (e2 != Event::N ? 1 : 0) + others * static_cast<long long>(group_decision[1]);
                double p = prob * p1 * p2;
                auto& bucket = per_round[k - 1];
                if (next[0] > next[1]) bucket.lead1 += p;
                else if (next[1] > next[0]) bucket.lead2 += p;
                else bucket.tie += p;
                z[0].push_back(e1);
                z[1].push_back(e2);
                walk(k + 1, std::move(next), p);
                z[0].pop_back();
                z[1].pop_back();
            }
        }
    };
    walk(1, ShareVector{0, 0}, 1.0);
    return per_round;
}

/// One row of the reversal table the counterexample experiment emits.
struct ElitistScanRow {
    std::size_t customers = 0;
    std::size_t round = 0;
    double lead1 = 0.0, lead2 = 0.0, tie = 0.0;
    bool reversed = false;  ///< the worse product leads more often
};

/// Scans customer counts and rounds for the elitist market with q1 > q2.
inline std::vector<ElitistScanRow> elitist_reversal_table(double q1, double q2, std::size_t t,
                                                          std::size_t min_customers,
                                                          std::size_t max_customers) {
    if (!(q1 > q2)) throw ValidationError("the reversal scan expects q1 > q2");
    std::vector<ElitistScanRow> rows;
    for (std::size_t n = min_customers; n <= max_customers; ++n) {
        auto leads = elitist_exact_leads(n, q1, q2, t);
        for (std::size_t r = 1; r <= t; ++r) {
            const auto& p = leads[r - 1];
            rows.push_back({n, r, p.lead1, p.lead2, p.tie, p.lead2 > p.lead1});
        }
    }
    return rows;
}

/// Smallest customer count for which the round-t market leadership of the
/// better product is reversed, scanning n = 2, 3, ...
inline std::optional<std::size_t> minimal_reversal_customers(double q1, double q2, std::size_t t,
                                                             std::size_t max_customers = 64) {
    if (!(q1 > q2)) throw ValidationError("the reversal scan expects q1 > q2");
    for (std::size_t n = 2; n <= max_customers; ++n) {
        auto leads = elitist_exact_leads(n, q1, q2, t);
        const auto& last = leads[t - 1];
        if (last.lead2 > last.lead1) return n;
    }
    return std::nullopt;
}

}  // namespace mqlab
