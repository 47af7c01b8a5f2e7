#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mqlab/checks.hpp"
#include "mqlab/errors.hpp"
#include "mqlab/exact.hpp"
#include "mqlab/history.hpp"
#include "mqlab/market.hpp"
#include "mqlab/strategy.hpp"

namespace mqlab {

// ---------------------------------------------------------------------------
// Support criteria
// ---------------------------------------------------------------------------

/// Criterion for the single-history coupling support: for every round k there
/// is an l <= k such that the digest of zp's l-prefix is superior to the
/// digest of z's k-prefix. zp is the higher-quality side.
inline bool satisfies_support_criterion(const History& z, const History& zp) {
    if (z.depth() != zp.depth()) return false;
    const std::size_t t = z.depth();
    const History dz = digest(z), dzp = digest(zp);
    std::size_t cz = 0;
    std::vector<std::size_t> czp(t + 1, 0);
    for (std::size_t k = 1; k <= t; ++k)
        czp[k] = czp[k - 1] + (zp.at_round(k) != Event::N ? 1 : 0);
    for (std::size_t k = 1; k <= t; ++k) {
        if (z.at_round(k) != Event::N) ++cz;
        bool found = false;
        for (std::size_t l = 1; l <= k; ++l) {
            if (czp[l] != cz) continue;
            bool ok = true;
            for (std::size_t p = 0; p < cz; ++p)
                if (dzp.events()[p] == Event::F && dz.events()[p] == Event::S) {
                    ok = false;
                    break;
                }
            found = ok;
            break;
        }
        if (!found) return false;
    }
    return true;
}

/// Support condition for products other than 1 in the ensemble coupling: for
/// every round k there is an l <= k with dig(z^l) = dig(zp^k). Here z (the
/// base-quality side) is the one that may run ahead.
inline bool satisfies_offproduct_criterion(const History& z, const History& zp) {
    if (z.depth() != zp.depth()) return false;
    const std::size_t t = z.depth();
    const History dz = digest(z), dzp = digest(zp);
    std::vector<std::size_t> cz(t + 1, 0);
    for (std::size_t k = 1; k <= t; ++k)
        cz[k] = cz[k - 1] + (z.at_round(k) != Event::N ? 1 : 0);
    std::size_t czp = 0;
    for (std::size_t k = 1; k <= t; ++k) {
        if (zp.at_round(k) != Event::N) ++czp;
        bool found = false;
        for (std::size_t l = 1; l <= k; ++l) {
            if (cz[l] != czp) continue;
            bool ok = true;
            for (std::size_t p = 0; p < czp; ++p)
                if (dz.events()[p] != dzp.events()[p]) {
                    ok = false;
                    break;
                }
            found = ok;
            break;
        }
        if (!found) return false;
    }
    return true;
}

/// Ensemble-level support criterion: product 1 cells follow the superiority
/// criterion, all other cells the digest-equality one.
inline bool satisfies_ensemble_support_criterion(const HistoryEnsemble& z, const HistoryEnsemble& zp) {
    if (z.products() != zp.products() || z.customers() != zp.customers() ||
        z.depth() != zp.depth())
        return false;
    for (std::size_t j = 0; j < z.customers(); ++j)
        if (!satisfies_support_criterion(z.entry(0, j), zp.entry(0, j))) return false;
    for (std::size_t i = 1; i < z.products(); ++i)
        for (std::size_t j = 0; j < z.customers(); ++j)
            if (!satisfies_offproduct_criterion(z.entry(i, j), zp.entry(i, j))) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Round pairing
// ---------------------------------------------------------------------------

/// Bijection on round indices [1,t] aligning a history with its coupling
/// partner; entry k-1 holds the partner round of round k.
struct RoundPairing {
    std::vector<std::size_t> to_partner;

    std::size_t partner_of(std::size_t k) const { return to_partner.at(k - 1); }
};

/// Pairs rounds of z with rounds of zp: consumption rounds of z with zp's
/// leading consumption rounds in digest order, then z's earliest N-rounds
/// with zp's surplus consumption rounds, then leftover N-rounds ascending.
inline RoundPairing pair_rounds(const History& z, const History& zp) {
    if (!satisfies_support_criterion(z, zp))
        throw ValidationError("pair_rounds: pair is not in the coupling support");
    const std::size_t t = z.depth();
    std::vector<std::size_t> cons_z, cons_zp, n_z, n_zp;
    for (std::size_t k = 1; k <= t; ++k) {
        (z.at_round(k) != Event::N ? cons_z : n_z).push_back(k);
        (zp.at_round(k) != Event::N ? cons_zp : n_zp).push_back(k);
    }
    RoundPairing pairing;
    pairing.to_partner.assign(t, 0);
    for (std::size_t p = 0; p < cons_z.size(); ++p)
        pairing.to_partner[cons_z[p] - 1] = cons_zp[p];
    const std::size_t surplus = cons_zp.size() - cons_z.size();
    for (std::size_t p = 0; p < surplus; ++p)
        pairing.to_partner[n_z[p] - 1] = cons_zp[cons_z.size() + p];
    for (std::size_t p = surplus; p < n_z.size(); ++p)
        pairing.to_partner[n_z[p] - 1] = n_zp[p - surplus];
    return pairing;
}

// ---------------------------------------------------------------------------
// Per-round branch factors
// ---------------------------------------------------------------------------

/// One round's g and h factors and the resulting letter probabilities
/// r[S], r[F], r[N] for the side being generated.
struct BranchFactors {
    double g = 0.0;  ///< probability mass routed to consumption letters
    double h = 0.0;  ///< probability a consumption letter is S
    std::array<double, 3> r{0.0, 0.0, 0.0};  ///< indexed by Event

    double r_of(Event e) const { return r[static_cast<std::size_t>(e)]; }
};

namespace coupling_detail {

/// 0/0 short-circuits to 0: those branches are off-support by construction.
inline double guarded_ratio(double num, double den) {
    if (den == 0.0) return 0.0;
    return num / den;
}

inline BranchFactors assemble(double g, double h) {
    BranchFactors out;
    out.g = g;
    out.h = h;
    out.r[static_cast<std::size_t>(Event::S)] = g * h;
    out.r[static_cast<std::size_t>(Event::F)] = g * (1.0 - h);
    out.r[static_cast<std::size_t>(Event::N)] = 1.0 - g;
    return out;
}

}  // namespace coupling_detail

/// Row-construction factors for one cell and round: the distribution of the
/// partner letter Y(k) given the conditioned history X and both prefixes.
///
/// The h factor indexes the conditioned digest at the partner's next
/// consumption position c_y + 1, so a partner running ahead of X's
/// consumption count keeps copying against the correct digest slot.
inline BranchFactors row_branch(bool product_one, double q_i, double qp_i, double sigma_x,
                                double sigma_y, Event x_letter, std::size_t c_x, std::size_t c_y,
                                const History& dig_x, std::size_t con_x) {
    using coupling_detail::guarded_ratio;
    double g;
    if (c_x == c_y) {
        if (product_one)
            g = x_letter != Event::N ? 1.0 : guarded_ratio(sigma_y - sigma_x, 1.0 - sigma_x);
        else
            g = x_letter == Event::N ? 0.0 : guarded_ratio(sigma_y, sigma_x);
    } else {
        g = sigma_y;
    }
    double h;
    if (c_y < con_x)
        h = dig_x.events()[c_y] == Event::S ? 1.0 : (qp_i - q_i) / (1.0 - q_i);
    else
        h = product_one ? qp_i : 1.0;
    return coupling_detail::assemble(g, h);
}

/// Column-construction factors: the distribution of the base-side letter
/// X(k) given the conditioned history Y and both prefixes.
inline BranchFactors column_branch(bool product_one, double q_i, double qp_i, double sigma_x,
                                   double sigma_y, Event y_letter, std::size_t c_x,
                                   std::size_t c_y, const History& dig_y, std::size_t con_y) {
    using coupling_detail::guarded_ratio;
    double g;
    if (c_x == c_y) {
        if (product_one)
            g = y_letter == Event::N ? 0.0 : guarded_ratio(sigma_x, sigma_y);
        else
            g = y_letter != Event::N ? 1.0 : guarded_ratio(sigma_x - sigma_y, 1.0 - sigma_y);
    } else {
        g = sigma_x;
    }
    double h;
    if (c_x < con_y)
        h = dig_y.events()[c_x] == Event::F ? 0.0 : (qp_i == 0.0 ? 0.0 : q_i / qp_i);
    else
        h = product_one ? 1.0 : q_i;
    return coupling_detail::assemble(g, h);
}

// ---------------------------------------------------------------------------
// Joint coupling tables
// ---------------------------------------------------------------------------

enum class CouplingSide { row, column };

struct CouplingEntry {
    HistoryEnsemble z;   ///< base-quality side
    HistoryEnsemble zp;  ///< raised-quality side
    double f = 0.0;
};

/// Sparse joint distribution over (Z, Z') pairs built by one of the two
/// constructions.
struct JointCouplingTable {
    CouplingSide side = CouplingSide::row;
    MarketSpec spec;  ///< qualities hold the base vector q
    QualityVector q, q_prime;
    std::size_t depth = 0;
    std::vector<CouplingEntry> entries;
    double factor_min = 1.0;  ///< smallest g/h factor used on the support
    double factor_max = 0.0;  ///< largest g/h factor used on the support

    double total_mass() const {
        KahanSum sum;
        for (const auto& e : entries) sum.add(e.f);
        return sum.value();
    }
};

/// Herding discipline detected for a spec's strategies.
enum class HerdingMode { history_only, weak, competitive };

namespace coupling_detail {

inline std::vector<const PartialityStrategy*> distinct_strategies(const MarketSpec& spec) {
    std::vector<const PartialityStrategy*> out;
    std::set<const PartialityStrategy*> seen;
    for (const auto& s : spec.strategies)
        if (seen.insert(s.get()).second) out.push_back(s.get());
    return out;
}

/// Verifies the theorem hypotheses: every strategy monotone, and everyone
/// weakly herding (any m) or competitively weakly herding (m = 2 only).
inline HerdingMode require_coupling_hypotheses(const MarketSpec& spec, std::size_t t) {
    const long long bound =
        *std::max_element(spec.initial_shares.begin(), spec.initial_shares.end()) +
        static_cast<long long>(spec.customers * t);
    std::vector<ShareVector> share_set = share_grid(spec.products, std::min<long long>(bound, 4));
    bool all_history_only = true, all_weak = true, all_competitive = true;
    for (const PartialityStrategy* s : distinct_strategies(spec)) {
        if (!check_monotone(*s, std::min<std::size_t>(t, 5), share_set).passed())
            throw ValidationError("coupling requires monotone strategies; '" + s->describe() +
                                  "' fails the monotonicity check");
        if (s->history_only()) continue;
        all_history_only = false;
        if (!check_weak_herding(*s, false, std::min<std::size_t>(t, 4),
                                std::min<long long>(bound, 4), spec.products)
                 .passed())
            all_weak = false;
        if (!check_weak_herding(*s, true, std::min<std::size_t>(t, 4),
                                std::min<long long>(bound, 4), spec.products)
                 .passed())
            all_competitive = false;
    }
    if (all_history_only) return HerdingMode::history_only;
    if (all_weak) return HerdingMode::weak;
    if (all_competitive) {
        if (spec.products != 2)
            throw UnsupportedConfigError(
                "competitively weakly herding strategies are supported for exactly two "
                "products; a third product breaks the share-dominance argument");
        return HerdingMode::competitive;
    }
    throw ValidationError("coupling requires weakly herding strategies (or competitively "
                          "weakly herding with two products)");
}

struct CellView {
    const History* full;   ///< conditioned side's complete history for this cell
    History digest_full;   ///< its digest
    std::size_t con_full;  ///< its total consumption
};

/// Shared state for generating the partner ensemble of one conditioned
/// ensemble, round-major then cell-major, pruning zero-probability branches.
template <typename EmitFn>
void generate_partners(const MarketSpec& spec, std::size_t t, const QualityVector& q,
                       const QualityVector& qp, CouplingSide side,
                       const HistoryEnsemble& conditioned, double conditioned_prob,
                       double& factor_min, double& factor_max, EmitFn&& emit) {
    const std::size_t m = spec.products, n = spec.customers, cells = m * n;

    // Conditioned-side bookkeeping (kept per cell).
    std::vector<CellView> view(cells);
    std::vector<std::size_t> con_cond_prefix(cells, 0);
    for (std::size_t c = 0; c < cells; ++c) {
        const History& h = conditioned.entry(c / n, c % n);
        view[c] = {&h, digest(h), consumption(h)};
    }
    // Conditioned-side sigma per cell, refreshed at each round boundary.
    ShareVector shares_cond = spec.initial_shares;
    std::vector<double> sigma_cond(cells, 0.0);

    // Generated-side state.
    std::vector<std::vector<Event>> gen(cells);
    for (auto& g : gen) g.reserve(t);
    std::vector<std::size_t> con_gen_prefix(cells, 0);
    ShareVector shares_gen = spec.initial_shares;
    std::vector<double> sigma_gen(cells, 0.0);

    const bool generating_partner = side == CouplingSide::row;

    auto refresh_sigmas = [&](std::size_t k) {
        // Sigmas for the round about to be placed (round k), from round k-1
        // prefixes and shares.
        for (std::size_t c = 0; c < cells; ++c) {
            const std::size_t i = c / n, j = c % n;
            sigma_cond[c] =
                spec.strategy(i, j).probability(view[c].full->prefix(k - 1), shares_cond, i);
            sigma_gen[c] = spec.strategy(i, j).probability(History(gen[c]), shares_gen, i);
        }
    };

    std::function<void(std::size_t, std::size_t, double)> place;
    place = [&](std::size_t k, std::size_t cell, double weight) {
        if (cell == cells) {
            // Round complete: advance both share vectors, recurse or emit.
            ShareVector saved_cond = shares_cond, saved_gen = shares_gen;
            std::vector<double> saved_sc = sigma_cond, saved_sg = sigma_gen;
            for (std::size_t c = 0; c < cells; ++c) {
                if (view[c].full->at_round(k) != Event::N) {
                    ++shares_cond[c / n];
                    ++con_cond_prefix[c];
                }
                if (gen[c].back() != Event::N) {
                    ++shares_gen[c / n];
                    ++con_gen_prefix[c];
                }
            }
            if (k == t) {
                std::vector<History> entries;
                entries.reserve(cells);
                for (const auto& g : gen) entries.emplace_back(g);
                emit(HistoryEnsemble(m, n, std::move(entries)), weight);
            } else {
                refresh_sigmas(k + 1);
                place(k + 1, 0, weight);
            }
            for (std::size_t c = 0; c < cells; ++c) {
                if (view[c].full->at_round(k) != Event::N) --con_cond_prefix[c];
                if (gen[c].back() != Event::N) --con_gen_prefix[c];
            }
            shares_cond = std::move(saved_cond);
            shares_gen = std::move(saved_gen);
            sigma_cond = std::move(saved_sc);
            sigma_gen = std::move(saved_sg);
            return;
        }
        const std::size_t i = cell / n;
        const bool product_one = i == 0;
        BranchFactors factors;
        if (generating_partner) {
            factors = row_branch(product_one, q[i], qp[i], sigma_cond[cell], sigma_gen[cell],
                                 view[cell].full->at_round(k), con_cond_prefix[cell],
                                 con_gen_prefix[cell], view[cell].digest_full, view[cell].con_full);
        } else {
            factors = column_branch(product_one, q[i], qp[i], sigma_gen[cell], sigma_cond[cell],
                                    view[cell].full->at_round(k), con_gen_prefix[cell],
                                    con_cond_prefix[cell], view[cell].digest_full,
                                    view[cell].con_full);
        }
        constexpr double kFactorSlack = 1e-9;
        if (factors.g < -kFactorSlack || factors.g > 1.0 + kFactorSlack ||
            factors.h < -kFactorSlack || factors.h > 1.0 + kFactorSlack)
            throw ValidationError("coupling factor outside [0,1] at round " + std::to_string(k) +
                                  ", product " + std::to_string(i + 1) + ", customer " +
                                  std::to_string(cell % n + 1) +
                                  " (is the strategy really monotone and herding?)");
        factor_min = std::min({factor_min, factors.g, factors.h});
        factor_max = std::max({factor_max, factors.g, factors.h});
        const Event letters[3] = {Event::S, Event::F, Event::N};
        for (Event letter : letters) {
            double r = factors.r_of(letter);
            if (r <= 0.0) continue;
            gen[cell].push_back(letter);
            place(k, cell + 1, weight * r);
            gen[cell].pop_back();
        }
    };

    if (t == 0) {
        emit(HistoryEnsemble(m, n, 0), conditioned_prob);
        return;
    }
    refresh_sigmas(1);
    place(1, 0, conditioned_prob);
}

inline JointCouplingTable build_table(const MarketSpec& base, std::size_t t,
                                      const QualityVector& q, const QualityVector& qp,
                                      CouplingSide side) {
    base.validate();
    if (q.size() != base.products || qp.size() != base.products)
        throw ValidationError("quality vectors must match the product count");
    if (!(qp[0] > q[0]))
        throw ValidationError("coupling requires q'_1 > q_1");
    for (std::size_t i = 1; i < q.size(); ++i)
        if (qp[i] != q[i])
            throw ValidationError("coupling requires equal qualities for products other than 1");
    require_coupling_hypotheses(base, t);

    JointCouplingTable table;
    table.side = side;
    table.spec = base;
    table.q = q;
    table.q_prime = qp;
    table.depth = t;

    const MarketSpec cond_spec = base.with_qualities(side == CouplingSide::row ? q : qp);
    for_each_ensemble(cond_spec, t, [&](const HistoryEnsemble& cond, double p, const ShareVector&) {
        generate_partners(base, t, q, qp, side, cond, p, table.factor_min, table.factor_max,
                          [&](const HistoryEnsemble& gen, double f) {
                              if (f <= 0.0) return;
                              if (side == CouplingSide::row)
                                  table.entries.push_back({cond, gen, f});
                              else
                                  table.entries.push_back({gen, cond, f});
                          });
    });
    return table;
}

}  // namespace coupling_detail

/// Ensemble coupling table for quality vectors q (rows) and q' (columns),
/// where q' raises product 1's quality and leaves the rest unchanged.
/// Verifies the monotonicity and herding hypotheses before building.
inline JointCouplingTable build_ensemble_joint(const MarketSpec& spec, std::size_t t,
                                               const QualityVector& q, const QualityVector& qp,
                                               CouplingSide side) {
    const std::size_t cells = spec.customers * spec.products * t;
    if (cells > spec.caps.ensemble_coupling_cells)
        throw CapExceededError("ensemble coupling needs n*m*t = " + std::to_string(cells) +
                               " <= " + std::to_string(spec.caps.ensemble_coupling_cells));
    return coupling_detail::build_table(spec, t, q, qp, side);
}

/// Single-history coupling table for a history-only strategy at qualities
/// q < q'. Wraps the one-customer, one-product market.
inline JointCouplingTable build_joint(StrategyPtr strategy, std::size_t t, double q, double qp,
                                      CouplingSide side, Caps caps = {}) {
    if (!strategy) throw ValidationError("build_joint needs a strategy");
    if (!strategy->history_only())
        throw ValidationError("single-history coupling requires a history-only strategy");
    if (t > caps.coupling_depth)
        throw CapExceededError("single-history coupling depth " + std::to_string(t) +
                               " exceeds cap " + std::to_string(caps.coupling_depth));
    MarketSpec spec = uniform_market(1, 1, {q}, std::move(strategy), t);
    spec.caps = caps;
    return coupling_detail::build_table(spec, t, {q}, {qp}, side);
}

// ---------------------------------------------------------------------------
// Verification
// ---------------------------------------------------------------------------

/// Outcome of cross-checking the two constructions. Each check carries the
/// worst deviation seen so reports stay informative when they fail.
struct CouplingVerification {
    double tolerance = 1e-12;
    bool entrywise_equal = false;
    double max_entry_diff = 0.0;
    bool row_marginals_ok = false;
    double max_row_marginal_diff = 0.0;
    bool column_marginals_ok = false;
    double max_column_marginal_diff = 0.0;
    bool support_ok = false;
    std::string support_witness;
    bool dominance_ok = false;
    std::string dominance_witness;
    bool factors_ok = false;
    double factor_min = 0.0, factor_max = 0.0;
    bool tail_inequality_ok = false;

    bool passed() const {
        return entrywise_equal && row_marginals_ok && column_marginals_ok && support_ok &&
               dominance_ok && factors_ok && tail_inequality_ok;
    }
};

namespace coupling_detail {

using PairKey = std::pair<HistoryEnsemble, HistoryEnsemble>;

inline std::map<PairKey, double> as_map(const JointCouplingTable& table) {
    std::map<PairKey, double> out;
    for (const auto& e : table.entries) out[{e.z, e.zp}] += e.f;
    return out;
}

}  // namespace coupling_detail

/// Cross-checks a row-side and a column-side table built with the same
/// parameters: entrywise agreement, exact marginals on both axes, the support
/// criterion, the dominance consequence on shares/consumption, factor bounds,
/// and the resulting tail inequality.
inline CouplingVerification verify_joint(const JointCouplingTable& row_table,
                                         const JointCouplingTable& col_table,
                                         double tolerance = 1e-12) {
    if (row_table.depth != col_table.depth || row_table.q != col_table.q ||
        row_table.q_prime != col_table.q_prime)
        throw ValidationError("verify_joint needs both tables built with the same parameters");
    CouplingVerification report;
    report.tolerance = tolerance;

    auto row_map = coupling_detail::as_map(row_table);
    auto col_map = coupling_detail::as_map(col_table);

    report.entrywise_equal = true;
    for (const auto& [key, f] : row_map) {
        auto it = col_map.find(key);
        double diff = std::fabs(f - (it == col_map.end() ? 0.0 : it->second));
        report.max_entry_diff = std::max(report.max_entry_diff, diff);
    }
    for (const auto& [key, f] : col_map)
        if (!row_map.count(key)) report.max_entry_diff = std::max(report.max_entry_diff, f);
    report.entrywise_equal = report.max_entry_diff <= tolerance;

    // Exact marginals from the enumeration engine.
    const std::size_t t = row_table.depth;
    std::map<HistoryEnsemble, double> exact_q, exact_qp;
    {
        MarketSpec spec_q = row_table.spec.with_qualities(row_table.q);
        spec_q.caps.ensemble_cells = std::max(spec_q.caps.ensemble_cells,
                                              spec_q.customers * spec_q.products * t);
        for_each_ensemble(spec_q, t, [&](const HistoryEnsemble& e, double p, const ShareVector&) {
            exact_q[e] += p;
        });
        MarketSpec spec_qp = row_table.spec.with_qualities(row_table.q_prime);
        spec_qp.caps.ensemble_cells = spec_q.caps.ensemble_cells;
        for_each_ensemble(spec_qp, t, [&](const HistoryEnsemble& e, double p, const ShareVector&) {
            exact_qp[e] += p;
        });
    }

    auto check_marginals = [&](const std::map<coupling_detail::PairKey, double>& table,
                               double& worst) {
        std::map<HistoryEnsemble, KahanSum> row_sums, col_sums;
        for (const auto& [key, f] : table) {
            row_sums[key.first].add(f);
            col_sums[key.second].add(f);
        }
        for (const auto& [e, p] : exact_q) {
            auto it = row_sums.find(e);
            worst = std::max(worst, std::fabs((it == row_sums.end() ? 0.0 : it->second.value()) - p));
        }
        for (const auto& [e, sum] : row_sums)
            if (!exact_q.count(e)) worst = std::max(worst, sum.value());
        double worst_col = 0.0;
        for (const auto& [e, p] : exact_qp) {
            auto it = col_sums.find(e);
            worst_col =
                std::max(worst_col, std::fabs((it == col_sums.end() ? 0.0 : it->second.value()) - p));
        }
        for (const auto& [e, sum] : col_sums)
            if (!exact_qp.count(e)) worst_col = std::max(worst_col, sum.value());
        return worst_col;
    };
    double row_worst = 0.0;
    double col_of_row = check_marginals(row_map, row_worst);
    double col_worst_rows = 0.0;
    double col_of_col = check_marginals(col_map, col_worst_rows);
    report.max_row_marginal_diff = std::max(row_worst, col_worst_rows);
    report.max_column_marginal_diff = std::max(col_of_row, col_of_col);
    report.row_marginals_ok = report.max_row_marginal_diff <= tolerance;
    report.column_marginals_ok = report.max_column_marginal_diff <= tolerance;

    // Support criterion and dominance consequence over both supports.
    report.support_ok = true;
    report.dominance_ok = true;
    auto inspect_support = [&](const std::map<coupling_detail::PairKey, double>& table) {
        for (const auto& [key, f] : table) {
            (void)f;
            const auto& [z, zp] = key;
            if (report.support_ok && !satisfies_ensemble_support_criterion(z, zp)) {
                report.support_ok = false;
                report.support_witness = z.str() + " ~ " + zp.str();
            }
            if (report.dominance_ok) {
                ShareVector sz = market_share(z, row_table.spec.initial_shares, t);
                ShareVector szp = market_share(zp, row_table.spec.initial_shares, t);
                bool ok = szp[0] >= sz[0];
                for (std::size_t i = 1; i < sz.size(); ++i)
                    if (szp[i] > sz[i]) ok = false;
                if (!ok) {
                    report.dominance_ok = false;
                    report.dominance_witness = z.str() + " ~ " + zp.str();
                }
            }
        }
    };
    inspect_support(row_map);
    inspect_support(col_map);

    constexpr double kFactorSlack = 1e-12;
    report.factor_min = std::min(row_table.factor_min, col_table.factor_min);
    report.factor_max = std::max(row_table.factor_max, col_table.factor_max);
    report.factors_ok =
        report.factor_min >= -kFactorSlack && report.factor_max <= 1.0 + kFactorSlack;

    // The dominance consequence on tail events. For one product this is the
    // consumption tail; with two or more, strict leadership of product 1.
    report.tail_inequality_ok = true;
    if (row_table.spec.products == 1) {
        const std::size_t cells = t;
        for (std::size_t x = 0; x <= cells; ++x) {
            KahanSum lhs, rhs;
            for (const auto& [e, p] : exact_q)
                if (consumption(e.entry(0, 0)) >= x) lhs.add(p);
            for (const auto& [e, p] : exact_qp)
                if (consumption(e.entry(0, 0)) >= x) rhs.add(p);
            if (lhs.value() > rhs.value() + tolerance) report.tail_inequality_ok = false;
        }
    } else {
        KahanSum lhs, rhs;
        for (const auto& [e, p] : exact_q) {
            ShareVector s = market_share(e, row_table.spec.initial_shares, t);
            if (s[0] > s[1]) lhs.add(p);
        }
        for (const auto& [e, p] : exact_qp) {
            ShareVector s = market_share(e, row_table.spec.initial_shares, t);
            if (s[0] > s[1]) rhs.add(p);
        }
        if (lhs.value() > rhs.value() + tolerance) report.tail_inequality_ok = false;
    }
    return report;
}

}  // namespace mqlab
