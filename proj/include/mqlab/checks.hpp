#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mqlab/history.hpp"
#include "mqlab/strategy.hpp"

namespace mqlab {

/// One counterexample found by a checker: the two evaluation points and the
/// offending probabilities.
struct CheckViolation {
    History h1, h2;
    ShareVector shares1, shares2;
    std::size_t product = 0;
    double value1 = 0.0, value2 = 0.0;
    std::string detail;
};

/// Outcome of an exhaustive strategy-property sweep. Checkers record the
/// violations in enumeration order, so the first entry is the
/// lexicographically first witness.
struct CheckReport {
    std::vector<CheckViolation> violations;
    std::uint64_t pairs_checked = 0;

    bool passed() const { return violations.empty(); }

    static constexpr std::size_t kMaxRecorded = 16;
    void record(CheckViolation v) {
        if (violations.size() < kMaxRecorded) violations.push_back(std::move(v));
        else ++overflow_;
    }
    std::uint64_t overflow() const { return overflow_; }

private:
    std::uint64_t overflow_ = 0;
};

/// Share vectors [0,bound]^m in lexicographic order.
inline std::vector<ShareVector> share_grid(std::size_t products, long long bound) {
    std::vector<ShareVector> grid;
    ShareVector cur(products, 0);
    while (true) {
        grid.push_back(cur);
        std::size_t axis = products;
        while (axis > 0) {
            --axis;
            if (cur[axis] < bound) {
                ++cur[axis];
                for (std::size_t rest = axis + 1; rest < products; ++rest) cur[rest] = 0;
                break;
            }
            if (axis == 0) return grid;
        }
    }
}

/// Exhaustively verifies that superior histories never get a lower
/// consumption probability, over all comparable pairs of depth <= max_depth,
/// every share vector in `share_set`, and every product index.
///
/// Pair enumeration is depth-ascending then base-3 lexicographic, so a failed
/// report's first violation is the lexicographically first witness.
inline CheckReport check_monotone(const PartialityStrategy& s, std::size_t max_depth,
                                  const std::vector<ShareVector>& share_set = {{0, 0}},
                                  std::size_t cap = kMaxEnumerationDepth) {
    CheckReport report;
    for (std::size_t t = 0; t <= max_depth; ++t) {
        std::vector<History> all = enumerate_histories(t, cap);
        for (const History& h1 : all) {
            for (const History& h2 : all) {
                if (!is_superior(h1, h2)) continue;
                for (const ShareVector& shares : share_set) {
                    for (std::size_t i = 0; i < shares.size(); ++i) {
                        double v1 = s.probability(h1, shares, i);
                        double v2 = s.probability(h2, shares, i);
                        ++report.pairs_checked;
                        if (v1 < v2) {
                            report.record({h1, h2, shares, shares, i, v1, v2,
                                           "superior history received lower probability"});
                        }
                    }
                }
            }
        }
    }
    return report;
}

/// Verifies the market-share response law on the grid [0,share_bound]^m for
/// all histories of depth <= max_depth.
///
/// Weak mode: probability non-decreasing in the product's own share and
/// invariant to every other product's share. Competitive mode: non-decreasing
/// in own share and non-increasing in every other share.
inline CheckReport check_weak_herding(const PartialityStrategy& s, bool competitive,
                                      std::size_t max_depth, long long share_bound,
                                      std::size_t products = 2,
                                      std::size_t cap = kMaxEnumerationDepth) {
    CheckReport report;
    std::vector<ShareVector> grid = share_grid(products, share_bound);
    for (std::size_t t = 0; t <= max_depth; ++t) {
        for (const History& h : enumerate_histories(t, cap)) {
            for (const ShareVector& shares : grid) {
                for (std::size_t i = 0; i < products; ++i) {
                    double base = s.probability(h, shares, i);
                    for (std::size_t axis = 0; axis < products; ++axis) {
                        if (shares[axis] >= share_bound) continue;
                        ShareVector bumped = shares;
                        ++bumped[axis];
                        double moved = s.probability(h, bumped, i);
                        ++report.pairs_checked;
                        if (axis == i) {
                            if (moved < base)
                                report.record({h, h, shares, bumped, i, base, moved,
                                               "probability decreased in own share"});
                        } else if (competitive) {
                            if (moved > base)
                                report.record({h, h, shares, bumped, i, base, moved,
                                               "probability increased in a rival share"});
                        } else {
                            if (moved != base)
                                report.record({h, h, shares, bumped, i, base, moved,
                                               "probability depends on a rival share"});
                        }
                    }
                }
            }
        }
    }
    return report;
}

inline ShareVector swap_first_two(ShareVector shares) {
    if (shares.size() >= 2) std::swap(shares[0], shares[1]);
    return shares;
}

/// Verifies product anonymity: the product-1 strategy at (Z, w) agrees with
/// the product-2 strategy at (Z, K12(w)) for all histories of depth <=
/// max_depth and all share vectors in [0,share_bound]^m.
inline CheckReport check_anonymous(const PartialityStrategy& s1, const PartialityStrategy& s2,
                                   std::size_t max_depth, long long share_bound,
                                   std::size_t products = 2,
                                   std::size_t cap = kMaxEnumerationDepth) {
    if (products < 2) throw ValidationError("anonymity check needs at least two products");
    CheckReport report;
    std::vector<ShareVector> grid = share_grid(products, share_bound);
    for (std::size_t t = 0; t <= max_depth; ++t) {
        for (const History& h : enumerate_histories(t, cap)) {
            for (const ShareVector& shares : grid) {
                ShareVector swapped = swap_first_two(shares);
                double v1 = s1.probability(h, shares, 0);
                double v2 = s2.probability(h, swapped, 1);
                ++report.pairs_checked;
                if (v1 != v2)
                    report.record({h, h, shares, swapped, 0, v1, v2,
                                   "strategies distinguish the product labels"});
            }
        }
    }
    return report;
}

}  // namespace mqlab
