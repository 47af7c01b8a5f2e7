#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <set>

#include "mqlab/coupling.hpp"
#include "mqlab/exact.hpp"
#include "mqlab/expr.hpp"
#include "mqlab/history.hpp"
#include "mqlab/market.hpp"
#include "mqlab/strategy.hpp"

using namespace mqlab;

namespace {

const History& single(const HistoryEnsemble& e) { return e.entry(0, 0); }

}  // namespace

TEST_CASE("the support criterion on hand-picked pairs") {
    auto crit = [](const char* z, const char* zp) {
        return satisfies_support_criterion(History::parse(z), History::parse(zp));
    };
    CHECK(crit("S", "S"));
    CHECK(crit("F", "S"));
    CHECK_FALSE(crit("S", "F"));   // the partner's digest may not fall below z's
    CHECK_FALSE(crit("N", "S"));   // partner may not consume while z has never consumed
    CHECK(crit("N", "N"));
    CHECK(crit("SNF", "SSN"));
    CHECK_FALSE(crit("SN", "NS"));  // round 1: z consumed, partner did not
    CHECK(crit("FN", "SS"));
    CHECK_FALSE(crit("SS", "SF"));  // digest S vs F at position 2
}

TEST_CASE("round pairing follows the three rules") {
    RoundPairing pairing = pair_rounds(History::parse("SNF"), History::parse("SSN"));
    CHECK(pairing.partner_of(1) == 1);
    CHECK(pairing.partner_of(3) == 2);
    CHECK(pairing.partner_of(2) == 3);

    RoundPairing identity = pair_rounds(History::parse("SFS"), History::parse("SSS"));
    for (std::size_t k = 1; k <= 3; ++k) CHECK(identity.partner_of(k) == k);

    RoundPairing all_n = pair_rounds(History::parse("NNN"), History::parse("NNN"));
    for (std::size_t k = 1; k <= 3; ++k) CHECK(all_n.partner_of(k) == k);

    // z consumed nothing, partner consumed twice: z's first N-rounds pair
    // with the partner's consumption rounds, the rest with its N-round
    RoundPairing ahead = pair_rounds(History::parse("NNN"), History::parse("NSF"));
    CHECK(ahead.partner_of(1) == 2);
    CHECK(ahead.partner_of(2) == 3);
    CHECK(ahead.partner_of(3) == 1);

    CHECK_THROWS_AS(pair_rounds(History::parse("N"), History::parse("S")), ValidationError);
}

TEST_CASE("pairings are bijections mapping consumption in digest order") {
    auto all3 = enumerate_histories(3);
    for (const History& z : all3)
        for (const History& zp : all3) {
            if (!satisfies_support_criterion(z, zp)) continue;
            RoundPairing p = pair_rounds(z, zp);
            std::set<std::size_t> image(p.to_partner.begin(), p.to_partner.end());
            CHECK(image.size() == 3);  // bijective
            // z's consumption rounds map to zp consumption rounds, in order
            std::size_t position = 0;
            for (std::size_t k = 1; k <= 3; ++k) {
                if (z.at_round(k) == Event::N) continue;
                ++position;
                std::size_t partner = p.partner_of(k);
                CHECK(zp.at_round(partner) != Event::N);
                CHECK(consumption_prefix(zp, partner) == position);
            }
        }
}

TEST_CASE("per-round branch probabilities sum to one") {
    History dig_x = History::parse("SFS");
    for (bool product_one : {true, false})
        for (double sigma_x : {0.2, 0.5})
            for (double sigma_y : {0.5, 0.8})
                for (Event x_letter : {Event::S, Event::F, Event::N})
                    for (std::size_t c_x : {0u, 1u, 2u})
                        for (std::size_t c_y : {0u, 1u, 2u, 3u}) {
                            BranchFactors row = row_branch(product_one, 0.3, 0.7, sigma_x, sigma_y,
                                                           x_letter, c_x, c_y, dig_x, 3);
                            CHECK(row.r[0] + row.r[1] + row.r[2] == Catch::Approx(1.0).margin(1e-12));
                            BranchFactors col = column_branch(product_one, 0.3, 0.7, sigma_x, sigma_y,
                                                              x_letter, c_x, c_y, dig_x, 3);
                            CHECK(col.r[0] + col.r[1] + col.r[2] == Catch::Approx(1.0).margin(1e-12));
                        }
}

TEST_CASE("the depth-1 always-consume table is computed by hand") {
    JointCouplingTable row =
        build_joint(make_strategy("constant", {{"p", 1.0}}), 1, 0.2, 0.6, CouplingSide::row);
    std::map<std::pair<std::string, std::string>, double> got;
    for (const auto& e : row.entries) got[{single(e.z).str(), single(e.zp).str()}] = e.f;
    REQUIRE(got.size() == 3);
    CHECK(got.at({"S", "S"}) == Catch::Approx(0.2).margin(1e-15));
    CHECK(got.at({"F", "S"}) == Catch::Approx(0.4).margin(1e-15));
    CHECK(got.at({"F", "F"}) == Catch::Approx(0.4).margin(1e-15));

    JointCouplingTable col =
        build_joint(make_strategy("constant", {{"p", 1.0}}), 1, 0.2, 0.6, CouplingSide::column);
    CouplingVerification verification = verify_joint(row, col);
    CHECK(verification.passed());
}

TEST_CASE("nearly equal qualities collapse the coupling onto the diagonal") {
    auto beta = make_strategy("beta-posterior");
    JointCouplingTable row = build_joint(beta, 3, 0.5, 0.5 + 1e-9, CouplingSide::row);
    double off_diagonal = 0.0;
    for (const auto& e : row.entries)
        if (!(e.z == e.zp)) off_diagonal += e.f;
    CHECK(off_diagonal < 1e-6);
    CHECK(row.total_mass() == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("row and column constructions coincide for monotone strategies") {
    for (const char* name : {"constant", "beta-posterior", "last-experience", "window-average"}) {
        auto s = make_strategy(name);
        JointCouplingTable row = build_joint(s, 4, 0.3, 0.7, CouplingSide::row);
        JointCouplingTable col = build_joint(s, 4, 0.3, 0.7, CouplingSide::column);
        CouplingVerification verification = verify_joint(row, col);
        INFO(name);
        CHECK(verification.passed());
        CHECK(verification.max_entry_diff <= 1e-12);
        CHECK(verification.max_row_marginal_diff <= 1e-12);
        CHECK(verification.max_column_marginal_diff <= 1e-12);
        CHECK(verification.factor_min >= 0.0);
        CHECK(verification.factor_max <= 1.0);
    }
}

TEST_CASE("tampering with one entry is caught by the entrywise check") {
    auto beta = make_strategy("beta-posterior");
    JointCouplingTable row = build_joint(beta, 3, 0.3, 0.7, CouplingSide::row);
    JointCouplingTable col = build_joint(beta, 3, 0.3, 0.7, CouplingSide::column);
    row.entries.front().f += 1e-6;
    CouplingVerification verification = verify_joint(row, col);
    CHECK_FALSE(verification.entrywise_equal);
    CHECK(verification.max_entry_diff >= 1e-7);
    CHECK_FALSE(verification.passed());
}

TEST_CASE("with no N-rounds the support is plain digest superiority") {
    auto one = make_strategy("constant", {{"p", 1.0}});
    JointCouplingTable row = build_joint(one, 3, 0.3, 0.7, CouplingSide::row);
    std::set<std::pair<std::string, std::string>> support;
    for (const auto& e : row.entries) support.insert({single(e.z).str(), single(e.zp).str()});
    std::set<std::pair<std::string, std::string>> expected;
    for (const History& z : enumerate_histories(3)) {
        if (consumption(z) != 3) continue;
        for (const History& zp : enumerate_histories(3)) {
            if (consumption(zp) != 3) continue;
            if (digest_superior(zp, z)) expected.insert({z.str(), zp.str()});
        }
    }
    CHECK(support == expected);
}

TEST_CASE("single-history couplings reject bad inputs") {
    auto beta = make_strategy("beta-posterior");
    CHECK_THROWS_AS(build_joint(beta, 3, 0.7, 0.3, CouplingSide::row), ValidationError);
    CHECK_THROWS_AS(build_joint(beta, 3, 0.5, 0.5, CouplingSide::row), ValidationError);
    CHECK_THROWS_AS(build_joint(beta, 6, 0.3, 0.7, CouplingSide::row), CapExceededError);
    CHECK_THROWS_AS(build_joint(make_strategy("elitist"), 2, 0.3, 0.7, CouplingSide::row),
                    ValidationError);

    TableStrategy contrarian(
        {{History(), 1.0}, {History::parse("S"), 0.1}, {History::parse("F"), 0.9}}, 0.5);
    CHECK_THROWS_AS(build_joint(std::make_shared<TableStrategy>(contrarian), 2, 0.3, 0.7,
                                CouplingSide::row),
                    ValidationError);
}

TEST_CASE("factorized ensemble coupling: inert second product stays diagonal") {
    auto one = make_strategy("constant", {{"p", 1.0}});
    MarketSpec spec = uniform_market(1, 2, {0.2, 0.5}, one, 1);
    JointCouplingTable row = build_ensemble_joint(spec, 1, {0.2, 0.5}, {0.6, 0.5}, CouplingSide::row);
    // every support pair has identical product-2 entries, and the product-1
    // component reproduces the single-history table times P[z2]
    std::map<std::pair<std::string, std::string>, double> product1;
    for (const auto& e : row.entries) {
        CHECK(e.z.entry(1, 0) == e.zp.entry(1, 0));
        product1[{e.z.entry(0, 0).str(), e.zp.entry(0, 0).str()}] += e.f;
    }
    REQUIRE(product1.size() == 3);
    CHECK(product1.at({"S", "S"}) == Catch::Approx(0.2).margin(1e-14));
    CHECK(product1.at({"F", "S"}) == Catch::Approx(0.4).margin(1e-14));
    CHECK(product1.at({"F", "F"}) == Catch::Approx(0.4).margin(1e-14));
}

TEST_CASE("weakly herding ensemble coupling verifies and pins other products") {
    auto herd = make_strategy("herding-mix");
    MarketSpec spec = uniform_market(1, 2, {0.3, 0.5}, herd, 2);
    JointCouplingTable row = build_ensemble_joint(spec, 2, {0.3, 0.5}, {0.7, 0.5}, CouplingSide::row);
    JointCouplingTable col =
        build_ensemble_joint(spec, 2, {0.3, 0.5}, {0.7, 0.5}, CouplingSide::column);
    for (const auto& e : row.entries) CHECK(e.z.entry(1, 0) == e.zp.entry(1, 0));
    CouplingVerification verification = verify_joint(row, col);
    CHECK(verification.passed());
    CHECK(verification.max_entry_diff <= 1e-12);
}

TEST_CASE("two customers with share-aware herding still verify") {
    auto herd = make_strategy("herding-mix");
    MarketSpec spec = uniform_market(2, 2, {0.3, 0.5}, herd, 1);
    JointCouplingTable row = build_ensemble_joint(spec, 1, {0.3, 0.5}, {0.7, 0.5}, CouplingSide::row);
    JointCouplingTable col =
        build_ensemble_joint(spec, 1, {0.3, 0.5}, {0.7, 0.5}, CouplingSide::column);
    CouplingVerification verification = verify_joint(row, col);
    CHECK(verification.passed());
}

TEST_CASE("competitively weakly herding couplings verify for two products") {
    auto follower = make_strategy("leader-follower");
    MarketSpec spec = uniform_market(1, 2, {0.3, 0.5}, follower, 2);
    JointCouplingTable row = build_ensemble_joint(spec, 2, {0.3, 0.5}, {0.7, 0.5}, CouplingSide::row);
    JointCouplingTable col =
        build_ensemble_joint(spec, 2, {0.3, 0.5}, {0.7, 0.5}, CouplingSide::column);
    CouplingVerification verification = verify_joint(row, col);
    CHECK(verification.passed());

    auto soft = ExprStrategy::parse("0.5 + 0.5 * isleader");
    MarketSpec soft_spec = uniform_market(1, 2, {0.3, 0.5}, soft, 2);
    JointCouplingTable srow =
        build_ensemble_joint(soft_spec, 2, {0.3, 0.5}, {0.7, 0.5}, CouplingSide::row);
    JointCouplingTable scol =
        build_ensemble_joint(soft_spec, 2, {0.3, 0.5}, {0.7, 0.5}, CouplingSide::column);
    CHECK(verify_joint(srow, scol).passed());
}

TEST_CASE("competitive herding with three products is rejected") {
    auto follower = make_strategy("leader-follower");
    MarketSpec spec = uniform_market(1, 3, {0.3, 0.5, 0.5}, follower, 2);
    CHECK_THROWS_AS(build_ensemble_joint(spec, 2, {0.3, 0.5, 0.5}, {0.7, 0.5, 0.5},
                                         CouplingSide::row),
                    UnsupportedConfigError);
}

TEST_CASE("paired h-factors realize the per-round quality ratios") {
    // Independent route: recompute the h factors from their definitions and
    // check that along the round pairing each paired quotient equals the
    // tabulated per-letter ratio, telescoping to Q(zp;q')/Q(z;q).
    auto beta = make_strategy("beta-posterior");
    const double q = 0.3, qp = 0.7;
    const std::size_t t = 4;
    JointCouplingTable table = build_joint(beta, t, q, qp, CouplingSide::row);

    auto h_row = [&](const History& z, const History& zp, std::size_t k) {
        std::size_t cy = consumption_prefix(zp, k - 1);
        double h1 = cy < consumption(z)
                        ? (digest(z).events()[cy] == Event::S ? 1.0 : (qp - q) / (1.0 - q))
                        : qp;
        Event e = zp.at_round(k);
        return e == Event::S ? h1 : e == Event::F ? 1.0 - h1 : 1.0;
    };
    auto h_col = [&](const History& z, const History& zp, std::size_t k) {
        std::size_t cx = consumption_prefix(z, k - 1);
        double h2 = cx < consumption(z)
                        ? (digest(zp).events()[cx] == Event::F ? 0.0 : q / qp)
                        : 1.0;
        Event e = z.at_round(k);
        return e == Event::S ? h2 : e == Event::F ? 1.0 - h2 : 1.0;
    };

    for (const auto& entry : table.entries) {
        const History z = entry.z.entry(0, 0), zp = entry.zp.entry(0, 0);
        RoundPairing pairing = pair_rounds(z, zp);
        double product = 1.0;
        for (std::size_t k = 1; k <= t; ++k) {
            std::size_t kp = pairing.partner_of(k);
            double ratio_denominator = h_col(z, zp, k);
            REQUIRE(ratio_denominator > 0.0);
            double ratio = h_row(z, zp, kp) / ratio_denominator;
            product *= ratio;
            // the tabulated per-pair values
            Event ze = z.at_round(k), ye = zp.at_round(kp);
            double expected = 0.0;
            if (ye == Event::N) {
                REQUIRE(ze == Event::N);  // consumptions never pair with N-rounds
                expected = 1.0;
            } else if (ye == Event::F) {
                expected = ze == Event::F ? (1.0 - qp) / (1.0 - q) : 1.0 - qp;
                REQUIRE(ze != Event::S);  // S-over-F is off-support positionally
            } else {
                expected = ze == Event::F   ? qp / (1.0 - q)
                           : ze == Event::S ? qp / q
                                            : qp;
            }
            CHECK(ratio == Catch::Approx(expected).margin(1e-12));
        }
        auto power = [](double base, std::size_t e) {
            double out = 1.0;
            while (e--) out *= base;
            return out;
        };
        double target = power(qp, zp.count(Event::S)) * power(1.0 - qp, zp.count(Event::F)) /
                        (power(q, z.count(Event::S)) * power(1.0 - q, z.count(Event::F)));
        CHECK(product == Catch::Approx(target).epsilon(1e-12));
    }
}

TEST_CASE("per-round g-factors realize the ex-ante ratios") {
    auto beta = make_strategy("beta-posterior");
    const double q = 0.3, qp = 0.7;
    const std::size_t t = 4;
    JointCouplingTable table = build_joint(beta, t, q, qp, CouplingSide::row);
    const ShareVector no_shares;
    auto sigma = [&](const History& h) { return beta->probability(h, no_shares, 0); };

    for (const auto& entry : table.entries) {
        const History z = entry.z.entry(0, 0), zp = entry.zp.entry(0, 0);
        double product = 1.0;
        for (std::size_t k = 1; k <= t; ++k) {
            std::size_t cx = consumption_prefix(z, k - 1), cy = consumption_prefix(zp, k - 1);
            double sx = sigma(z.prefix(k - 1)), sy = sigma(zp.prefix(k - 1));
            // g factors recomputed from their definitions
            double g1 = cx == cy ? (z.at_round(k) != Event::N ? 1.0 : (sy - sx) / (1.0 - sx)) : sy;
            double g_row = zp.at_round(k) != Event::N ? g1 : 1.0 - g1;
            double g2 = cx == cy ? (zp.at_round(k) == Event::N ? 0.0 : sx / sy) : sx;
            double g_col = z.at_round(k) != Event::N ? g2 : 1.0 - g2;
            REQUIRE(g_col > 0.0);
            double ratio = g_row / g_col;
            // tabulated value: the per-round quotient of the two chains'
            // sigma-factors
            double expected_num = zp.at_round(k) != Event::N ? sy : 1.0 - sy;
            double expected_den = z.at_round(k) != Event::N ? sx : 1.0 - sx;
            CHECK(ratio == Catch::Approx(expected_num / expected_den).margin(1e-12));
            product *= ratio;
        }
        CHECK(product == Catch::Approx(ex_ante(*beta, zp) / ex_ante(*beta, z)).epsilon(1e-12));
    }
}

TEST_CASE("couplings behave at the quality extremes") {
    auto beta = make_strategy("beta-posterior");
    JointCouplingTable row = build_joint(beta, 3, 0.0, 1.0, CouplingSide::row);
    JointCouplingTable col = build_joint(beta, 3, 0.0, 1.0, CouplingSide::column);
    CouplingVerification v = verify_joint(row, col);
    CHECK(v.passed());
    for (const auto& e : row.entries) {
        CHECK(e.z.entry(0, 0).count(Event::S) == 0);   // q = 0 never satisfies
        CHECK(e.zp.entry(0, 0).count(Event::F) == 0);  // q' = 1 never fails
    }
    JointCouplingTable tight_row = build_joint(beta, 2, 0.999, 1.0, CouplingSide::row);
    JointCouplingTable tight_col = build_joint(beta, 2, 0.999, 1.0, CouplingSide::column);
    CHECK(verify_joint(tight_row, tight_col).passed());
}

TEST_CASE("ensemble couplings reject mismatched parameters") {
    auto herd = make_strategy("herding-mix");
    MarketSpec spec = uniform_market(1, 2, {0.3, 0.5}, herd, 2);
    CHECK_THROWS_AS(build_ensemble_joint(spec, 2, {0.3, 0.5}, {0.7, 0.6}, CouplingSide::row),
                    ValidationError);
    CHECK_THROWS_AS(build_ensemble_joint(spec, 2, {0.3, 0.5}, {0.2, 0.5}, CouplingSide::row),
                    ValidationError);
    MarketSpec big = uniform_market(2, 2, {0.3, 0.5}, herd, 3);
    CHECK_THROWS_AS(build_ensemble_joint(big, 3, {0.3, 0.5}, {0.7, 0.5}, CouplingSide::row),
                    CapExceededError);
}
