#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include "mqlab/exact.hpp"
#include "mqlab/history.hpp"
#include "mqlab/market.hpp"
#include "mqlab/strategy.hpp"

using namespace mqlab;

namespace {

// Independent oracle: walk the chain transitions directly over the full
// enumeration, without ex_ante / history_prob / the ensemble walker.
double oracle_history_prob(const PartialityStrategy& s, const History& h, double q) {
    double p = 1.0;
    for (std::size_t k = 1; k <= h.depth(); ++k) {
        double sigma = s.probability(h.prefix(k - 1), {}, 0);
        Event e = h.at_round(k);
        p *= e == Event::S ? sigma * q : e == Event::F ? sigma * (1.0 - q) : 1.0 - sigma;
    }
    return p;
}

double oracle_tail(const PartialityStrategy& s, std::size_t t, std::size_t x, double q) {
    double total = 0.0;
    for (const History& h : enumerate_histories(t))
        if (consumption(h) >= x) total += oracle_history_prob(s, h, q);
    return total;
}

}  // namespace

TEST_CASE("ex-ante products of sigma factors") {
    auto half = make_strategy("constant", {{"p", 0.5}});
    CHECK(ex_ante(*half, History::parse("FNSSN")) == Catch::Approx(0.03125).epsilon(0));
    CHECK(ex_ante(*half, History()) == 1.0);

    // hand evaluation for the beta posterior:
    // sigma(empty)=1/2, 1-sigma(F)=2/3, sigma(FN)=1/3, sigma(FNS)=1/2, 1-sigma(FNSS)=2/5
    auto beta = make_strategy("beta-posterior");
    CHECK(ex_ante(*beta, History::parse("FNSSN")) ==
          Catch::Approx(0.5 * (2.0 / 3.0) * (1.0 / 3.0) * 0.5 * 0.4).margin(1e-15));

    auto elitist = make_strategy("elitist");
    CHECK_THROWS_AS(ex_ante(*elitist, History::parse("S")), ValidationError);
}

TEST_CASE("history probability closed form") {
    auto one = make_strategy("constant", {{"p", 1.0}});
    CHECK(history_prob(*one, History::parse("SS"), 0.7) == Catch::Approx(0.49).margin(1e-15));
    auto half = make_strategy("constant", {{"p", 0.5}});
    CHECK(history_prob(*half, History::parse("N"), 0.9) == 0.5);
    CHECK(history_prob(*half, History::parse("N"), 0.1) == 0.5);
}

TEST_CASE("normalization over the full history space") {
    auto beta = make_strategy("beta-posterior");
    KahanSum sum;
    for (const History& h : enumerate_histories(3)) sum.add(history_prob(*beta, h, 0.3));
    CHECK(sum.value() == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("closed form equals the chain transition product") {
    for (const char* name : {"beta-posterior", "last-experience", "window-average"}) {
        auto s = make_strategy(name);
        for (std::size_t t = 0; t <= 6; ++t)
            for (const History& h : enumerate_histories(t)) {
                double closed = history_prob(*s, h, 0.37);
                double chain = markov_path_prob(*s, h, 0.37);
                CHECK(std::fabs(closed - chain) <= 1e-15);
            }
    }
}

TEST_CASE("tail probabilities against a brute-force oracle") {
    auto one = make_strategy("constant", {{"p", 1.0}});
    for (std::size_t x = 0; x <= 4; ++x)
        CHECK(tail_prob(*one, 4, x, 0.42) == Catch::Approx(1.0).margin(1e-12));
    CHECK(tail_prob(*one, 4, 5, 0.42) == 0.0);

    auto beta = make_strategy("beta-posterior");
    CHECK(tail_prob(*beta, 3, 0, 0.9) == 1.0);
    double prev = -1.0;
    for (double q : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        double got = tail_prob(*beta, 4, 3, q);
        CHECK(got == Catch::Approx(oracle_tail(*beta, 4, 3, q)).margin(1e-13));
        CHECK(got >= prev - 1e-12);  // the stochastic-dominance claim
        prev = got;
    }
}

TEST_CASE("expected consumption basics and dual route") {
    auto one = make_strategy("constant", {{"p", 1.0}});
    CHECK(expected_consumption(*one, 7, 0.3) == Catch::Approx(7.0).margin(1e-12));
    auto zero = make_strategy("constant", {{"p", 0.0}});
    CHECK(expected_consumption(*zero, 7, 0.3) == 0.0);

    auto last = make_strategy("last-experience");
    CHECK(expected_consumption(*last, 3, 0.9) >= expected_consumption(*last, 3, 0.1));

    // against the direct sum of P * con
    auto beta = make_strategy("beta-posterior");
    KahanSum direct;
    for (const History& h : enumerate_histories(5))
        direct.add(history_prob(*beta, h, 0.6) * static_cast<double>(consumption(h)));
    CHECK(expected_consumption(*beta, 5, 0.6) == Catch::Approx(direct.value()).margin(1e-12));
}

TEST_CASE("ensemble probability of a single deterministic cell") {
    auto one = make_strategy("constant", {{"p", 1.0}});
    MarketSpec spec = uniform_market(1, 1, {0.3}, one, 1);
    HistoryEnsemble e(1, 1, std::vector<History>{History::parse("S")});
    CHECK(ensemble_prob(spec, e) == Catch::Approx(0.3).margin(1e-15));
}

TEST_CASE("history-only markets factorize across cells") {
    MarketSpec spec;
    spec.customers = 2;
    spec.products = 2;
    spec.qualities = {0.3, 0.7};
    spec.initial_shares = {0, 0};
    spec.horizon = 2;
    auto beta = make_strategy("beta-posterior");
    auto window = make_strategy("window-average", {{"window", 2}});
    spec.strategies = {beta, window, window, beta};
    spec.validate();

    for_each_ensemble(spec, 2, [&](const HistoryEnsemble& e, double p, const ShareVector&) {
        double product = 1.0;
        for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t j = 0; j < 2; ++j)
                product *= history_prob(spec.strategy(i, j), e.entry(i, j), spec.qualities[i]);
        CHECK(p == Catch::Approx(product).margin(1e-14));
        CHECK(ensemble_prob(spec, e) == Catch::Approx(product).margin(1e-14));
    });
}

TEST_CASE("ensemble normalization for the elitist market") {
    MarketSpec spec = elitist_example_market(2, 0.8, 0.3);
    KahanSum sum;
    for_each_terminal(spec, 3, [&](double p, const ShareVector&) { sum.add(p); });
    CHECK(sum.value() == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("leadership is label-symmetric for equal qualities") {
    auto beta = make_strategy("beta-posterior");
    MarketSpec spec = uniform_market(2, 2, {0.4, 0.4}, beta, 2);
    LeadProbabilities lp = lead_probabilities(spec, 2);
    CHECK(lp.lead1 == Catch::Approx(lp.lead2).margin(1e-13));
    CHECK(lp.lead1 + lp.lead2 + lp.tie == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("round-2 leadership of the elitist market is q1(1-q2)") {
    MarketSpec spec = elitist_example_market(2, 0.8, 0.3);
    CHECK(leadership_prob(spec, 2) == Catch::Approx(0.8 * 0.7).margin(1e-12));
}

TEST_CASE("aggregate consumption tails are non-decreasing in quality for monotone customers") {
    // three independent monotone customers, one product
    auto beta = make_strategy("beta-posterior");
    MarketSpec spec = uniform_market(3, 1, {0.0}, beta, 2);
    std::vector<double> grid = uniform_grid(0.0, 1.0, 11);
    for (std::size_t x = 1; x <= 6; ++x) {
        double prev = -1.0;
        for (double q : grid) {
            double tail = aggregate_tail_prob(spec.with_qualities({q}), 2, 0, x);
            CHECK(tail >= prev - 1e-12);
            prev = tail;
        }
    }
}

TEST_CASE("posterior odds favour the better product under weak herding") {
    auto herd = make_strategy("herding-mix");
    MarketSpec spec = uniform_market(2, 2, {0.0, 0.0}, herd, 3);
    PriorGrid prior = PriorGrid::symmetric_two_point(0.8, 0.3);
    PosteriorOdds odds = posterior_odds(spec, prior, 3);
    CHECK(odds.p_higher_given_lead >= odds.p_lower_given_lead - 1e-12);
    CHECK(odds.p_higher_given_lead >= 0.5 - 1e-12);
    CHECK(odds.p_higher_given_lead + odds.p_lower_given_lead == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("a prior concentrated on equal qualities makes both posteriors one") {
    auto beta = make_strategy("beta-posterior");
    MarketSpec spec = uniform_market(2, 2, {0.0, 0.0}, beta, 2);
    PriorGrid prior;
    prior.points = {{{0.6, 0.6}, 1.0}};
    prior.symmetric = true;
    PosteriorOdds odds = posterior_odds(spec, prior, 2);
    CHECK(odds.p_higher_given_lead == Catch::Approx(1.0).margin(1e-12));
    CHECK(odds.p_lower_given_lead == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("a zero-probability conditioning event is an error") {
    auto zero = make_strategy("constant", {{"p", 0.0}});
    MarketSpec spec = uniform_market(2, 2, {0.0, 0.0}, zero, 2);
    PriorGrid prior = PriorGrid::symmetric_two_point(0.8, 0.3);
    CHECK_THROWS_AS(posterior_odds(spec, prior, 2), UndefinedPosteriorError);
}

TEST_CASE("prior grids validate weights and symmetry") {
    PriorGrid prior = PriorGrid::symmetric_two_point(0.8, 0.3);
    prior.validate(2);
    CHECK(prior.is_symmetric_in_first_two());
    PriorGrid uniform = PriorGrid::product_uniform(5);
    uniform.validate(2);
    CHECK(uniform.is_symmetric_in_first_two());
    PriorGrid lopsided;
    lopsided.points = {{{0.8, 0.3}, 0.7}, {{0.3, 0.8}, 0.3}};
    CHECK_FALSE(lopsided.is_symmetric_in_first_two());
    PriorGrid bad;
    bad.points = {{{0.5, 0.5}, 0.5}};
    CHECK_THROWS_AS(bad.validate(2), ValidationError);
}

TEST_CASE("monotonicity scans") {
    auto one = make_strategy("constant", {{"p", 1.0}});
    std::vector<double> grid = uniform_grid(0.0, 1.0, 11);
    ScanReport flat = monotonicity_scan(grid, 1e-12, [&](double q) {
        return tail_prob(*one, 3, 2, q);
    });
    CHECK(flat.passed());
    for (const auto& p : flat.points) CHECK(std::fabs(p.adjacent_difference) <= 1e-12);

    auto beta = make_strategy("beta-posterior");
    ScanReport rising = monotonicity_scan(grid, 1e-12, [&](double q) {
        return tail_prob(*beta, 5, 2, q);
    });
    CHECK(rising.passed());
    CHECK(rising.points.size() == 11);

    // an anti-monotone rule: eager after failure, shy after success
    TableStrategy contrarian(
        {{History(), 1.0}, {History::parse("S"), 0.1}, {History::parse("F"), 0.9}}, 0.5);
    ScanReport scan = monotonicity_scan(grid, 1e-12, [&](double q) {
        return tail_prob(contrarian, 3, 2, q);
    });
    bool oracle_monotone = true;
    double prev = -1.0;
    for (double q : grid) {
        double v = oracle_tail(contrarian, 3, 2, q);
        if (v < prev - 1e-12) oracle_monotone = false;
        prev = v;
    }
    CHECK(scan.passed() == oracle_monotone);

    CHECK_THROWS_AS(monotonicity_scan(std::vector<double>{0.5, 0.1}, 1e-12,
                                      [](double q) { return q; }),
                    ValidationError);
}

TEST_CASE("caps bound the enumeration") {
    auto beta = make_strategy("beta-posterior");
    CHECK_THROWS_AS(tail_prob(*beta, 13, 1, 0.5), CapExceededError);
    MarketSpec spec = uniform_market(2, 2, {0.5, 0.5}, beta, 4);
    CHECK_THROWS_AS(lead_probabilities(spec, 4), CapExceededError);  // n*m*t = 16
}
