// mqlab: exact, coupled and simulated analysis of the fixed-price market
// model. Subcommands ingest a market-spec JSON file and emit CSV tables plus
// a JSON summary carrying the run metadata.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mqlab/checks.hpp"
#include "mqlab/counterexample.hpp"
#include "mqlab/coupling.hpp"
#include "mqlab/errors.hpp"
#include "mqlab/exact.hpp"
#include "mqlab/expr.hpp"
#include "mqlab/history.hpp"
#include "mqlab/market.hpp"
#include "mqlab/montecarlo.hpp"
#include "mqlab/report.hpp"
#include "mqlab/spec_io.hpp"
#include "mqlab/strategy.hpp"

namespace {

using nlohmann::json;
using namespace mqlab;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitVerification = 2;
constexpr int kExitCapExceeded = 3;

struct CommonOptions {
    std::string spec_path;
    std::string out_dir = "mqlab_out";
    std::optional<std::uint64_t> seed;
    std::size_t reps = 10000;
    std::string grid = "0:1:0.1";
    bool strict = false;
    bool theorem_mode = false;
    std::optional<std::size_t> customers;
};

std::vector<double> parse_grid(const std::string& text) {
    double lo = 0, hi = 0, step = 0;
    if (std::sscanf(text.c_str(), "%lf:%lf:%lf", &lo, &hi, &step) != 3 || step <= 0 || hi < lo)
        throw ValidationError("grid must be a:b:step with step > 0 and b >= a");
    auto count = static_cast<std::size_t>(std::llround((hi - lo) / step)) + 1;
    std::vector<double> grid;
    grid.reserve(count);
    for (std::size_t i = 0; i < count; ++i) grid.push_back(std::min(lo + step * static_cast<double>(i), hi));
    return grid;
}

std::string metadata_comment(const SpecDocument& doc, std::uint64_t seed) {
    return std::string("mqlab ") + kToolVersion + " spec=" + doc.market.name +
           " digest=" + doc.digest + " seed=" + std::to_string(seed);
}

json metadata_json(const std::string& subcommand, const SpecDocument& doc, std::uint64_t seed) {
    json meta;
    meta["version"] = kToolVersion;
    meta["subcommand"] = subcommand;
    meta["spec_name"] = doc.market.name;
    meta["spec_digest"] = doc.digest;
    meta["seed"] = seed;
    meta["caps"] = {{"history_depth", doc.market.caps.history_depth},
                    {"ensemble_cells", doc.market.caps.ensemble_cells},
                    {"coupling_depth", doc.market.caps.coupling_depth},
                    {"ensemble_coupling_cells", doc.market.caps.ensemble_coupling_cells}};
    return meta;
}

void emit(const std::filesystem::path& path, const std::string& content) {
    write_file_atomic(path, content);
    std::cout << "wrote " << path.string() << "\n";
}

SpecDocument load(const CommonOptions& opt) {
    if (opt.spec_path.empty()) throw ValidationError("--spec is required");
    return load_market_spec(opt.spec_path, opt.customers, opt.strict);
}

/// Verifies theorem hypotheses before a theorem-mode run; exits with a
/// validation failure when they do not hold.
void require_hypotheses(const MarketSpec& spec, bool competitive) {
    HypothesisReport report = check_spec_hypotheses(spec, competitive);
    if (report.all_passed()) return;
    std::cerr << "theorem-mode precondition checks failed:\n";
    for (const auto& item : report.items)
        if (!item.passed)
            std::cerr << "  " << item.strategy << ": " << item.check << " FAILED ("
                      << item.witness << ")\n";
    std::exit(kExitValidation);
}

json ensemble_grid_json(const HistoryEnsemble& e) {
    json customers = json::array();
    for (std::size_t j = 0; j < e.customers(); ++j) {
        json products = json::array();
        for (std::size_t i = 0; i < e.products(); ++i) products.push_back(e.entry(i, j).str());
        customers.push_back(products);
    }
    return customers;
}

int run_enumerate(const CommonOptions& opt, bool emit_distribution) {
    SpecDocument doc = load(opt);
    const MarketSpec& spec = doc.market;
    const std::size_t t = spec.horizon;
    std::uint64_t seed = opt.seed.value_or(spec.seed);

    std::map<ShareVector, double> share_dist;
    KahanSum total;
    for_each_terminal(spec, t, [&](double p, const ShareVector& shares) {
        share_dist[shares] += p;
        total.add(p);
    });

    CsvBuilder shares_csv;
    shares_csv.comment(metadata_comment(doc, seed));
    for (std::size_t i = 0; i < spec.products; ++i) shares_csv.cell("share_" + std::to_string(i + 1));
    shares_csv.cell("probability").end_row();
    for (const auto& [shares, p] : share_dist) {
        for (long long s : shares) shares_csv.cell(s);
        shares_csv.cell(p);
        shares_csv.end_row();
    }

    CsvBuilder tails_csv;
    tails_csv.comment(metadata_comment(doc, seed));
    tails_csv.header({"x", "tail_prob"});
    std::vector<double> dist = aggregate_consumption_distribution(spec, t, 0);
    {
        KahanSum tail;
        std::vector<double> tails(dist.size());
        for (std::size_t x = dist.size(); x-- > 0;) {
            tail.add(dist[x]);
            tails[x] = tail.value();
        }
        for (std::size_t x = 0; x < tails.size(); ++x) {
            tails_csv.cell(x);
            tails_csv.cell(x == 0 ? 1.0 : tails[x]);
            tails_csv.end_row();
        }
    }

    json summary = metadata_json("enumerate", doc, seed);
    summary["horizon"] = t;
    summary["total_mass"] = total.value();
    for (std::size_t i = 0; i < spec.products; ++i) {
        KahanSum mean;
        for (const auto& [shares, p] : share_dist)
            mean.add(p * static_cast<double>(shares[i] - spec.initial_shares[i]));
        summary["expected_consumption"].push_back(mean.value());
    }
    if (spec.products >= 2) {
        LeadProbabilities lp = lead_probabilities(spec, t);
        summary["lead1"] = lp.lead1;
        summary["lead2"] = lp.lead2;
        summary["tie"] = lp.tie;
    }

    std::filesystem::path out(opt.out_dir);
    emit(out / "shares.csv", shares_csv.str());
    emit(out / "tails.csv", tails_csv.str());
    if (emit_distribution) {
        json rows = json::array();
        for_each_ensemble(spec, t, [&](const HistoryEnsemble& e, double p, const ShareVector&) {
            rows.push_back({{"ensemble", ensemble_grid_json(e)}, {"probability", p}});
        });
        json dist = metadata_json("enumerate", doc, seed);
        dist["support"] = std::move(rows);
        emit(out / "distribution.json", dist.dump(2) + "\n");
    }
    emit(out / "summary.json", summary.dump(2) + "\n");
    return kExitOk;
}

int run_scan(const CommonOptions& opt, const std::string& quantity, std::size_t x) {
    SpecDocument doc = load(opt);
    const MarketSpec& spec = doc.market;
    std::uint64_t seed = opt.seed.value_or(spec.seed);
    std::vector<double> grid = parse_grid(opt.grid);
    const std::size_t t = spec.horizon;

    if (opt.theorem_mode) require_hypotheses(spec, false);

    ScanReport report;
    if (quantity == "tail" || quantity == "expectation") {
        const PartialityStrategy& s = spec.strategy(0, 0);
        if (!s.history_only())
            throw ValidationError("tail/expectation scans need a history-only strategy in cell "
                                  "(product 1, customer 1)");
        if (quantity == "tail")
            report = monotonicity_scan(grid, 1e-12, [&](double q) {
                return tail_prob(s, t, x, q, spec.caps.history_depth);
            });
        else
            report = monotonicity_scan(grid, 1e-12, [&](double q) {
                return expected_consumption(s, t, q, spec.caps.history_depth);
            });
    } else if (quantity == "leadership") {
        if (spec.products < 2) throw ValidationError("leadership scan needs two products");
        report = monotonicity_scan(grid, 1e-12, [&](double q1) {
            QualityVector q = spec.qualities;
            q[0] = q1;
            return leadership_prob(spec.with_qualities(q), t);
        });
    } else {
        throw ValidationError("unknown scan quantity '" + quantity + "'");
    }

    CsvBuilder csv;
    csv.comment(metadata_comment(doc, seed));
    csv.header({"grid_value", "quantity", "adjacent_difference", "pass"});
    for (const auto& p : report.points) {
        csv.cell(p.grid_value).cell(p.quantity).cell(p.adjacent_difference).cell(p.pass).end_row();
    }

    json summary = metadata_json("scan", doc, seed);
    summary["quantity"] = quantity;
    summary["x"] = x;
    summary["horizon"] = t;
    summary["tolerance"] = report.tolerance;
    summary["passed"] = report.passed();

    std::filesystem::path out(opt.out_dir);
    emit(out / "scan.csv", csv.str());
    emit(out / "summary.json", summary.dump(2) + "\n");
    if (opt.theorem_mode && !report.passed()) return kExitVerification;
    return kExitOk;
}

int run_couple(const CommonOptions& opt, std::optional<double> q_flag,
               std::optional<double> qprime_flag, std::optional<std::size_t> t_flag) {
    SpecDocument doc = load(opt);
    const MarketSpec& spec = doc.market;
    std::uint64_t seed = opt.seed.value_or(spec.seed);
    std::size_t t = t_flag.value_or(spec.horizon);

    QualityVector q = spec.qualities;
    if (q_flag) q[0] = *q_flag;
    QualityVector qp = q;
    qp[0] = qprime_flag.value_or(std::min(1.0, q[0] + 0.4));

    JointCouplingTable row, col;
    if (spec.customers == 1 && spec.products == 1) {
        row = build_joint(spec.strategies[0], t, q[0], qp[0], CouplingSide::row, spec.caps);
        col = build_joint(spec.strategies[0], t, q[0], qp[0], CouplingSide::column, spec.caps);
    } else {
        MarketSpec base = spec.with_qualities(q);
        row = build_ensemble_joint(base, t, q, qp, CouplingSide::row);
        col = build_ensemble_joint(base, t, q, qp, CouplingSide::column);
    }
    CouplingVerification verification = verify_joint(row, col);

    CsvBuilder csv;
    csv.comment(metadata_comment(doc, seed));
    csv.header({"z", "zprime", "f"});
    for (const auto& e : row.entries) csv.cell(e.z.str()).cell(e.zp.str()).cell(e.f).end_row();

    json summary = metadata_json("couple", doc, seed);
    summary["depth"] = t;
    summary["q"] = q;
    summary["q_prime"] = qp;
    summary["support_size"] = row.entries.size();
    summary["total_mass"] = row.total_mass();
    summary["checks"] = {{"entrywise_equal", verification.entrywise_equal},
                         {"max_entry_diff", verification.max_entry_diff},
                         {"row_marginals_ok", verification.row_marginals_ok},
                         {"max_row_marginal_diff", verification.max_row_marginal_diff},
                         {"column_marginals_ok", verification.column_marginals_ok},
                         {"max_column_marginal_diff", verification.max_column_marginal_diff},
                         {"support_ok", verification.support_ok},
                         {"dominance_ok", verification.dominance_ok},
                         {"factors_ok", verification.factors_ok},
                         {"factor_min", verification.factor_min},
                         {"factor_max", verification.factor_max},
                         {"tail_inequality_ok", verification.tail_inequality_ok},
                         {"passed", verification.passed()}};

    std::filesystem::path out(opt.out_dir);
    emit(out / "coupling.csv", csv.str());
    emit(out / "coupling_report.json", summary.dump(2) + "\n");
    if (opt.theorem_mode && !verification.passed()) return kExitVerification;
    return kExitOk;
}

int run_simulate(const CommonOptions& opt, bool emit_replications) {
    SpecDocument doc = load(opt);
    const MarketSpec& spec = doc.market;
    std::uint64_t seed = opt.seed.value_or(spec.seed);
    const std::size_t t = spec.horizon;

    AgreementReport agreement = agreement_report(spec, t, seed, opt.reps);
    SimulationRun run = simulate_market(spec, t, seed, opt.reps);

    CsvBuilder csv;
    csv.comment(metadata_comment(doc, seed));
    csv.header({"event", "estimate", "std_error", "half_width_99", "exact", "deviation_sigmas",
                "flagged"});
    if (!agreement.skipped) {
        for (const auto& line : agreement.lines) {
            csv.cell(line.event)
                .cell(line.estimate.mean)
                .cell(line.estimate.std_error)
                .cell(line.estimate.half_width_99)
                .cell(line.exact)
                .cell(line.deviation_sigmas)
                .cell(line.flagged)
                .end_row();
        }
    } else {
        // beyond exact caps: emit the estimates alone
        std::vector<std::pair<std::string, Estimate>> rows;
        if (spec.products >= 2) {
            rows.emplace_back("lead1", estimate_event(run, MarketEvent::lead1));
            rows.emplace_back("lead2", estimate_event(run, MarketEvent::lead2));
            rows.emplace_back("tie", estimate_event(run, MarketEvent::tie));
        }
        for (std::size_t x = 1; x <= spec.customers * t; ++x)
            rows.emplace_back(event_name(MarketEvent::tail, x),
                              estimate_event(run, MarketEvent::tail, x));
        for (const auto& [name, est] : rows) {
            csv.cell(name).cell(est.mean).cell(est.std_error).cell(est.half_width_99);
            csv.cell(std::string("")).cell(std::string("")).cell(false).end_row();
        }
    }

    json summary = metadata_json("simulate", doc, seed);
    summary["replications"] = opt.reps;
    summary["horizon"] = t;
    summary["exact_comparison"] = !agreement.skipped;
    if (agreement.skipped) summary["skip_reason"] = agreement.skip_reason;
    summary["any_flagged"] = agreement.any_flagged();

    std::filesystem::path out(opt.out_dir);
    emit(out / "estimates.csv", csv.str());
    if (emit_replications) {
        CsvBuilder reps_csv;
        reps_csv.comment(metadata_comment(doc, seed));
        reps_csv.cell(std::string("replication"));
        for (std::size_t i = 0; i < spec.products; ++i)
            reps_csv.cell("share_" + std::to_string(i + 1));
        reps_csv.end_row();
        for (std::size_t r = 0; r < run.terminal_shares.size(); ++r) {
            reps_csv.cell(r);
            for (long long s : run.terminal_shares[r]) reps_csv.cell(s);
            reps_csv.end_row();
        }
        emit(out / "replications.csv", reps_csv.str());
    }
    emit(out / "summary.json", summary.dump(2) + "\n");
    return kExitOk;
}

int run_infer(const CommonOptions& opt) {
    SpecDocument doc = load(opt);
    const MarketSpec& spec = doc.market;
    std::uint64_t seed = opt.seed.value_or(spec.seed);
    const std::size_t t = spec.horizon;
    if (!doc.prior) throw ValidationError("infer needs a prior in the spec file");
    if (opt.theorem_mode) {
        require_hypotheses(spec, false);
        if (!doc.prior->is_symmetric_in_first_two())
            throw ValidationError("theorem-mode inference needs a symmetric prior");
        if (!spec.anonymous_declared)
            throw ValidationError("theorem-mode inference needs anonymous products "
                                  "(set \"anonymous\": true and matching strategies)");
    }

    PosteriorOdds odds = posterior_odds(spec, *doc.prior, t);

    CsvBuilder csv;
    csv.comment(metadata_comment(doc, seed));
    csv.header({"q1", "q2", "weight", "lead_prob", "joint_mass"});
    for (const auto& point : doc.prior->points) {
        double lead = leadership_prob(spec.with_qualities(point.qualities), t);
        csv.cell(point.qualities[0])
            .cell(point.qualities[1])
            .cell(point.weight)
            .cell(lead)
            .cell(point.weight * lead)
            .end_row();
    }

    json summary = metadata_json("infer", doc, seed);
    summary["horizon"] = t;
    summary["p_higher_given_lead"] = odds.p_higher_given_lead;
    summary["p_lower_given_lead"] = odds.p_lower_given_lead;
    summary["inference_holds"] = odds.p_higher_given_lead >= odds.p_lower_given_lead - 1e-12;

    std::filesystem::path out(opt.out_dir);
    emit(out / "posterior.csv", csv.str());
    emit(out / "summary.json", summary.dump(2) + "\n");
    if (opt.theorem_mode && !(odds.p_higher_given_lead >= odds.p_lower_given_lead - 1e-12))
        return kExitVerification;
    return kExitOk;
}

int run_counterexample(const CommonOptions& opt, double q1, double q2, std::size_t rounds,
                       std::size_t min_customers, std::size_t max_customers) {
    std::vector<ElitistScanRow> rows =
        elitist_reversal_table(q1, q2, rounds, min_customers, max_customers);

    CsvBuilder csv;
    csv.comment(std::string("mqlab ") + kToolVersion + " counterexample q1=" + format_double(q1) +
                " q2=" + format_double(q2));
    csv.header({"customers", "round", "lead1", "lead2", "tie", "reversed"});
    for (const auto& r : rows) {
        csv.cell(r.customers).cell(r.round).cell(r.lead1).cell(r.lead2).cell(r.tie).cell(r.reversed).end_row();
    }

    json summary;
    summary["version"] = kToolVersion;
    summary["subcommand"] = "counterexample";
    summary["q1"] = q1;
    summary["q2"] = q2;
    summary["rounds"] = rounds;
    summary["round2_lead1_closed_form"] = q1 * (1.0 - q2);
    auto minimal = minimal_reversal_customers(q1, q2, rounds, max_customers);
    if (minimal) summary["minimal_reversal_customers"] = *minimal;
    else summary["minimal_reversal_customers"] = nullptr;

    std::filesystem::path out(opt.out_dir);
    emit(out / "reversal.csv", csv.str());
    emit(out / "summary.json", summary.dump(2) + "\n");
    return kExitOk;
}

int run_check(const CommonOptions& opt, std::size_t depth, long long share_bound, bool competitive) {
    SpecDocument doc = load(opt);
    const MarketSpec& spec = doc.market;
    std::uint64_t seed = opt.seed.value_or(spec.seed);

    CsvBuilder csv;
    csv.comment(metadata_comment(doc, seed));
    csv.header({"strategy", "check", "passed", "pairs_checked", "witness"});

    json items = json::array();
    std::set<const PartialityStrategy*> seen;
    std::vector<ShareVector> share_set = share_grid(spec.products, std::min<long long>(share_bound, 2));
    auto record = [&](const std::string& who, const std::string& what, const CheckReport& r) {
        std::string witness = spec_io_detail::violation_text(r);
        csv.cell(who).cell(what).cell(r.passed()).cell(static_cast<std::size_t>(r.pairs_checked))
            .cell(witness).end_row();
        items.push_back({{"strategy", who},
                         {"check", what},
                         {"passed", r.passed()},
                         {"pairs_checked", r.pairs_checked},
                         {"witness", witness}});
    };
    for (const auto& s : spec.strategies) {
        if (!seen.insert(s.get()).second) continue;
        record(s->describe(), "monotone", check_monotone(*s, depth, share_set));
        record(s->describe(), "weak-herding",
               check_weak_herding(*s, false, depth, share_bound, spec.products));
        record(s->describe(), "competitive-weak-herding",
               check_weak_herding(*s, true, depth, share_bound, spec.products));
    }
    if (spec.anonymous_declared && spec.products >= 2)
        for (std::size_t j = 0; j < spec.customers; ++j)
            record("customer " + std::to_string(j + 1), "anonymous",
                   check_anonymous(spec.strategy(0, j), spec.strategy(1, j), depth, share_bound,
                                   spec.products));
    // expression strategies: count guarded evaluations (clamps, division by
    // zero, missing shares) over the same sweep
    seen.clear();
    for (const auto& s : spec.strategies) {
        if (!seen.insert(s.get()).second) continue;
        const auto* expr = dynamic_cast<const ExprStrategy*>(s.get());
        if (!expr) continue;
        std::uint64_t guards = 0, clamps = 0, evaluations = 0;
        for (std::size_t d = 0; d <= depth; ++d)
            for (const History& h : enumerate_histories(d))
                for (const ShareVector& shares : share_grid(spec.products, share_bound))
                    for (std::size_t i = 0; i < spec.products; ++i) {
                        std::vector<std::string> warnings;
                        EvalOptions options;
                        options.warnings = &warnings;
                        ExprContext ctx{&h, &shares, i};
                        double v = expr->expr().evaluate(ctx, options);
                        ++evaluations;
                        guards += warnings.size();
                        if (v < 0.0 || v > 1.0) ++clamps;
                    }
        std::string witness;
        if (guards || clamps)
            witness = std::to_string(guards) + " guarded, " + std::to_string(clamps) +
                      " clamped of " + std::to_string(evaluations);
        csv.cell(s->describe()).cell("expression-guards").cell(guards == 0 && clamps == 0)
            .cell(static_cast<std::size_t>(evaluations)).cell(witness).end_row();
        items.push_back({{"strategy", s->describe()},
                         {"check", "expression-guards"},
                         {"passed", guards == 0 && clamps == 0},
                         {"pairs_checked", evaluations},
                         {"witness", witness}});
    }
    if (competitive && spec.products > 2)
        throw UnsupportedConfigError("competitive weak herding is only supported for two products");

    json summary = metadata_json("check", doc, seed);
    summary["depth"] = depth;
    summary["share_bound"] = share_bound;
    summary["items"] = items;

    std::filesystem::path out(opt.out_dir);
    emit(out / "checks.csv", csv.str());
    emit(out / "summary.json", summary.dump(2) + "\n");
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fixed-price market model workbench"};
    app.require_subcommand(1);

    CommonOptions opt;
    std::string quantity = "tail";
    std::size_t scan_x = 1;
    std::optional<double> couple_q, couple_qprime;
    std::optional<std::size_t> couple_t;
    bool emit_replications = false;
    double ce_q1 = 0.8, ce_q2 = 0.3;
    std::size_t ce_rounds = 3, ce_min_n = 2, ce_max_n = 12;
    std::size_t check_depth = 5;
    long long check_share_bound = 4;
    bool check_competitive = false;

    auto add_common = [&](CLI::App* cmd, bool needs_spec = true) {
        if (needs_spec) cmd->add_option("--spec", opt.spec_path, "market spec JSON file");
        cmd->add_option("--out", opt.out_dir, "output directory");
        cmd->add_option("--seed", opt.seed, "seed override");
        cmd->add_option("--reps", opt.reps, "Monte Carlo replications");
        cmd->add_option("--grid", opt.grid, "quality grid a:b:step");
        cmd->add_option("--customers", opt.customers, "customer count override");
        cmd->add_flag("--strict", opt.strict, "strict expression evaluation");
        cmd->add_flag("--theorem-mode", opt.theorem_mode,
                      "verify theorem hypotheses first; nonzero exit on failed verification");
    };

    bool emit_distribution = false;
    CLI::App* enumerate = app.add_subcommand("enumerate", "exact ensemble distribution and tails");
    add_common(enumerate);
    enumerate->add_flag("--emit-distribution", emit_distribution,
                        "write the full ensemble distribution as JSON");
    CLI::App* scan = app.add_subcommand("scan", "quality monotonicity scan");
    add_common(scan);
    scan->add_option("--quantity", quantity, "tail | expectation | leadership");
    scan->add_option("--x", scan_x, "tail threshold");
    CLI::App* couple = app.add_subcommand("couple", "build and verify coupling tables");
    add_common(couple);
    couple->add_option("--q", couple_q, "base quality of product 1");
    couple->add_option("--qprime", couple_qprime, "raised quality of product 1");
    couple->add_option("--t", couple_t, "coupling depth (default: spec horizon)");
    CLI::App* simulate = app.add_subcommand("simulate", "seeded Monte Carlo with exact cross-check");
    add_common(simulate);
    simulate->add_flag("--emit-replications", emit_replications, "write per-replication shares");
    CLI::App* infer = app.add_subcommand("infer", "posterior odds over the spec's prior");
    add_common(infer);
    CLI::App* counterexample =
        app.add_subcommand("counterexample", "elitist market reversal table");
    add_common(counterexample, false);
    counterexample->add_option("--q1", ce_q1, "quality of product 1 (better)");
    counterexample->add_option("--q2", ce_q2, "quality of product 2");
    counterexample->add_option("--rounds", ce_rounds, "rounds to tabulate");
    counterexample->add_option("--min-customers", ce_min_n, "first customer count");
    counterexample->add_option("--max-customers", ce_max_n, "last customer count");
    CLI::App* check = app.add_subcommand("check", "strategy property reports");
    add_common(check);
    check->add_option("--depth", check_depth, "history depth for the checkers");
    check->add_option("--share-bound", check_share_bound, "share grid bound");
    check->add_flag("--competitive", check_competitive, "reject competitive mode beyond two products");

    CLI11_PARSE(app, argc, argv);

    try {
        if (enumerate->parsed()) return run_enumerate(opt, emit_distribution);
        if (scan->parsed()) return run_scan(opt, quantity, scan_x);
        if (couple->parsed()) return run_couple(opt, couple_q, couple_qprime, couple_t);
        if (simulate->parsed()) return run_simulate(opt, emit_replications);
        if (infer->parsed()) return run_infer(opt);
        if (counterexample->parsed())
            return run_counterexample(opt, ce_q1, ce_q2, ce_rounds, ce_min_n, ce_max_n);
        if (check->parsed()) return run_check(opt, check_depth, check_share_bound, check_competitive);
    } catch (const CapExceededError& err) {
        std::cerr << "cap exceeded: " << err.what() << "\n";
        return kExitCapExceeded;
    } catch (const UnsupportedConfigError& err) {
        std::cerr << "unsupported configuration: " << err.what() << "\n";
        return kExitValidation;
    } catch (const ValidationError& err) {
        std::cerr << "validation error: " << err.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kExitValidation;
    }
    return kExitOk;
}
