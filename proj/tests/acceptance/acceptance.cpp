// One PASS/FAIL line per acceptance criterion, plus INFO lines with the
// numbers behind them. Exit status is non-zero when any criterion fails.
//
//   rcdet_acceptance [name...]    run only the named criteria

#include "fixtures.hpp"
#include "oracles.hpp"

#include "rcdet/eval.hpp"
#include "rcdet/synth.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

using namespace rcdet;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    std::string name;
    std::function<Outcome()> run;
};

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string num(double v, const char* f = "%.3g")
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

void info(const std::string& line) { std::cout << "INFO  " << line << "\n" << std::flush; }

// --- gradients -------------------------------------------------------------

Outcome gradient_correctness()
{
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    std::size_t entries = 0, instances = 0;
    std::string where;
    const std::vector<LossConfig> losses = {{LossKind::focal, 0.25, 2.0, 1.0}, {LossKind::bce, 0.25, 2.0, 1.0},
                                            {LossKind::bce_weighted, 0.25, 2.0, 2.0}};
    for (auto kind : {DecompositionKind::basis, DecompositionKind::block}) {
        for (int layers = 1; layers <= 3; ++layers) {
            const std::string label = std::string(to_string(kind)) + " L=" + std::to_string(layers);
            for (std::uint64_t seed = 0; seed < 5; ++seed) {
                const auto r = oracle::rgcn_gradient_check(kind, layers, 1000 * seed + static_cast<std::uint64_t>(layers));
                ++instances;
                entries += r.checked;
                if (r.worst > worst) {
                    worst = r.worst;
                    where = label + " rgcn " + r.where;
                }
            }
            for (const auto& loss : losses) {
                const auto r = oracle::ranker_gradient_check(kind, layers, loss, 77 + static_cast<std::uint64_t>(layers));
                ++instances;
                entries += r.checked;
                if (r.worst > worst) {
                    worst = r.worst;
                    where = label + " end-to-end " + std::string(to_string(loss.kind)) + " " + r.where;
                }
            }
        }
    }
    const double t = seconds_since(t0);
    return {worst < 1e-4 && t < 60.0,
            std::to_string(instances) + " instances, " + std::to_string(entries) + " entries, worst relative error "
                + num(worst) + " (" + where + "), " + num(t, "%.1f") + " s"};
}

// --- dense oracle ----------------------------------------------------------

Outcome rgcn_oracle()
{
    Rng rng(2718);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        ModelConfig c;
        const auto kind = rng.below(2) ? DecompositionKind::block : DecompositionKind::basis;
        c.layers = 1 + static_cast<int>(rng.below(3));
        c.num_blocks = 1 + static_cast<int>(rng.below(3));
        c.num_bases = 1 + static_cast<int>(rng.below(6));
        c.input_dim = c.num_blocks * (1 + static_cast<int>(rng.below(4)));
        c.hidden_dim = c.num_blocks * (1 + static_cast<int>(rng.below(4)));
        c.decompositions.assign(static_cast<std::size_t>(c.layers), kind);
        const auto model = init_model(c, rng);
        const int n = 1 + static_cast<int>(rng.below(10));
        const Eigen::MatrixXd x = oracle::random_matrix(n, c.input_dim, rng, 2.0);
        const auto edges = oracle::random_relation_edges(n, static_cast<int>(rng.below(4 * static_cast<std::uint64_t>(n) + 1)), rng);
        const auto fast = model_forward(model, x, make_operator(static_cast<std::size_t>(n), edges));
        const auto slow = oracle::dense_forward(model, x, edges);
        worst = std::max(worst, (fast - slow).cwiseAbs().maxCoeff());
    }
    return {worst <= 1e-6, "100 instances, max |difference| " + num(worst)};
}

// --- lifting ---------------------------------------------------------------

Outcome lifting_oracle()
{
    std::size_t compared = 0, mismatches = 0, largest = 0;
    for (const auto& c : fixture::corpus()) {
        largest = std::max(largest, extract_nodes(c).deleted.size() + extract_nodes(c).added.size());
        const auto g = build_graph(c);
        for (const auto& f : c.files) {
            for (auto version : {Version::old_version, Version::new_version}) {
                std::set<int> changed;
                for (const auto& n : g.nodes) {
                    if (n.path == f.path && n.version == version) changed.insert(n.line_no);
                }
                const auto& src = version == Version::old_version ? f.old_source : f.new_source;
                for (const auto& rel : build_relation_graphs(src, version)) {
                    const auto got = lift_edges(rel, changed);
                    const std::set<std::pair<int, int>> got_set(got.begin(), got.end());
                    ++compared;
                    if (got_set != oracle::lifted_by_enumeration(rel, changed) || got_set.size() != got.size()) ++mismatches;
                }
            }
        }
    }
    return {mismatches == 0 && largest <= 12,
            std::to_string(compared) + " relation graphs over 6 fixture commits (largest " + std::to_string(largest)
                + " changed nodes), " + std::to_string(mismatches) + " mismatches"};
}

// --- conversion ------------------------------------------------------------

Outcome conversion_invariants()
{
    Rng rng(31337);
    std::size_t failures = 0;
    std::string first;
    for (int i = 0; i < 1000; ++i) {
        const auto g = oracle::random_hetero_graph(rng, 14);
        const auto store = oracle::random_feature_store(g, rng);
        const bool fill = rng.below(2) == 1;
        std::string why;
        try {
            if (fill) {
                FeatureStore filled{fill_missing(store.node_types), fill_missing(store.edge_types)};
                why = oracle::conversion_mismatch(g, filled, to_homogeneous(g, store, {.fill_missing = true}));
            } else {
                why = oracle::conversion_mismatch(g, store, to_homogeneous(g, store));
            }
        } catch (const std::exception& e) {
            why = e.what();
        }
        if (!why.empty() && failures++ == 0) first = "graph " + std::to_string(i) + ": " + why;
    }

    // Dummy rules: float -> NaN, boolean -> false, integer -> -1, text -> error.
    std::vector<TypeFeatures> types = {
        {"deleted", 2,
         {{"f", FeatureColumn::floats(2, {1, 2, 3, 4})},
          {"b", FeatureColumn::booleans(1, {1, 1})},
          {"i", FeatureColumn::integers(3, {1, 2, 3, 4, 5, 6})}}},
        {"added", 3, {}},
    };
    const auto filled = fill_missing(types);
    const auto& fv = std::get<std::vector<float>>(filled[1].columns.at("f").data);
    bool dummies = fv.size() == 6 && std::all_of(fv.begin(), fv.end(), [](float v) { return std::isnan(v); });
    dummies = dummies && std::get<std::vector<std::uint8_t>>(filled[1].columns.at("b").data) == std::vector<std::uint8_t>(3, 0);
    dummies = dummies && std::get<std::vector<std::int64_t>>(filled[1].columns.at("i").data) == std::vector<std::int64_t>(9, -1);
    types[0].columns.emplace("t", FeatureColumn::texts({"x", "y"}));
    bool text_rejected = false;
    try {
        fill_missing(types);
    } catch (const Error&) {
        text_rejected = true;
    }
    return {failures == 0 && dummies && text_rejected,
            "1000 random graphs, " + std::to_string(failures) + " failures" + (first.empty() ? "" : " (" + first + ")")
                + "; dummy rules " + (dummies && text_rejected ? "ok" : "WRONG")};
}

// --- losses ----------------------------------------------------------------

Outcome loss_identities()
{
    double worst_focal = 0.0, worst_sum = 0.0;
    for (int k = 0; k <= 2000; ++k) {
        // log-spaced towards both ends of [1e-6, 1 - 1e-6]
        const double u = -6.0 + 6.0 * k / 2000.0;
        for (double p : {std::pow(10.0, u), 1.0 - std::pow(10.0, u)}) {
            if (p < 1e-6 || p > 1.0 - 1e-6) continue;
            for (int t : {0, 1}) worst_focal = std::max(worst_focal, std::abs(focal_loss(p, t, 1.0, 0.0) - bce_loss(p, t)));
        }
    }
    Rng rng(99);
    for (int i = 0; i < 100000; ++i) {
        const double a = rng.uniform(-500, 500), b = rng.uniform(-500, 500);
        worst_sum = std::max(worst_sum, std::abs(pair_probability(a, b) + pair_probability(b, a) - 1.0));
    }
    std::size_t order_changes = 0;
    for (int i = 0; i < 2000; ++i) {
        std::vector<RankedLine> lines;
        const int n = 1 + static_cast<int>(rng.below(15));
        for (int j = 0; j < n; ++j) {
            lines.push_back({"F" + std::to_string(rng.below(3)) + ".java", 1 + static_cast<int>(rng.below(30)),
                             static_cast<double>(rng.below(5)) / 4.0, rng.below(4) == 0});
        }
        auto shifted = lines;
        const double c = std::ldexp(static_cast<double>(rng.below(4096)) - 2048.0, -4); // exact in binary
        for (auto& l : shifted) l.score += c;
        const auto a = rank_lines("x", lines), b = rank_lines("x", shifted);
        for (std::size_t j = 0; j < a.lines.size(); ++j) {
            if (a.lines[j].line_no != b.lines[j].line_no || a.lines[j].path != b.lines[j].path) {
                ++order_changes;
                break;
            }
        }
    }
    return {worst_focal <= 1e-12 && worst_sum <= 1e-15 && order_changes == 0,
            "max |focal - bce| " + num(worst_focal) + ", max |P_ij + P_ji - 1| " + num(worst_sum) + ", "
                + std::to_string(order_changes) + " of 2000 rankings changed under a score shift"};
}

// --- synthetic end to end --------------------------------------------------

MetricsReport timed_cv(const std::vector<CommitRecord>& records, const RunConfig& c, double& secs)
{
    const auto t0 = std::chrono::steady_clock::now();
    auto r = cross_validate(records, c);
    secs = seconds_since(t0);
    return r;
}

std::string metrics_line(const Metrics& m)
{
    return "Recall@1 " + num(m.recall[0], "%.3f") + ", Recall@2 " + num(m.recall[1], "%.3f") + ", Recall@3 "
           + num(m.recall[2], "%.3f") + ", MFR " + num(m.mfr, "%.3f");
}

Outcome synthetic_end_to_end()
{
    const auto records = synth_corpus(SynthConfig{});
    RunConfig config;
    config.k = 5;
    double t1 = 0, t2 = 0;
    const auto a = timed_cv(records, config, t1);
    for (const auto& f : a.folds) info("  fold " + std::to_string(f.fold) + ": " + metrics_line(f.metrics));
    info("  pooled: " + metrics_line(a.pooled) + " over " + std::to_string(a.pooled.n_r) + " commits; " + num(t1, "%.1f") + " s");
    const auto b = timed_cv(records, config, t2);
    const bool deterministic = render_report(a, ReportFormat::json) == render_report(b, ReportFormat::json);

    RunConfig tie = config;
    tie.train.lr = 0.0;
    tie.train.epochs = 1;
    double t3 = 0;
    info("  reference, untrained (tie order only): " + metrics_line(timed_cv(records, tie, t3).pooled));
    for (double lr : {5e-5, 1e-3}) {
        RunConfig c = config;
        c.train.lr = lr;
        double t = 0;
        info("  sensitivity, lr " + num(lr, "%g") + ": " + metrics_line(timed_cv(records, c, t).pooled));
    }

    const bool ok = a.pooled.recall[0] >= 0.90 && a.pooled.mfr <= 1.3 && t1 < 300.0 && deterministic && a.audit_ok;
    return {ok, "200 commits, k=5, default config: " + metrics_line(a.pooled) + " (need Recall@1 >= 0.90, MFR <= 1.3); "
                    + num(t1, "%.1f") + " s; " + (deterministic ? "deterministic" : "NOT deterministic")};
}

// --- sweep -----------------------------------------------------------------

Outcome sweep_plumbing()
{
    const auto records = synth_corpus({60, 4, 7});
    RunConfig config;
    config.k = 5;
    const auto t0 = std::chrono::steady_clock::now();
    const auto rows = sweep(records, config);
    const auto csv = render_sweep_csv(rows);
    std::istringstream lines(csv);
    std::string line;
    while (std::getline(lines, line)) info("  " + line);
    std::vector<const SweepRow*> order;
    for (const auto& r : rows) order.push_back(&r);
    std::stable_sort(order.begin(), order.end(),
                     [](const SweepRow* a, const SweepRow* b) { return a->report.pooled.recall[0] > b->report.pooled.recall[0]; });
    std::string ranking;
    for (const auto* r : order) {
        if (!ranking.empty()) ranking += " > ";
        ranking += r->report.method;
    }
    info("  Recall@1 order: " + ranking);
    const auto newlines = std::count(csv.begin(), csv.end(), '\n');
    return {rows.size() == 12 && newlines == 13,
            std::to_string(rows.size()) + " rows over a 60-commit corpus, k=5, " + num(seconds_since(t0), "%.1f") + " s"};
}

// --- metrics ---------------------------------------------------------------

Outcome metric_oracles()
{
    using R = std::vector<std::size_t>;
    bool ok = recall_at_n(R{1, 2, 1, 5}, 1) == 0.5 && recall_at_n(R{1, 2, 1, 5}, 2) == 0.75;
    ok = ok && mean_first_rank(R{1, 2, 1, 5}) == 2.25 && mean_first_rank(R{1, 3, 2}) == 2.0;
    ok = ok && mean_first_rank(R{1, 1, 1}) == 1.0;
    for (int n = 1; n <= 3; ++n) ok = ok && recall_at_n(R{1, 1, 1}, n) == 1.0;
    bool empty_rejected = false;
    try {
        recall_at_n(R{}, 1);
    } catch (const Error&) {
        empty_rejected = true;
    }
    MetricsReport report;
    report.method = "rc-detection";
    report.pooled.n_r = 1;
    report.pooled.recall = {0.811, 0.884, 0.924};
    report.pooled.mfr = 1.830;
    report.folds.push_back({1, report.pooled, 0, {}, {}, {}, {}});
    const auto csv = render_report(report, ReportFormat::csv);
    const bool row = csv.find(",0.811,0.884,0.924,1.830\n") != std::string::npos;
    return {ok && empty_rejected && row, std::string("hand values ") + (ok ? "match" : "DIFFER") + "; row "
                                             + (row ? "0.811,0.884,0.924,1.830" : "WRONG")};
}

} // namespace

int main(int argc, char** argv)
{
    const std::vector<Criterion> criteria = {
        {"gradient-correctness", gradient_correctness},
        {"rgcn-oracle-equivalence", rgcn_oracle},
        {"graph-lifting-oracle", lifting_oracle},
        {"conversion-invariants", conversion_invariants},
        {"loss-identities", loss_identities},
        {"synthetic-end-to-end", synthetic_end_to_end},
        {"configuration-sweep", sweep_plumbing},
        {"metric-oracles", metric_oracles},
    };
    std::set<std::string> only(argv + 1, argv + argc);
    int failed = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && !only.count(c.name)) continue;
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS  " : "FAIL  ") << c.name << ": " << o.detail << "\n" << std::flush;
    }
    return failed == 0 ? 0 : 1;
}
