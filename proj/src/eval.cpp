#include "rcdet/eval.hpp"

#include "rcdet/diffgraph.hpp"
#include "rcdet/util.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace rcdet {

double recall_at_n(const std::vector<std::size_t>& ranks, int n)
{
    if (ranks.empty()) throw Error("recall_at_n: no evaluated commits");
    if (n < 1) throw Error("recall_at_n: N must be >= 1");
    std::size_t hits = 0;
    for (auto r : ranks) hits += r <= static_cast<std::size_t>(n) ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

double mean_first_rank(const std::vector<std::size_t>& ranks)
{
    if (ranks.empty()) throw Error("mean_first_rank: no evaluated commits");
    double sum = 0.0;
    for (auto r : ranks) sum += static_cast<double>(r);
    return sum / static_cast<double>(ranks.size());
}

std::vector<std::size_t> first_ranks(const std::vector<Ranking>& rankings)
{
    std::vector<std::size_t> out;
    for (const auto& r : rankings) {
        if (r.first_rank) out.push_back(*r.first_rank);
    }
    return out;
}

double recall_at_n(const std::vector<Ranking>& rankings, int n)
{
    return recall_at_n(first_ranks(rankings), n);
}

double mean_first_rank(const std::vector<Ranking>& rankings)
{
    return mean_first_rank(first_ranks(rankings));
}

Metrics compute_metrics(const std::vector<Ranking>& rankings)
{
    const auto ranks = first_ranks(rankings);
    Metrics m;
    m.n_r = ranks.size();
    if (ranks.empty()) return m;
    for (int n = 1; n <= kReportedRanks; ++n) {
        m.n_at[static_cast<std::size_t>(n - 1)] =
            static_cast<std::size_t>(std::count_if(ranks.begin(), ranks.end(), [n](std::size_t r) { return r <= static_cast<std::size_t>(n); }));
        m.recall[static_cast<std::size_t>(n - 1)] = recall_at_n(ranks, n);
    }
    m.mfr = mean_first_rank(ranks);
    return m;
}

namespace {

// Runs fn(0..count-1) on up to `jobs` threads; the first exception wins.
template <typename Fn>
void parallel_for(std::size_t count, int jobs, Fn fn)
{
    const auto workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, jobs)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i; (i = next.fetch_add(1)) < count;) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    next = count;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

std::uint64_t fold_seed(std::uint64_t seed, int fold)
{
    return mix64(seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(fold + 1)));
}

} // namespace

std::vector<Sample> build_samples(const std::vector<CommitRecord>& records, const RunConfig& config)
{
    const auto embedder = make_embedder(config);
    const ConversionOptions options{config.fill_missing};
    std::vector<Sample> samples(records.size());
    parallel_for(records.size(), config.jobs, [&](std::size_t i) {
        samples[i] = make_sample(build_graph(records[i]), *embedder, options);
    });
    return samples;
}

MetricsReport cross_validate(const std::vector<CommitRecord>& records, const RunConfig& config)
{
    config.validate();
    const auto folds = split_folds(records, config.k, config.seed);
    const auto samples = build_samples(records, config);

    MetricsReport report;
    report.method = config.method;
    report.k = config.k;
    report.seed = config.seed;
    report.folds.resize(static_cast<std::size_t>(config.k));

    parallel_for(static_cast<std::size_t>(config.k), config.jobs, [&](std::size_t f) {
        const int fold = static_cast<int>(f);
        auto& result = report.folds[f];
        result.fold = fold + 1;
        std::vector<Sample> train_set;
        std::vector<const Sample*> test_set;
        for (std::size_t i = 0; i < records.size(); ++i) {
            if (folds.assignment.at(records[i].commit_id) == fold) {
                test_set.push_back(&samples[i]);
                result.test_ids.push_back(records[i].commit_id);
            } else {
                train_set.push_back(samples[i]);
                result.train_ids.push_back(records[i].commit_id);
            }
        }
        const auto seed = fold_seed(config.seed, fold);
        Ranker ranker = init_ranker(config.model, seed);
        TrainConfig tc = config.train;
        tc.seed = seed;
        try {
            result.history = train(ranker, train_set, tc, config.loss).history;
        } catch (const Error& e) {
            throw Error("fold " + std::to_string(fold + 1) + ": " + e.what());
        }
        for (const auto* s : test_set) {
            if (s->deleted() == 0) continue;
            result.rankings.push_back(rank_deletions(ranker, *s));
            if (!result.rankings.back().first_rank) ++result.unlabeled;
        }
        if (first_ranks(result.rankings).empty()) {
            throw Error("fold " + std::to_string(fold + 1) + " has no evaluable commit (no test commit with a root-cause label)");
        }
        result.metrics = compute_metrics(result.rankings);
    });

    std::vector<Ranking> pooled;
    std::set<std::string> tested;
    report.audit_ok = true;
    for (const auto& f : report.folds) {
        pooled.insert(pooled.end(), f.rankings.begin(), f.rankings.end());
        report.unlabeled += f.unlabeled;
        const std::set<std::string> train_ids(f.train_ids.begin(), f.train_ids.end());
        for (const auto& id : f.test_ids) {
            if (train_ids.count(id) || !tested.insert(id).second) report.audit_ok = false;
        }
        for (int n = 0; n < kReportedRanks; ++n) report.macro_recall[static_cast<std::size_t>(n)] += f.metrics.recall[static_cast<std::size_t>(n)] / config.k;
        report.macro_mfr += f.metrics.mfr / config.k;
    }
    if (tested.size() != records.size()) report.audit_ok = false;
    report.pooled = compute_metrics(pooled);
    return report;
}

ReportFormat report_format_from_string(std::string_view name)
{
    if (name == "text") return ReportFormat::text;
    if (name == "csv") return ReportFormat::csv;
    if (name == "json") return ReportFormat::json;
    throw Error("unknown format '" + std::string(name) + "' (expected text, csv or json)");
}

namespace {

using nlohmann::json;

std::string f3(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

std::string csv_row(const std::string& method, const std::string& fold, const Metrics& m)
{
    return method + "," + fold + "," + f3(m.recall[0]) + "," + f3(m.recall[1]) + "," + f3(m.recall[2]) + "," + f3(m.mfr) + "\n";
}

std::string text_row(const std::string& label, std::size_t n_r, const std::array<double, kReportedRanks>& r, double mfr)
{
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-8s %6zu %9s %9s %9s %7s\n", label.c_str(), n_r, f3(r[0]).c_str(), f3(r[1]).c_str(),
                  f3(r[2]).c_str(), f3(mfr).c_str());
    return buf;
}

json metrics_json(const Metrics& m)
{
    return {{"n_R", m.n_r}, {"n_N", m.n_at}, {"recall", m.recall}, {"mfr", m.mfr}};
}

Metrics metrics_from(const json& j)
{
    Metrics m;
    m.n_r = j.at("n_R").get<std::size_t>();
    m.n_at = j.at("n_N").get<std::array<std::size_t, kReportedRanks>>();
    m.recall = j.at("recall").get<std::array<double, kReportedRanks>>();
    m.mfr = j.at("mfr").get<double>();
    return m;
}

} // namespace

std::string render_report(const MetricsReport& report, ReportFormat format)
{
    if (report.folds.empty()) throw Error("render_report: report has no folds");
    if (format == ReportFormat::csv) {
        std::string out = "method,fold,recall1,recall2,recall3,mfr\n";
        for (const auto& f : report.folds) out += csv_row(report.method, std::to_string(f.fold), f.metrics);
        out += csv_row(report.method, "pooled", report.pooled);
        return out;
    }
    if (format == ReportFormat::text) {
        std::ostringstream out;
        out << "method " << report.method << ", k=" << report.k << ", seed=" << report.seed << "\n";
        char head[128];
        std::snprintf(head, sizeof head, "%-8s %6s %9s %9s %9s %7s\n", "fold", "n_R", "Recall@1", "Recall@2", "Recall@3", "MFR");
        out << head;
        for (const auto& f : report.folds) out << text_row(std::to_string(f.fold), f.metrics.n_r, f.metrics.recall, f.metrics.mfr);
        out << text_row("pooled", report.pooled.n_r, report.pooled.recall, report.pooled.mfr);
        out << text_row("macro", report.pooled.n_r, report.macro_recall, report.macro_mfr);
        out << "unlabeled commits excluded: " << report.unlabeled << "\n";
        out << "fold audit: " << (report.audit_ok ? "ok" : "FAILED") << "\n";
        return out.str();
    }
    json folds = json::array();
    for (const auto& f : report.folds) {
        json ranks = json::object();
        for (const auto& r : f.rankings) ranks[r.commit_id] = r.first_rank ? json(*r.first_rank) : json(nullptr);
        json history = json::array();
        for (const auto& e : f.history) history.push_back({e.epoch, e.mean_loss, e.mean_probability});
        folds.push_back({{"fold", f.fold},
                         {"metrics", metrics_json(f.metrics)},
                         {"unlabeled", f.unlabeled},
                         {"test", f.test_ids},
                         {"train", f.train_ids},
                         {"first_ranks", std::move(ranks)},
                         {"history", std::move(history)}});
    }
    json j = {{"method", report.method},
              {"k", report.k},
              {"seed", report.seed},
              {"pooled", metrics_json(report.pooled)},
              {"macro", {{"recall", report.macro_recall}, {"mfr", report.macro_mfr}}},
              {"unlabeled", report.unlabeled},
              {"audit_ok", report.audit_ok},
              {"folds", std::move(folds)}};
    return j.dump(1) + "\n";
}

MetricsReport report_from_json(const std::string& text)
{
    try {
        const auto j = json::parse(text);
        MetricsReport r;
        r.method = j.at("method").get<std::string>();
        r.k = j.at("k").get<int>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.pooled = metrics_from(j.at("pooled"));
        r.macro_recall = j.at("macro").at("recall").get<std::array<double, kReportedRanks>>();
        r.macro_mfr = j.at("macro").at("mfr").get<double>();
        r.unlabeled = j.at("unlabeled").get<std::size_t>();
        r.audit_ok = j.at("audit_ok").get<bool>();
        for (const auto& jf : j.at("folds")) {
            FoldResult f;
            f.fold = jf.at("fold").get<int>();
            f.metrics = metrics_from(jf.at("metrics"));
            f.unlabeled = jf.at("unlabeled").get<std::size_t>();
            f.test_ids = jf.at("test").get<std::vector<std::string>>();
            f.train_ids = jf.at("train").get<std::vector<std::string>>();
            for (const auto& [id, rank] : jf.at("first_ranks").items()) {
                Ranking rk;
                rk.commit_id = id;
                if (!rank.is_null()) rk.first_rank = rank.get<std::size_t>();
                f.rankings.push_back(std::move(rk));
            }
            for (const auto& e : jf.at("history")) {
                f.history.push_back({e.at(0).get<int>(), e.at(1).get<double>(), e.at(2).get<double>()});
            }
            r.folds.push_back(std::move(f));
        }
        return r;
    } catch (const json::exception& e) {
        throw Error(std::string("report: ") + e.what());
    }
}

std::vector<SweepRow> sweep(const std::vector<CommitRecord>& records, const RunConfig& base)
{
    std::vector<SweepRow> rows;
    for (int layers : {1, 2}) {
        for (auto dec : {DecompositionKind::basis, DecompositionKind::block}) {
            for (auto loss : {LossKind::focal, LossKind::bce, LossKind::bce_weighted}) {
                RunConfig c = base;
                c.model.layers = layers;
                c.model.decompositions.assign(static_cast<std::size_t>(layers), dec);
                c.loss.kind = loss;
                SweepRow row;
                row.layers = layers;
                row.decomposition = std::string(to_string(dec)) + "&" + std::string(to_string(dec));
                row.loss = loss;
                c.method = "L" + std::to_string(layers) + "-" + row.decomposition + "-" + std::string(to_string(loss));
                row.report = cross_validate(records, c);
                rows.push_back(std::move(row));
            }
        }
    }
    return rows;
}

std::string render_sweep_csv(const std::vector<SweepRow>& rows)
{
    std::string out = "layers,decomposition,loss,recall1,recall2,recall3,mfr\n";
    for (const auto& r : rows) {
        const auto& m = r.report.pooled;
        out += std::to_string(r.layers) + "," + r.decomposition + "," + std::string(to_string(r.loss)) + "," + f3(m.recall[0]) + ","
               + f3(m.recall[1]) + "," + f3(m.recall[2]) + "," + f3(m.mfr) + "\n";
    }
    return out;
}

} // namespace rcdet
