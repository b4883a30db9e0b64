#pragma once

// Recall@N, mean first rank, stratified cross-validation and reports.

#include "rcdet/config.hpp"
#include "rcdet/ingest.hpp"
#include "rcdet/rank.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace rcdet {

/// Fraction of first ranks <= n. Errors on an empty list.
double recall_at_n(const std::vector<std::size_t>& first_ranks, int n);
double mean_first_rank(const std::vector<std::size_t>& first_ranks);

/// Same, over rankings; rankings without a labeled root cause are ignored.
double recall_at_n(const std::vector<Ranking>& rankings, int n);
double mean_first_rank(const std::vector<Ranking>& rankings);

std::vector<std::size_t> first_ranks(const std::vector<Ranking>& rankings);

inline constexpr int kReportedRanks = 3;

struct Metrics {
    std::size_t n_r = 0;
    std::array<std::size_t, kReportedRanks> n_at{}; // commits with first_rank <= N, N = 1..3
    std::array<double, kReportedRanks> recall{};
    double mfr = 0.0;
};

Metrics compute_metrics(const std::vector<Ranking>& rankings);

struct FoldResult {
    int fold = 0;
    Metrics metrics;
    std::size_t unlabeled = 0; // test commits without a root-cause label
    std::vector<std::string> train_ids;
    std::vector<std::string> test_ids;
    std::vector<Ranking> rankings;
    std::vector<EpochStats> history;
};

struct MetricsReport {
    std::string method;
    int k = 0;
    std::uint64_t seed = 0;
    Metrics pooled;                             // micro: all test rankings together
    std::array<double, kReportedRanks> macro_recall{}; // mean over folds
    double macro_mfr = 0.0;
    std::size_t unlabeled = 0;
    bool audit_ok = false; // no commit both trained on and tested by one fold model
    std::vector<FoldResult> folds;
};

/// Builds the model-ready samples for `records`, `jobs` commits at a time.
std::vector<Sample> build_samples(const std::vector<CommitRecord>& records, const RunConfig& config);

MetricsReport cross_validate(const std::vector<CommitRecord>& records, const RunConfig& config);

enum class ReportFormat { text, csv, json };
ReportFormat report_format_from_string(std::string_view name);

std::string render_report(const MetricsReport& report, ReportFormat format);
MetricsReport report_from_json(const std::string& text);

/// One row per (layers, decomposition pair, loss) over layers {1,2},
/// {basis&basis, block&block}, {focal, bce, bce_weighted}.
struct SweepRow {
    int layers = 0;
    std::string decomposition;
    LossKind loss = LossKind::focal;
    MetricsReport report;
};

std::vector<SweepRow> sweep(const std::vector<CommitRecord>& records, const RunConfig& base);
std::string render_sweep_csv(const std::vector<SweepRow>& rows);

} // namespace rcdet
