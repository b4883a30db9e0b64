#pragma once

// Scoring deleted lines, pairwise training and ranking.

#include "rcdet/diffgraph.hpp"
#include "rcdet/embed.hpp"
#include "rcdet/hetero2homo.hpp"
#include "rcdet/rgcn.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rcdet {

/// s_i = w . h_i + b
struct ScoreHead {
    Eigen::MatrixXd weight; // d x 1
    Eigen::MatrixXd bias;   // 1 x 1
};

struct Ranker {
    RgcnModel rgcn;
    ScoreHead head;
    std::string embedder; // spec string, see make_embedder
    std::uint64_t seed = 0;
};

/// The head starts at zero unless `random_head`: an untrained ranker then
/// orders by the tie rule only, and everything it learns shows up in the
/// ranking even after the tiny parameter moves a small learning rate allows.
Ranker init_ranker(const ModelConfig& config, std::uint64_t seed, bool random_head = false);

std::vector<Eigen::MatrixXd*> parameters(Ranker& ranker);

enum class LossKind { focal, bce, bce_weighted };
std::string_view to_string(LossKind k);
LossKind loss_from_string(std::string_view name);

struct LossConfig {
    LossKind kind = LossKind::focal;
    double alpha = 0.25;
    double gamma = 2.0;
    double pos_weight = 1.0;

    void validate() const;
};

struct TrainConfig {
    int epochs = 20;
    int pair_batch = 128;
    double lr = 5e-6;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t seed = 0;

    void validate() const;
};

double pair_probability(double s_i, double s_j);

inline constexpr double kLogClamp = 1e-12;

double focal_loss(double p, int t, double alpha, double gamma);
double bce_loss(double p, int t);
double weighted_bce_loss(double p, int t, double pos_weight);

struct PairLoss {
    double value = 0.0;
    double probability = 0.0; // P_ij
    double d_diff = 0.0;      // dLoss / d(s_i - s_j)
};

PairLoss pair_loss(double s_i, double s_j, int t, const LossConfig& config);

/// One commit ready for the model: the embedded homogeneous graph plus the
/// deleted-line labels (deleted nodes are rows 0..deleted-1).
struct Sample {
    std::string commit_id;
    Eigen::MatrixXd x;
    std::vector<RelationEdge> edges;
    std::size_t num_nodes = 0;
    std::vector<std::string> path;  // per deleted node
    std::vector<int> line_no;       // per deleted node
    std::vector<bool> root;         // per deleted node

    std::size_t deleted() const { return root.size(); }
};

Sample make_sample(const HeteroGraph& graph, const Embedder& embedder, const ConversionOptions& options = {});
Sample make_sample(const HomoGraph& embedded, const HeteroGraph& graph);

struct TrainingPair {
    std::size_t sample = 0;
    int i = 0; // root-cause deleted node
    int j = 0; // other deleted node
    int t = 1;
};

/// Every (root, non-root) pair of each sample, shuffled by `seed`. Samples
/// without both kinds of line are skipped and reported in `warnings`.
std::vector<TrainingPair> make_pairs(const std::vector<Sample>& samples, std::uint64_t seed,
                                     std::vector<std::string>* warnings = nullptr);

struct BatchGradient {
    double loss = 0.0;            // mean over the batch
    double loss_sum = 0.0;
    double probability_sum = 0.0; // sum of P_ij over the batch
    Ranker grad;                  // d loss / d parameter, same shapes as the ranker
};

/// Loss and exact gradients of one optimizer step. The batch's commits are
/// stacked into one disconnected graph and run through the model together.
BatchGradient batch_gradient(const Ranker& ranker, const std::vector<Sample>& samples, std::span<const TrainingPair> batch,
                             const LossConfig& loss_config);

struct EpochStats {
    int epoch = 0;
    double mean_loss = 0.0;
    double mean_probability = 0.0;
};

struct TrainResult {
    std::vector<EpochStats> history;
    std::vector<std::string> warnings;
    std::size_t pairs = 0;
};

TrainResult train(Ranker& ranker, const std::vector<Sample>& samples, const TrainConfig& train_config,
                  const LossConfig& loss_config);

std::string history_csv(const std::vector<EpochStats>& history);

/// Scores of the deleted nodes of `sample`.
Eigen::VectorXd score_deleted(const Ranker& ranker, const Sample& sample);

struct RankedLine {
    std::string path;
    int line_no = 0;
    double score = 0.0;
    bool root = false;
};

struct Ranking {
    std::string commit_id;
    std::vector<RankedLine> lines;
    std::optional<std::size_t> first_rank; // unset when no root-cause line is labeled
};

/// Orders by score descending, ties by (line_no, path) ascending.
Ranking rank_lines(std::string commit_id, std::vector<RankedLine> lines);
Ranking rank_deletions(const Ranker& ranker, const Sample& sample);

std::string save_checkpoint(const Ranker& ranker);
Ranker load_checkpoint(const std::string& json_text);

} // namespace rcdet
