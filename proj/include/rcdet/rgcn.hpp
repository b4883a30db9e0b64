#pragma once

// Relational graph convolution with basis or block-diagonal weight
// decomposition, and a hand-written reverse pass.
//
// Node states are row-major: H is |V| x d, one row per node.

#include "rcdet/diffgraph.hpp"
#include "rcdet/hetero2homo.hpp"
#include "rcdet/util.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <string_view>
#include <vector>

namespace rcdet {

// Every relation kind is used in both directions; relation k + 5 carries
// messages from an edge's target back to its source.
inline constexpr int kNumRelations = 2 * kRelationKinds;

enum class DecompositionKind { basis, block };
enum class Activation { relu, identity };

std::string_view to_string(DecompositionKind k);
DecompositionKind decomposition_from_string(std::string_view name);

struct RgcnLayer {
    int num_relations = kNumRelations;
    int d_in = 0;
    int d_out = 0;
    DecompositionKind kind = DecompositionKind::basis;
    int num_terms = 1; // B: bases or blocks
    Activation activation = Activation::relu;

    Eigen::MatrixXd self_weight;          // d_out x d_in
    std::vector<Eigen::MatrixXd> bases;   // basis: B matrices d_out x d_in
    Eigen::MatrixXd coeffs;               // basis: R x B
    std::vector<Eigen::MatrixXd> blocks;  // block: index r * B + b, (d_out/B) x (d_in/B)

    void validate() const;
};

Eigen::MatrixXd compose_weight(const RgcnLayer& layer, int r);

struct RgcnModel {
    std::vector<RgcnLayer> layers;

    int input_dim() const { return layers.empty() ? 0 : layers.front().d_in; }
    int output_dim() const { return layers.empty() ? 0 : layers.back().d_out; }
    void validate() const;
};

struct ModelConfig {
    int input_dim = 128;
    int hidden_dim = 64;
    int layers = 2;
    // One entry per layer; empty means basis everywhere.
    std::vector<DecompositionKind> decompositions;
    int num_bases = 30;
    int num_blocks = 4;
};

/// Every parameter of a layer, coefficients and blocks included, is drawn
/// uniform in +-sqrt(6 / (d_in + d_out)). ReLU on all but the last layer.
RgcnModel init_model(const ModelConfig& config, Rng& rng);

RgcnModel zeros_like(const RgcnModel& model);

// Flat views over every parameter matrix, in a fixed order.
std::vector<Eigen::MatrixXd*> parameters(RgcnModel& model);
std::vector<const Eigen::MatrixXd*> parameters(const RgcnModel& model);

struct RelationEdge {
    int src = 0; // message sender
    int dst = 0; // receiver
    int relation = 0;
};

/// Expands typed edges into forward and inverse relation edges.
std::vector<RelationEdge> relation_edges(const std::vector<std::pair<int, int>>& edges,
                                         const std::vector<int>& edge_type);

/// Mean aggregation operators: A_r(i, j) = 1 / |N_i^r| for j in N_i^r.
/// Parallel edges count with multiplicity. Only rows of nodes that receive
/// something under r are stored: adjacency[r] row k belongs to node
/// receivers[r][k].
struct GraphOperator {
    std::size_t num_nodes = 0;
    std::vector<std::vector<Eigen::Index>> receivers;
    std::vector<Eigen::SparseMatrix<double, Eigen::RowMajor>> adjacency;

    /// The full |V| x |V| matrix A_r.
    Eigen::MatrixXd dense(int r) const;
};

GraphOperator make_operator(std::size_t num_nodes, const std::vector<RelationEdge>& edges,
                            int num_relations = kNumRelations);
GraphOperator make_operator(const HomoGraph& g);

/// All float node columns, concatenated in key order, as a |V| x d matrix.
Eigen::MatrixXd input_matrix(const HomoGraph& g);

struct LayerTape {
    Eigen::MatrixXd input;
    std::vector<Eigen::MatrixXd> messages; // A_r * input on the receiving rows, per relation
    Eigen::MatrixXd pre;                   // before the activation
};

struct ForwardTape {
    GraphOperator op;
    std::vector<LayerTape> layers;
};

Eigen::MatrixXd layer_forward(const RgcnLayer& layer, const Eigen::MatrixXd& h, const GraphOperator& op,
                              LayerTape* tape = nullptr);
Eigen::MatrixXd model_forward(const RgcnModel& model, const Eigen::MatrixXd& x, const GraphOperator& op,
                              ForwardTape* tape = nullptr);

struct ModelGradients {
    RgcnModel params; // same shapes as the model
    Eigen::MatrixXd inputs;
};

/// Gradients of a scalar loss given dLoss/dOutput. Requires a tape filled by
/// model_forward on the same model.
ModelGradients backward(const RgcnModel& model, const ForwardTape& tape, const Eigen::MatrixXd& upstream);

} // namespace rcdet
