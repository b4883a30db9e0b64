#include "rcdet/rgcn.hpp"

#include <cmath>
#include <string>

namespace rcdet {

std::string_view to_string(DecompositionKind k)
{
    return k == DecompositionKind::basis ? "basis" : "block";
}

DecompositionKind decomposition_from_string(std::string_view name)
{
    if (name == "basis") return DecompositionKind::basis;
    if (name == "block") return DecompositionKind::block;
    throw Error("unknown decomposition '" + std::string(name) + "' (expected basis or block)");
}

namespace {

std::string shape(const Eigen::MatrixXd& m)
{
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void expect_shape(const Eigen::MatrixXd& m, Eigen::Index rows, Eigen::Index cols, const char* what)
{
    if (m.rows() != rows || m.cols() != cols) {
        throw Error(std::string("rgcn: ") + what + " has shape " + shape(m) + ", expected " + std::to_string(rows)
                    + "x" + std::to_string(cols));
    }
}

void fill_uniform(Eigen::MatrixXd& m, double bound, Rng& rng)
{
    // Column-major fill order is part of the determinism contract.
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.uniform(-bound, bound);
}

} // namespace

void RgcnLayer::validate() const
{
    if (num_relations < 1 || d_in < 1 || d_out < 1 || num_terms < 1) throw Error("rgcn: layer dims must be positive");
    expect_shape(self_weight, d_out, d_in, "self weight");
    if (kind == DecompositionKind::basis) {
        if (static_cast<int>(bases.size()) != num_terms) throw Error("rgcn: basis count does not match B");
        for (const auto& v : bases) expect_shape(v, d_out, d_in, "basis");
        expect_shape(coeffs, num_relations, num_terms, "coefficients");
    } else {
        if (d_in % num_terms != 0 || d_out % num_terms != 0) {
            throw Error("rgcn: block decomposition needs d_in (" + std::to_string(d_in) + ") and d_out ("
                        + std::to_string(d_out) + ") divisible by B=" + std::to_string(num_terms));
        }
        if (static_cast<int>(blocks.size()) != num_relations * num_terms) throw Error("rgcn: block count does not match R*B");
        for (const auto& q : blocks) expect_shape(q, d_out / num_terms, d_in / num_terms, "block");
    }
}

Eigen::MatrixXd compose_weight(const RgcnLayer& layer, int r)
{
    if (r < 0 || r >= layer.num_relations) throw Error("compose_weight: relation " + std::to_string(r) + " out of range");
    layer.validate();
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(layer.d_out, layer.d_in);
    if (layer.kind == DecompositionKind::basis) {
        for (int b = 0; b < layer.num_terms; ++b) w.noalias() += layer.coeffs(r, b) * layer.bases[static_cast<std::size_t>(b)];
    } else {
        const int ro = layer.d_out / layer.num_terms;
        const int ci = layer.d_in / layer.num_terms;
        for (int b = 0; b < layer.num_terms; ++b) {
            w.block(b * ro, b * ci, ro, ci) = layer.blocks[static_cast<std::size_t>(r * layer.num_terms + b)];
        }
    }
    return w;
}

void RgcnModel::validate() const
{
    if (layers.empty()) throw Error("rgcn: model has no layers");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        layers[l].validate();
        if (l > 0 && layers[l].d_in != layers[l - 1].d_out) {
            throw Error("rgcn: layer " + std::to_string(l) + " expects d_in " + std::to_string(layers[l].d_in)
                        + " but layer " + std::to_string(l - 1) + " produces " + std::to_string(layers[l - 1].d_out));
        }
        if (layers[l].num_relations != layers.front().num_relations) throw Error("rgcn: relation count differs between layers");
    }
}

RgcnModel init_model(const ModelConfig& config, Rng& rng)
{
    if (config.layers < 1 || config.layers > 5) throw Error("rgcn: layers must be in [1, 5], got " + std::to_string(config.layers));
    if (config.input_dim < 1 || config.hidden_dim < 1) throw Error("rgcn: dims must be positive");
    if (!config.decompositions.empty() && static_cast<int>(config.decompositions.size()) != config.layers) {
        throw Error("rgcn: " + std::to_string(config.decompositions.size()) + " decompositions given for "
                    + std::to_string(config.layers) + " layers");
    }
    RgcnModel model;
    for (int l = 0; l < config.layers; ++l) {
        RgcnLayer layer;
        layer.d_in = l == 0 ? config.input_dim : config.hidden_dim;
        layer.d_out = config.hidden_dim;
        layer.kind = config.decompositions.empty() ? DecompositionKind::basis : config.decompositions[static_cast<std::size_t>(l)];
        layer.num_terms = layer.kind == DecompositionKind::basis ? config.num_bases : config.num_blocks;
        layer.activation = l + 1 < config.layers ? Activation::relu : Activation::identity;
        if (layer.num_terms < 1) throw Error("rgcn: num_bases/num_blocks must be >= 1");
        if (layer.kind == DecompositionKind::block && (layer.d_in % layer.num_terms != 0 || layer.d_out % layer.num_terms != 0)) {
            throw Error("rgcn: layer " + std::to_string(l) + ": num_blocks " + std::to_string(layer.num_terms)
                        + " must divide " + std::to_string(layer.d_in) + " and " + std::to_string(layer.d_out));
        }

        const double bound = std::sqrt(6.0 / (layer.d_in + layer.d_out));
        layer.self_weight.resize(layer.d_out, layer.d_in);
        fill_uniform(layer.self_weight, bound, rng);
        if (layer.kind == DecompositionKind::basis) {
            layer.bases.assign(static_cast<std::size_t>(layer.num_terms), Eigen::MatrixXd(layer.d_out, layer.d_in));
            for (auto& v : layer.bases) fill_uniform(v, bound, rng);
            layer.coeffs.resize(layer.num_relations, layer.num_terms);
            fill_uniform(layer.coeffs, bound, rng);
        } else {
            const int ro = layer.d_out / layer.num_terms;
            const int ci = layer.d_in / layer.num_terms;
            layer.blocks.assign(static_cast<std::size_t>(layer.num_relations * layer.num_terms), Eigen::MatrixXd(ro, ci));
            for (auto& q : layer.blocks) fill_uniform(q, bound, rng);
        }
        model.layers.push_back(std::move(layer));
    }
    model.validate();
    return model;
}

RgcnModel zeros_like(const RgcnModel& model)
{
    RgcnModel z = model;
    for (auto* p : parameters(z)) p->setZero();
    return z;
}

std::vector<Eigen::MatrixXd*> parameters(RgcnModel& model)
{
    std::vector<Eigen::MatrixXd*> out;
    for (auto& layer : model.layers) {
        out.push_back(&layer.self_weight);
        for (auto& v : layer.bases) out.push_back(&v);
        if (layer.kind == DecompositionKind::basis) out.push_back(&layer.coeffs);
        for (auto& q : layer.blocks) out.push_back(&q);
    }
    return out;
}

std::vector<const Eigen::MatrixXd*> parameters(const RgcnModel& model)
{
    std::vector<const Eigen::MatrixXd*> out;
    for (auto* p : parameters(const_cast<RgcnModel&>(model))) out.push_back(p);
    return out;
}

std::vector<RelationEdge> relation_edges(const std::vector<std::pair<int, int>>& edges, const std::vector<int>& edge_type)
{
    if (edges.size() != edge_type.size()) throw Error("rgcn: edge and edge-type lists differ in length");
    std::vector<RelationEdge> out;
    out.reserve(2 * edges.size());
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const int t = edge_type[e];
        if (t < 0 || t >= kRelationKinds) throw Error("rgcn: edge type " + std::to_string(t) + " out of range");
        out.push_back({edges[e].first, edges[e].second, t});
        out.push_back({edges[e].second, edges[e].first, t + kRelationKinds});
    }
    return out;
}

GraphOperator make_operator(std::size_t num_nodes, const std::vector<RelationEdge>& edges, int num_relations)
{
    const auto n = static_cast<Eigen::Index>(num_nodes);
    const auto R = static_cast<std::size_t>(num_relations);
    std::vector<std::vector<int>> indegree(R, std::vector<int>(num_nodes, 0));
    for (const auto& e : edges) {
        if (e.relation < 0 || e.relation >= num_relations) {
            throw Error("rgcn: relation " + std::to_string(e.relation) + " out of range (R=" + std::to_string(num_relations) + ")");
        }
        if (e.src < 0 || e.dst < 0 || e.src >= n || e.dst >= n) throw Error("rgcn: edge endpoint out of range");
        ++indegree[static_cast<std::size_t>(e.relation)][static_cast<std::size_t>(e.dst)];
    }
    GraphOperator op;
    op.num_nodes = num_nodes;
    op.receivers.resize(R);
    op.adjacency.resize(R);
    std::vector<std::vector<Eigen::Index>> compact(R, std::vector<Eigen::Index>(num_nodes, -1));
    for (std::size_t r = 0; r < R; ++r) {
        for (std::size_t i = 0; i < num_nodes; ++i) {
            if (indegree[r][i] > 0) {
                compact[r][i] = static_cast<Eigen::Index>(op.receivers[r].size());
                op.receivers[r].push_back(static_cast<Eigen::Index>(i));
            }
        }
    }
    std::vector<std::vector<Eigen::Triplet<double>>> triplets(R);
    for (const auto& e : edges) {
        const auto r = static_cast<std::size_t>(e.relation);
        const auto dst = static_cast<std::size_t>(e.dst);
        triplets[r].emplace_back(compact[r][dst], e.src, 1.0 / indegree[r][dst]);
    }
    for (std::size_t r = 0; r < R; ++r) {
        auto& a = op.adjacency[r];
        a.resize(static_cast<Eigen::Index>(op.receivers[r].size()), n);
        a.setFromTriplets(triplets[r].begin(), triplets[r].end());
    }
    return op;
}

Eigen::MatrixXd GraphOperator::dense(int r) const
{
    const auto n = static_cast<Eigen::Index>(num_nodes);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
    const auto& a = adjacency.at(static_cast<std::size_t>(r));
    const auto& rows = receivers.at(static_cast<std::size_t>(r));
    for (Eigen::Index k = 0; k < a.outerSize(); ++k)
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(a, k); it; ++it) out(rows[static_cast<std::size_t>(k)], it.col()) = it.value();
    return out;
}

GraphOperator make_operator(const HomoGraph& g)
{
    return make_operator(g.num_nodes, relation_edges(g.edges, g.edge_type));
}

Eigen::MatrixXd input_matrix(const HomoGraph& g)
{
    int width = 0;
    for (const auto& [key, col] : g.node_features) {
        if (col.dtype() == DType::f32) width += col.width;
    }
    if (width == 0) throw Error("graph '" + g.commit_id + "' has no float node features to feed the model");
    Eigen::MatrixXd x(static_cast<Eigen::Index>(g.num_nodes), width);
    int offset = 0;
    for (const auto& [key, col] : g.node_features) {
        if (col.dtype() != DType::f32) continue;
        const auto& v = std::get<std::vector<float>>(col.data);
        if (col.rows() != g.num_nodes) throw Error("graph '" + g.commit_id + "': feature '" + key + "' row count mismatch");
        for (std::size_t i = 0; i < g.num_nodes; ++i)
            for (int k = 0; k < col.width; ++k)
                x(static_cast<Eigen::Index>(i), offset + k) = v[i * static_cast<std::size_t>(col.width) + static_cast<std::size_t>(k)];
        offset += col.width;
    }
    return x;
}

Eigen::MatrixXd layer_forward(const RgcnLayer& layer, const Eigen::MatrixXd& h, const GraphOperator& op, LayerTape* tape)
{
    layer.validate();
    if (h.cols() != layer.d_in) throw Error("rgcn: input width " + std::to_string(h.cols()) + " != d_in " + std::to_string(layer.d_in));
    if (static_cast<std::size_t>(h.rows()) != op.num_nodes) throw Error("rgcn: state rows do not match the graph");
    if (static_cast<int>(op.adjacency.size()) != layer.num_relations) throw Error("rgcn: operator relation count mismatch");
    if (!h.allFinite()) throw Error("rgcn: non-finite input state");

    Eigen::MatrixXd z = h * layer.self_weight.transpose();
    std::vector<Eigen::MatrixXd> messages;
    if (tape) messages.reserve(op.adjacency.size());
    for (int r = 0; r < layer.num_relations; ++r) {
        const auto& a = op.adjacency[static_cast<std::size_t>(r)];
        const auto& rows = op.receivers[static_cast<std::size_t>(r)];
        Eigen::MatrixXd m = a * h;
        if (!rows.empty()) {
            const Eigen::MatrixXd contrib = m * compose_weight(layer, r).transpose();
            for (std::size_t k = 0; k < rows.size(); ++k) z.row(rows[k]) += contrib.row(static_cast<Eigen::Index>(k));
        }
        if (tape) messages.push_back(std::move(m));
    }

    Eigen::MatrixXd out = layer.activation == Activation::relu ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z;
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        if (!out.row(i).allFinite()) throw Error("rgcn: non-finite output at node " + std::to_string(i));
    }
    if (tape) {
        tape->input = h;
        tape->messages = std::move(messages);
        tape->pre = std::move(z);
    }
    return out;
}

Eigen::MatrixXd model_forward(const RgcnModel& model, const Eigen::MatrixXd& x, const GraphOperator& op, ForwardTape* tape)
{
    model.validate();
    if (x.cols() != model.input_dim()) {
        throw Error("rgcn: model expects " + std::to_string(model.input_dim()) + "-dim inputs, got " + std::to_string(x.cols()));
    }
    if (tape) {
        tape->op = op;
        tape->layers.assign(model.layers.size(), {});
    }
    Eigen::MatrixXd h = x;
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        h = layer_forward(model.layers[l], h, op, tape ? &tape->layers[l] : nullptr);
    }
    return h;
}

ModelGradients backward(const RgcnModel& model, const ForwardTape& tape, const Eigen::MatrixXd& upstream)
{
    if (tape.layers.empty()) throw Error("rgcn: backward called before a recorded forward pass");
    if (tape.layers.size() != model.layers.size()) throw Error("rgcn: tape does not match the model");

    ModelGradients grads{zeros_like(model), {}};
    Eigen::MatrixXd dh = upstream;
    for (std::size_t l = model.layers.size(); l-- > 0;) {
        const auto& layer = model.layers[l];
        const auto& t = tape.layers[l];
        auto& g = grads.params.layers[l];
        if (dh.rows() != t.pre.rows() || dh.cols() != layer.d_out) throw Error("rgcn: upstream gradient has the wrong shape");

        Eigen::MatrixXd dz = dh;
        if (layer.activation == Activation::relu) dz = (t.pre.array() > 0.0).select(dh, 0.0);

        g.self_weight.noalias() = dz.transpose() * t.input;
        Eigen::MatrixXd dx = dz * layer.self_weight;
        for (int r = 0; r < layer.num_relations; ++r) {
            const auto& a = tape.op.adjacency[static_cast<std::size_t>(r)];
            const auto& rows = tape.op.receivers[static_cast<std::size_t>(r)];
            if (rows.empty()) continue;
            Eigen::MatrixXd dz_r(static_cast<Eigen::Index>(rows.size()), dz.cols());
            for (std::size_t k = 0; k < rows.size(); ++k) dz_r.row(static_cast<Eigen::Index>(k)) = dz.row(rows[k]);
            const Eigen::MatrixXd w = compose_weight(layer, r);
            const Eigen::MatrixXd dw = dz_r.transpose() * t.messages[static_cast<std::size_t>(r)];
            dx.noalias() += a.transpose() * (dz_r * w);
            if (layer.kind == DecompositionKind::basis) {
                for (int b = 0; b < layer.num_terms; ++b) {
                    const auto& v = layer.bases[static_cast<std::size_t>(b)];
                    g.bases[static_cast<std::size_t>(b)].noalias() += layer.coeffs(r, b) * dw;
                    g.coeffs(r, b) += (dw.array() * v.array()).sum();
                }
            } else {
                const int ro = layer.d_out / layer.num_terms;
                const int ci = layer.d_in / layer.num_terms;
                for (int b = 0; b < layer.num_terms; ++b) {
                    g.blocks[static_cast<std::size_t>(r * layer.num_terms + b)] += dw.block(b * ro, b * ci, ro, ci);
                }
            }
        }
        dh = std::move(dx);
    }
    grads.inputs = std::move(dh);
    return grads;
}

} // namespace rcdet
