#include "rcdet/rank.hpp"

#include "rcdet/util.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace rcdet {

Ranker init_ranker(const ModelConfig& config, std::uint64_t seed, bool random_head)
{
    Rng rng(seed);
    Ranker r;
    r.rgcn = init_model(config, rng);
    r.seed = seed;
    r.head.weight = Eigen::MatrixXd::Zero(r.rgcn.output_dim(), 1);
    r.head.bias = Eigen::MatrixXd::Zero(1, 1);
    if (random_head) {
        const double bound = std::sqrt(6.0 / (r.rgcn.output_dim() + 1));
        for (Eigen::Index i = 0; i < r.head.weight.rows(); ++i) r.head.weight(i, 0) = rng.uniform(-bound, bound);
        r.head.bias(0, 0) = rng.uniform(-0.1, 0.1);
    }
    return r;
}

std::vector<Eigen::MatrixXd*> parameters(Ranker& ranker)
{
    auto out = parameters(ranker.rgcn);
    out.push_back(&ranker.head.weight);
    out.push_back(&ranker.head.bias);
    return out;
}

std::string_view to_string(LossKind k)
{
    switch (k) {
    case LossKind::focal: return "focal";
    case LossKind::bce: return "bce";
    case LossKind::bce_weighted: return "bce_weighted";
    }
    return "?";
}

LossKind loss_from_string(std::string_view name)
{
    if (name == "focal") return LossKind::focal;
    if (name == "bce") return LossKind::bce;
    if (name == "bce_weighted") return LossKind::bce_weighted;
    throw Error("unknown loss '" + std::string(name) + "' (expected focal, bce or bce_weighted)");
}

void LossConfig::validate() const
{
    if (kind == LossKind::focal) {
        if (!(alpha > 0.0 && alpha <= 1.0)) throw Error("focal loss: alpha must be in (0, 1]");
        if (!(gamma >= 0.0)) throw Error("focal loss: gamma must be >= 0");
    }
    if (kind == LossKind::bce_weighted && !(pos_weight > 0.0)) throw Error("weighted bce: pos_weight must be > 0");
}

void TrainConfig::validate() const
{
    if (epochs < 1) throw Error("train: epochs must be >= 1");
    if (pair_batch < 1) throw Error("train: pair_batch must be >= 1");
    if (!(lr >= 0.0) || !std::isfinite(lr)) throw Error("train: lr must be a finite non-negative number");
}

namespace {

// p and 1 - p without cancellation.
std::pair<double, double> logistic_pair(double d)
{
    if (d >= 0.0) {
        const double e = std::exp(-d);
        return {1.0 / (1.0 + e), e / (1.0 + e)};
    }
    const double e = std::exp(d);
    return {e / (1.0 + e), 1.0 / (1.0 + e)};
}

double clamped_log(double p)
{
    return std::log(std::max(p, kLogClamp));
}

} // namespace

double pair_probability(double s_i, double s_j)
{
    return logistic_pair(s_i - s_j).first;
}

double focal_loss(double p, int t, double alpha, double gamma)
{
    const double pt = t == 1 ? p : 1.0 - p;
    return -alpha * std::pow(1.0 - pt, gamma) * clamped_log(pt);
}

double bce_loss(double p, int t)
{
    return -clamped_log(t == 1 ? p : 1.0 - p);
}

double weighted_bce_loss(double p, int t, double pos_weight)
{
    return t == 1 ? -pos_weight * clamped_log(p) : -clamped_log(1.0 - p);
}

PairLoss pair_loss(double s_i, double s_j, int t, const LossConfig& config)
{
    const auto [p, q] = logistic_pair(s_i - s_j);
    const double pt = t == 1 ? p : q;
    const double qt = t == 1 ? q : p; // 1 - p_t
    const double sign = t == 1 ? 1.0 : -1.0;
    PairLoss out;
    out.probability = p;
    switch (config.kind) {
    case LossKind::focal: {
        out.value = focal_loss(p, t, config.alpha, config.gamma);
        // d/dd of -a (1-pt)^g log pt, using dpt/dd = sign * pt * qt.
        const double mod = std::pow(qt, config.gamma);
        out.d_diff = -sign * config.alpha * (mod * qt - config.gamma * mod * pt * clamped_log(pt));
        break;
    }
    case LossKind::bce:
        out.value = bce_loss(p, t);
        out.d_diff = -sign * qt;
        break;
    case LossKind::bce_weighted:
        out.value = weighted_bce_loss(p, t, config.pos_weight);
        out.d_diff = -sign * qt * (t == 1 ? config.pos_weight : 1.0);
        break;
    }
    return out;
}

Sample make_sample(const HomoGraph& embedded, const HeteroGraph& graph)
{
    Sample s;
    s.commit_id = graph.commit_id;
    s.x = input_matrix(embedded);
    s.edges = relation_edges(embedded.edges, embedded.edge_type);
    s.num_nodes = embedded.num_nodes;
    if (embedded.num_nodes != graph.nodes.size()) throw Error("sample '" + graph.commit_id + "': node count mismatch");
    const std::size_t deleted = graph.deleted_count();
    for (std::size_t i = 0; i < deleted; ++i) {
        const auto& n = graph.nodes[i];
        s.path.push_back(n.path);
        s.line_no.push_back(n.line_no);
        s.root.push_back(n.is_root_cause);
    }
    return s;
}

Sample make_sample(const HeteroGraph& graph, const Embedder& embedder, const ConversionOptions& options)
{
    return make_sample(embed_graph(to_homogeneous(graph, options), embedder), graph);
}

std::vector<TrainingPair> make_pairs(const std::vector<Sample>& samples, std::uint64_t seed, std::vector<std::string>* warnings)
{
    std::vector<TrainingPair> pairs;
    for (std::size_t s = 0; s < samples.size(); ++s) {
        const auto& sample = samples[s];
        std::vector<int> roots, others;
        for (std::size_t i = 0; i < sample.deleted(); ++i) (sample.root[i] ? roots : others).push_back(static_cast<int>(i));
        if (roots.empty() || others.empty()) {
            if (warnings) {
                warnings->push_back("commit '" + sample.commit_id + "': skipped for training ("
                                    + (roots.empty() ? "no root-cause line" : "every deleted line is a root cause") + ")");
            }
            continue;
        }
        for (int i : roots)
            for (int j : others) pairs.push_back({s, i, j, 1});
    }
    Rng rng(mix64(seed ^ 0x9a125ULL));
    rng.shuffle(pairs);
    return pairs;
}

namespace {

struct UnionBatch {
    Eigen::MatrixXd x;
    GraphOperator op;
    std::map<std::size_t, std::size_t> offset; // sample -> first row
};

UnionBatch build_union(const std::vector<Sample>& samples, const std::vector<std::size_t>& members)
{
    UnionBatch u;
    std::size_t rows = 0;
    for (auto s : members) {
        u.offset[s] = rows;
        rows += samples[s].num_nodes;
    }
    const Eigen::Index cols = samples[members.front()].x.cols();
    u.x.resize(static_cast<Eigen::Index>(rows), cols);
    std::vector<RelationEdge> edges;
    for (auto s : members) {
        const auto& sample = samples[s];
        const int base = static_cast<int>(u.offset[s]);
        u.x.middleRows(base, static_cast<Eigen::Index>(sample.num_nodes)) = sample.x;
        for (const auto& e : sample.edges) edges.push_back({e.src + base, e.dst + base, e.relation});
    }
    u.op = make_operator(rows, edges);
    return u;
}

struct Adam {
    std::vector<Eigen::MatrixXd> m, v;
    long step = 0;

    explicit Adam(const std::vector<Eigen::MatrixXd*>& params)
    {
        for (auto* p : params) {
            m.push_back(Eigen::MatrixXd::Zero(p->rows(), p->cols()));
            v.push_back(Eigen::MatrixXd::Zero(p->rows(), p->cols()));
        }
    }

    void update(const std::vector<Eigen::MatrixXd*>& params, const std::vector<const Eigen::MatrixXd*>& grads,
                const TrainConfig& c)
    {
        ++step;
        const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(step));
        const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(step));
        for (std::size_t k = 0; k < params.size(); ++k) {
            m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * *grads[k];
            v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * grads[k]->cwiseProduct(*grads[k]);
            params[k]->array() -= c.lr * (m[k].array() / bc1) / ((v[k].array() / bc2).sqrt() + c.eps);
        }
    }
};

} // namespace

BatchGradient batch_gradient(const Ranker& ranker, const std::vector<Sample>& samples, std::span<const TrainingPair> batch,
                             const LossConfig& loss_config)
{
    if (batch.empty()) throw Error("batch_gradient: empty batch");
    std::vector<std::size_t> members;
    for (const auto& pr : batch) members.push_back(pr.sample);
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());

    const auto u = build_union(samples, members);
    ForwardTape tape;
    const Eigen::MatrixXd h = model_forward(ranker.rgcn, u.x, u.op, &tape);
    const Eigen::VectorXd s = (h * ranker.head.weight).col(0).array() + ranker.head.bias(0, 0);

    BatchGradient out;
    Eigen::VectorXd ds = Eigen::VectorXd::Zero(s.size());
    const double scale = 1.0 / static_cast<double>(batch.size());
    for (const auto& pr : batch) {
        const auto base = static_cast<Eigen::Index>(u.offset.at(pr.sample));
        const auto pl = pair_loss(s(base + pr.i), s(base + pr.j), pr.t, loss_config);
        out.loss_sum += pl.value;
        out.probability_sum += pl.probability;
        ds(base + pr.i) += scale * pl.d_diff;
        ds(base + pr.j) -= scale * pl.d_diff;
    }
    out.loss = out.loss_sum * scale;
    out.grad.head.weight = h.transpose() * ds;
    out.grad.head.bias = Eigen::MatrixXd::Constant(1, 1, ds.sum());
    out.grad.rgcn = backward(ranker.rgcn, tape, ds * ranker.head.weight.transpose()).params;
    return out;
}

TrainResult train(Ranker& ranker, const std::vector<Sample>& samples, const TrainConfig& train_config,
                  const LossConfig& loss_config)
{
    train_config.validate();
    loss_config.validate();
    for (const auto& s : samples) {
        if (s.x.cols() != ranker.rgcn.input_dim()) {
            throw Error("train: commit '" + s.commit_id + "' has " + std::to_string(s.x.cols())
                        + "-dim features, model expects " + std::to_string(ranker.rgcn.input_dim()));
        }
    }
    TrainResult result;
    auto pairs = make_pairs(samples, train_config.seed, &result.warnings);
    if (pairs.empty()) throw Error("train: no trainable commit (need a root-cause and a non-root deleted line)");
    result.pairs = pairs.size();

    auto params = parameters(ranker);
    Adam adam(params);
    Rng rng(mix64(train_config.seed));
    const auto batch = static_cast<std::size_t>(train_config.pair_batch);

    for (int epoch = 1; epoch <= train_config.epochs; ++epoch) {
        if (epoch > 1) rng.shuffle(pairs);
        double loss_sum = 0.0, prob_sum = 0.0;
        for (std::size_t start = 0, b = 0; start < pairs.size(); start += batch, ++b) {
            const std::size_t end = std::min(pairs.size(), start + batch);
            auto bg = batch_gradient(ranker, samples, std::span<const TrainingPair>(pairs).subspan(start, end - start), loss_config);
            if (!std::isfinite(bg.loss_sum)) {
                throw Error("train: non-finite loss at epoch " + std::to_string(epoch) + ", batch " + std::to_string(b));
            }
            loss_sum += bg.loss_sum;
            prob_sum += bg.probability_sum;
            auto& grad = bg.grad;
            std::vector<const Eigen::MatrixXd*> gp;
            for (auto* g : parameters(grad)) gp.push_back(g);
            adam.update(params, gp, train_config);
        }
        result.history.push_back({epoch, loss_sum / static_cast<double>(pairs.size()),
                                  prob_sum / static_cast<double>(pairs.size())});
    }
    return result;
}

std::string history_csv(const std::vector<EpochStats>& history)
{
    std::ostringstream out;
    out << "epoch,mean_loss,mean_P_ij\n";
    char buf[96];
    for (const auto& e : history) {
        std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g\n", e.epoch, e.mean_loss, e.mean_probability);
        out << buf;
    }
    return out.str();
}

Eigen::VectorXd score_deleted(const Ranker& ranker, const Sample& sample)
{
    if (sample.x.cols() != ranker.rgcn.input_dim()) {
        throw Error("rank: commit '" + sample.commit_id + "' has " + std::to_string(sample.x.cols())
                    + "-dim features, checkpoint expects " + std::to_string(ranker.rgcn.input_dim()));
    }
    const auto op = make_operator(sample.num_nodes, sample.edges);
    const Eigen::MatrixXd h = model_forward(ranker.rgcn, sample.x, op);
    const Eigen::VectorXd s = (h * ranker.head.weight).col(0).array() + ranker.head.bias(0, 0);
    return s.head(static_cast<Eigen::Index>(sample.deleted()));
}

Ranking rank_lines(std::string commit_id, std::vector<RankedLine> lines)
{
    std::stable_sort(lines.begin(), lines.end(), [](const RankedLine& a, const RankedLine& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.line_no != b.line_no) return a.line_no < b.line_no;
        return a.path < b.path;
    });
    Ranking r;
    r.commit_id = std::move(commit_id);
    r.lines = std::move(lines);
    for (std::size_t k = 0; k < r.lines.size(); ++k) {
        if (r.lines[k].root) {
            r.first_rank = k + 1;
            break;
        }
    }
    return r;
}

Ranking rank_deletions(const Ranker& ranker, const Sample& sample)
{
    if (sample.deleted() == 0) throw Error("rank: commit '" + sample.commit_id + "' has no deleted lines");
    const auto scores = score_deleted(ranker, sample);
    std::vector<RankedLine> lines;
    for (std::size_t i = 0; i < sample.deleted(); ++i) {
        lines.push_back({sample.path[i], sample.line_no[i], scores(static_cast<Eigen::Index>(i)), sample.root[i]});
    }
    return rank_lines(sample.commit_id, std::move(lines));
}

// Checkpoint: JSON manifest with every matrix as {rows, cols, data}, data
// being row-major f32 little-endian in base64.

namespace {

using nlohmann::json;

constexpr const char* kCheckpointFormat = "rcdet-checkpoint";
constexpr int kCheckpointVersion = 1;

json matrix_to_json(const Eigen::MatrixXd& m)
{
    std::vector<float> v;
    v.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) v.push_back(static_cast<float>(m(i, j)));
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", encode_f32(v)}};
}

Eigen::MatrixXd matrix_from_json(const json& j)
{
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto v = decode_f32(j.at("data").get<std::string>());
    if (rows < 0 || cols < 0 || static_cast<std::size_t>(rows * cols) != v.size()) throw Error("checkpoint: matrix size mismatch");
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = v[static_cast<std::size_t>(i * cols + k)];
    return m;
}

} // namespace

std::string save_checkpoint(const Ranker& ranker)
{
    json layers = json::array();
    for (const auto& l : ranker.rgcn.layers) {
        json jl = {{"d_in", l.d_in},
                   {"d_out", l.d_out},
                   {"num_relations", l.num_relations},
                   {"decomposition", to_string(l.kind)},
                   {"num_terms", l.num_terms},
                   {"activation", l.activation == Activation::relu ? "relu" : "identity"},
                   {"self_weight", matrix_to_json(l.self_weight)}};
        if (l.kind == DecompositionKind::basis) {
            json bases = json::array();
            for (const auto& v : l.bases) bases.push_back(matrix_to_json(v));
            jl["bases"] = std::move(bases);
            jl["coeffs"] = matrix_to_json(l.coeffs);
        } else {
            json blocks = json::array();
            for (const auto& q : l.blocks) blocks.push_back(matrix_to_json(q));
            jl["blocks"] = std::move(blocks);
        }
        layers.push_back(std::move(jl));
    }
    json j = {{"format", kCheckpointFormat},
              {"version", kCheckpointVersion},
              {"input_dim", ranker.rgcn.input_dim()},
              {"output_dim", ranker.rgcn.output_dim()},
              {"num_layers", ranker.rgcn.layers.size()},
              {"seed", ranker.seed},
              {"embedder", ranker.embedder},
              {"layers", std::move(layers)},
              {"head", {{"weight", matrix_to_json(ranker.head.weight)}, {"bias", matrix_to_json(ranker.head.bias)}}}};
    return j.dump(1) + "\n";
}

Ranker load_checkpoint(const std::string& json_text)
{
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw Error(std::string("checkpoint: malformed JSON: ") + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != kCheckpointFormat) throw Error("checkpoint: not an rcdet checkpoint");
        if (j.at("version").get<int>() != kCheckpointVersion) throw Error("checkpoint: unsupported version");
        Ranker r;
        r.seed = j.at("seed").get<std::uint64_t>();
        r.embedder = j.at("embedder").get<std::string>();
        for (const auto& jl : j.at("layers")) {
            RgcnLayer l;
            l.d_in = jl.at("d_in").get<int>();
            l.d_out = jl.at("d_out").get<int>();
            l.num_relations = jl.at("num_relations").get<int>();
            l.kind = decomposition_from_string(jl.at("decomposition").get<std::string>());
            l.num_terms = jl.at("num_terms").get<int>();
            l.activation = jl.at("activation").get<std::string>() == "relu" ? Activation::relu : Activation::identity;
            l.self_weight = matrix_from_json(jl.at("self_weight"));
            if (l.kind == DecompositionKind::basis) {
                for (const auto& b : jl.at("bases")) l.bases.push_back(matrix_from_json(b));
                l.coeffs = matrix_from_json(jl.at("coeffs"));
            } else {
                for (const auto& b : jl.at("blocks")) l.blocks.push_back(matrix_from_json(b));
            }
            r.rgcn.layers.push_back(std::move(l));
        }
        r.rgcn.validate();
        r.head.weight = matrix_from_json(j.at("head").at("weight"));
        r.head.bias = matrix_from_json(j.at("head").at("bias"));
        if (r.head.weight.rows() != r.rgcn.output_dim() || r.head.weight.cols() != 1 || r.head.bias.size() != 1) {
            throw Error("checkpoint: score head does not match the model");
        }
        return r;
    } catch (const json::exception& e) {
        throw Error(std::string("checkpoint: ") + e.what());
    }
}

} // namespace rcdet
