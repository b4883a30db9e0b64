#include "rcdet/hetero2homo.hpp"

#include "rcdet/util.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <limits>

namespace rcdet {

std::string_view to_string(DType t)
{
    switch (t) {
    case DType::f32: return "float";
    case DType::boolean: return "bool";
    case DType::i64: return "int";
    case DType::text: return "text";
    }
    return "?";
}

std::size_t FeatureColumn::values() const
{
    return std::visit([](const auto& v) { return v.size(); }, data);
}

FeatureColumn FeatureColumn::floats(int width, std::vector<float> v)
{
    return {width, std::move(v)};
}

FeatureColumn FeatureColumn::booleans(int width, std::vector<std::uint8_t> v)
{
    return {width, std::move(v)};
}

FeatureColumn FeatureColumn::integers(int width, std::vector<std::int64_t> v)
{
    return {width, std::move(v)};
}

FeatureColumn FeatureColumn::texts(std::vector<std::string> v)
{
    return {1, std::move(v)};
}

FeatureStore default_feature_store(const HeteroGraph& g)
{
    FeatureStore store;
    for (auto version : {Version::old_version, Version::new_version}) {
        TypeFeatures t;
        t.type_name = version == Version::old_version ? "deleted" : "added";
        std::vector<std::string> text;
        std::vector<std::uint8_t> flag;
        std::vector<std::int64_t> line;
        for (const auto& n : g.nodes) {
            if (n.version != version) continue;
            text.push_back(n.text);
            flag.push_back(version == Version::new_version ? 1 : 0);
            line.push_back(n.line_no);
        }
        t.count = text.size();
        t.columns.emplace("text", FeatureColumn::texts(std::move(text)));
        t.columns.emplace("version", FeatureColumn::booleans(1, std::move(flag)));
        t.columns.emplace("line_no", FeatureColumn::integers(1, std::move(line)));
        store.node_types.push_back(std::move(t));
    }
    for (int k = 0; k < kRelationKinds; ++k) {
        TypeFeatures t;
        t.type_name = std::string(to_string(static_cast<RelationKind>(k)));
        t.count = static_cast<std::size_t>(std::count_if(g.edges.begin(), g.edges.end(), [&](const HeteroEdge& e) {
            return static_cast<int>(e.kind) == k;
        }));
        t.columns.emplace("weight", FeatureColumn::floats(1, std::vector<float>(t.count, 1.0f)));
        store.edge_types.push_back(std::move(t));
    }
    return store;
}

std::map<std::string, KeyDims> scan_dims(const std::vector<TypeFeatures>& types)
{
    std::map<std::string, KeyDims> dims;
    for (const auto& t : types) {
        for (const auto& [key, col] : t.columns) {
            if (col.width < 1) throw Error("feature '" + key + "': width must be >= 1");
            if (col.rows() != t.count || col.values() != t.count * static_cast<std::size_t>(col.width)) {
                throw Error("feature '" + key + "' on type '" + t.type_name + "': expected "
                            + std::to_string(t.count) + " rows of width " + std::to_string(col.width));
            }
            auto [it, inserted] = dims.try_emplace(key, KeyDims{col.width, col.dtype(), 0});
            if (!inserted && it->second.width != col.width) {
                throw Error("feature '" + key + "': width conflict (" + std::to_string(it->second.width)
                            + " vs " + std::to_string(col.width) + " on type '" + t.type_name + "')");
            }
            if (!inserted && it->second.dtype != col.dtype()) {
                throw Error("feature '" + key + "': dtype conflict (" + std::string(to_string(it->second.dtype))
                            + " vs " + std::string(to_string(col.dtype())) + ")");
            }
            ++it->second.present_in;
        }
    }
    return dims;
}

std::vector<TypeFeatures> fill_missing(const std::vector<TypeFeatures>& types)
{
    const auto dims = scan_dims(types);
    auto out = types;
    for (auto& t : out) {
        for (const auto& [key, d] : dims) {
            if (t.columns.contains(key)) continue;
            const std::size_t n = t.count * static_cast<std::size_t>(d.width);
            switch (d.dtype) {
            case DType::f32:
                t.columns.emplace(key, FeatureColumn::floats(d.width, std::vector<float>(n, std::numeric_limits<float>::quiet_NaN())));
                break;
            case DType::boolean:
                t.columns.emplace(key, FeatureColumn::booleans(d.width, std::vector<std::uint8_t>(n, 0)));
                break;
            case DType::i64:
                t.columns.emplace(key, FeatureColumn::integers(d.width, std::vector<std::int64_t>(n, -1)));
                break;
            case DType::text:
                throw Error("feature '" + key + "': cannot fill missing values of dtype text (type '"
                            + t.type_name + "')");
            }
        }
    }
    return out;
}

std::set<std::string> valid_keys(const std::vector<TypeFeatures>& types, FeatureSide side)
{
    std::set<std::string> keys;
    for (const auto& [key, d] : scan_dims(types)) {
        if (d.present_in == types.size()) keys.insert(key);
    }
    if (side == FeatureSide::nodes && keys.empty()) {
        throw Error("no node feature is present on every node type");
    }
    return keys;
}

std::size_t HomoGraph::type_offset(const std::vector<int>& types, int t) const
{
    return static_cast<std::size_t>(std::lower_bound(types.begin(), types.end(), t) - types.begin());
}

std::size_t HomoGraph::global_node(int type, std::size_t local) const
{
    const auto begin = type_offset(node_type, type);
    const auto end = type_offset(node_type, type + 1);
    if (local >= end - begin) throw Error("local node index out of range");
    return begin + local;
}

std::pair<int, std::size_t> HomoGraph::local_node(std::size_t global) const
{
    if (global >= node_type.size()) throw Error("global node index out of range");
    const int t = node_type[global];
    return {t, global - type_offset(node_type, t)};
}

int HomoGraph::feature_width(FeatureSide side) const
{
    int w = 0;
    for (const auto& [key, col] : side == FeatureSide::nodes ? node_features : edge_features) w += col.width;
    return w;
}

namespace {

// Appends `src` rows to `dst`, which must hold the same alternative.
void append_rows(FeatureColumn& dst, const FeatureColumn& src)
{
    std::visit(
        [&](auto& d) {
            using V = std::decay_t<decltype(d)>;
            const auto& s = std::get<V>(src.data);
            d.insert(d.end(), s.begin(), s.end());
        },
        dst.data);
}

FeatureColumn empty_like(const FeatureColumn& c)
{
    FeatureColumn out = c;
    std::visit([](auto& v) { v.clear(); }, out.data);
    return out;
}

std::map<std::string, FeatureColumn> concat(const std::vector<TypeFeatures>& types, const std::set<std::string>& keys)
{
    std::map<std::string, FeatureColumn> out;
    for (const auto& key : keys) {
        FeatureColumn merged = empty_like(types.front().columns.at(key));
        for (const auto& t : types) append_rows(merged, t.columns.at(key));
        out.emplace(key, std::move(merged));
    }
    return out;
}

} // namespace

HomoGraph merge(const HeteroGraph& graph, const FeatureStore& store)
{
    if (store.node_types.size() != 2 || store.edge_types.size() != static_cast<std::size_t>(kRelationKinds)) {
        throw Error("feature store must describe 2 node types and 5 edge types");
    }
    const auto node_keys = valid_keys(store.node_types, FeatureSide::nodes);
    const auto edge_keys = valid_keys(store.edge_types, FeatureSide::edges);

    HomoGraph h;
    h.commit_id = graph.commit_id;
    h.num_nodes = graph.nodes.size();
    for (const auto& t : store.node_types) h.node_type_names.push_back(t.type_name);
    for (const auto& t : store.edge_types) h.edge_type_names.push_back(t.type_name);

    // Node ids are already deleted-then-added, so global index == node id
    // once the per-type counts line up with the store.
    std::vector<std::size_t> counts(2, 0);
    for (const auto& n : graph.nodes) ++counts[n.version == Version::old_version ? 0 : 1];
    for (int t = 0; t < 2; ++t) {
        if (counts[static_cast<std::size_t>(t)] != store.node_types[static_cast<std::size_t>(t)].count) {
            throw Error("feature store row count for node type '" + store.node_types[static_cast<std::size_t>(t)].type_name
                        + "' does not match the graph");
        }
        h.node_type.insert(h.node_type.end(), counts[static_cast<std::size_t>(t)], t);
    }
    for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
        if (graph.nodes[i].id != static_cast<int>(i) || h.node_type[i] != (graph.nodes[i].version == Version::old_version ? 0 : 1)) {
            throw Error("graph nodes are not ordered deleted-then-added with dense ids");
        }
    }

    for (int k = 0; k < kRelationKinds; ++k) {
        std::size_t count = 0;
        for (std::size_t e = 0; e < graph.edges.size(); ++e) {
            if (static_cast<int>(graph.edges[e].kind) != k) continue;
            h.edges.emplace_back(graph.edges[e].src, graph.edges[e].dst);
            h.edge_origin.push_back(e);
            ++count;
        }
        if (count != store.edge_types[static_cast<std::size_t>(k)].count) {
            throw Error("feature store row count for edge type '" + store.edge_types[static_cast<std::size_t>(k)].type_name
                        + "' does not match the graph");
        }
        h.edge_type.insert(h.edge_type.end(), count, k);
    }

    h.node_features = concat(store.node_types, node_keys);
    h.edge_features = concat(store.edge_types, edge_keys);
    return h;
}

HomoGraph to_homogeneous(const HeteroGraph& graph, const FeatureStore& store, const ConversionOptions& options)
{
    scan_dims(store.node_types);
    scan_dims(store.edge_types);
    if (!options.fill_missing) return merge(graph, store);
    FeatureStore filled;
    filled.node_types = fill_missing(store.node_types);
    filled.edge_types = fill_missing(store.edge_types);
    return merge(graph, filled);
}

HomoGraph to_homogeneous(const HeteroGraph& graph, const ConversionOptions& options)
{
    return to_homogeneous(graph, default_feature_store(graph), options);
}

namespace {

nlohmann::json columns_to_json(const std::map<std::string, FeatureColumn>& cols)
{
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [key, col] : cols) {
        nlohmann::json entry = {{"dtype", to_string(col.dtype())}, {"width", col.width}};
        std::visit(
            [&](const auto& v) {
                using T = typename std::decay_t<decltype(v)>::value_type;
                if constexpr (std::is_same_v<T, std::string>) {
                    entry["values"] = v;
                } else {
                    std::vector<float> f(v.begin(), v.end());
                    entry["data"] = encode_f32(f);
                }
            },
            col.data);
        out[key] = std::move(entry);
    }
    return out;
}

std::map<std::string, FeatureColumn> columns_from_json(const nlohmann::json& j)
{
    std::map<std::string, FeatureColumn> out;
    for (const auto& [key, entry] : j.items()) {
        const auto dtype = entry.at("dtype").get<std::string>();
        const int width = entry.at("width").get<int>();
        if (dtype == "text") {
            out.emplace(key, FeatureColumn::texts(entry.at("values").get<std::vector<std::string>>()));
            continue;
        }
        const auto f = decode_f32(entry.at("data").get<std::string>());
        if (dtype == "float") {
            out.emplace(key, FeatureColumn::floats(width, f));
        } else if (dtype == "bool") {
            out.emplace(key, FeatureColumn::booleans(width, {f.begin(), f.end()}));
        } else if (dtype == "int") {
            std::vector<std::int64_t> v(f.size());
            std::transform(f.begin(), f.end(), v.begin(), [](float x) { return static_cast<std::int64_t>(x); });
            out.emplace(key, FeatureColumn::integers(width, std::move(v)));
        } else {
            throw Error("unknown feature dtype '" + dtype + "'");
        }
    }
    return out;
}

} // namespace

std::string homo_graph_to_json(const HomoGraph& g)
{
    using nlohmann::json;
    json widths = json::object();
    for (const auto& [key, col] : g.node_features) widths["nodes"][key] = col.width;
    for (const auto& [key, col] : g.edge_features) widths["edges"][key] = col.width;
    json edges = json::array();
    for (auto [s, d] : g.edges) edges.push_back({s, d});
    json j = {{"commit_id", g.commit_id},
              {"num_nodes", g.num_nodes},
              {"num_edges", g.edges.size()},
              {"node_type_map", g.node_type_names},
              {"edge_type_map", g.edge_type_names},
              {"feature_widths", widths},
              {"edges", std::move(edges)},
              {"edge_origin", g.edge_origin},
              {"node_type", g.node_type},
              {"edge_type", g.edge_type},
              {"node_features", columns_to_json(g.node_features)},
              {"edge_features", columns_to_json(g.edge_features)}};
    return j.dump(1);
}

HomoGraph homo_graph_from_json(const std::string& text)
{
    using nlohmann::json;
    HomoGraph g;
    try {
        const auto j = json::parse(text);
        g.commit_id = j.at("commit_id").get<std::string>();
        g.num_nodes = j.at("num_nodes").get<std::size_t>();
        g.node_type_names = j.at("node_type_map").get<std::vector<std::string>>();
        g.edge_type_names = j.at("edge_type_map").get<std::vector<std::string>>();
        for (const auto& e : j.at("edges")) g.edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
        g.edge_origin = j.at("edge_origin").get<std::vector<std::size_t>>();
        g.node_type = j.at("node_type").get<std::vector<int>>();
        g.edge_type = j.at("edge_type").get<std::vector<int>>();
        g.node_features = columns_from_json(j.at("node_features"));
        g.edge_features = columns_from_json(j.at("edge_features"));
    } catch (const json::exception& e) {
        throw Error(std::string("homogeneous graph JSON: ") + e.what());
    }
    if (g.node_type.size() != g.num_nodes || g.edge_type.size() != g.edges.size()) {
        throw Error("homogeneous graph JSON: type vectors do not match counts");
    }
    return g;
}

} // namespace rcdet
