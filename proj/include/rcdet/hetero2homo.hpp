#pragma once

// Heterogeneous -> homogeneous graph conversion. Per-type feature stores are
// reconciled (width scan, dummy filling, key intersection), concatenated in
// a fixed type order, and type membership is kept as node_type/edge_type
// vectors.

#include "rcdet/diffgraph.hpp"

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace rcdet {

enum class DType { f32, boolean, i64, text };

std::string_view to_string(DType t);

/// Row-major column of `rows() * width` values.
struct FeatureColumn {
    int width = 1;
    std::variant<std::vector<float>, std::vector<std::uint8_t>, std::vector<std::int64_t>,
                 std::vector<std::string>>
        data;

    DType dtype() const { return static_cast<DType>(data.index()); }
    std::size_t values() const;
    std::size_t rows() const { return width > 0 ? values() / static_cast<std::size_t>(width) : 0; }

    static FeatureColumn floats(int width, std::vector<float> v);
    static FeatureColumn booleans(int width, std::vector<std::uint8_t> v);
    static FeatureColumn integers(int width, std::vector<std::int64_t> v);
    static FeatureColumn texts(std::vector<std::string> v);
};

struct TypeFeatures {
    std::string type_name;
    std::size_t count = 0; // rows of this type
    std::map<std::string, FeatureColumn> columns;
};

struct FeatureStore {
    std::vector<TypeFeatures> node_types; // deleted, added
    std::vector<TypeFeatures> edge_types; // CFG, DDG, CG, CMFG, LINEMAP
};

/// Node features: "text", "version" (bool, true = new) and "line_no";
/// edge features: a unit "weight".
FeatureStore default_feature_store(const HeteroGraph& g);

struct KeyDims {
    int width = 0;
    DType dtype = DType::f32;
    std::size_t present_in = 0; // number of types carrying the key
};

/// Widths of every key across `types`. Throws when one key has conflicting
/// widths or dtypes in different types.
std::map<std::string, KeyDims> scan_dims(const std::vector<TypeFeatures>& types);

/// Missing keys are added with dummies: NaN for float, false for boolean,
/// -1 for integer. Text keys cannot be filled.
std::vector<TypeFeatures> fill_missing(const std::vector<TypeFeatures>& types);

enum class FeatureSide { nodes, edges };

/// Keys present in every type. An empty result on the node side is an error.
std::set<std::string> valid_keys(const std::vector<TypeFeatures>& types, FeatureSide side);

struct HomoGraph {
    std::string commit_id;
    std::size_t num_nodes = 0;
    std::vector<std::pair<int, int>> edges; // global node indices
    std::vector<int> node_type;
    std::vector<int> edge_type;
    std::vector<std::string> node_type_names;
    std::vector<std::string> edge_type_names;
    std::map<std::string, FeatureColumn> node_features; // X_Ho, one column block per key
    std::map<std::string, FeatureColumn> edge_features; // Y_Ho
    std::vector<std::size_t> edge_origin; // index into the source HeteroGraph's edges

    std::size_t type_offset(const std::vector<int>& types, int t) const;
    std::size_t global_node(int type, std::size_t local) const;
    std::pair<int, std::size_t> local_node(std::size_t global) const;
    int feature_width(FeatureSide side) const;
};

HomoGraph merge(const HeteroGraph& graph, const FeatureStore& store);

struct ConversionOptions {
    bool fill_missing = false;
};

HomoGraph to_homogeneous(const HeteroGraph& graph, const FeatureStore& store,
                         const ConversionOptions& options = {});
HomoGraph to_homogeneous(const HeteroGraph& graph, const ConversionOptions& options = {});

std::string homo_graph_to_json(const HomoGraph& g);
HomoGraph homo_graph_from_json(const std::string& text);

} // namespace rcdet
