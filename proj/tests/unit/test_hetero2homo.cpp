#include "fixtures.hpp"
#include "oracles.hpp"

#include "rcdet/hetero2homo.hpp"

#include <doctest.h>

#include <cmath>

using namespace rcdet;

namespace {

HeteroGraph small_graph(int del, int add, const std::vector<HeteroEdge>& edges)
{
    HeteroGraph g;
    g.commit_id = "small";
    for (int i = 0; i < del + add; ++i) {
        StmtNode n;
        n.id = i;
        n.version = i < del ? Version::old_version : Version::new_version;
        n.path = "A.java";
        n.line_no = i + 1;
        n.text = "line" + std::to_string(i);
        g.nodes.push_back(n);
    }
    g.edges = edges;
    return g;
}

TypeFeatures type_with(const std::string& name, std::size_t count, std::map<std::string, FeatureColumn> cols)
{
    return {name, count, std::move(cols)};
}

} // namespace

TEST_CASE("scan_dims")
{
    const auto emb = [](std::size_t rows, int w) { return FeatureColumn::floats(w, std::vector<float>(rows * static_cast<std::size_t>(w), 0.5f)); };
    SUBCASE("shared key")
    {
        const auto d = scan_dims({type_with("deleted", 2, {{"emb", emb(2, 128)}}), type_with("added", 1, {{"emb", emb(1, 128)}})});
        REQUIRE(d.size() == 1);
        CHECK(d.at("emb").width == 128);
        CHECK(d.at("emb").present_in == 2);
    }
    SUBCASE("key on one type")
    {
        const auto d = scan_dims({type_with("deleted", 2, {{"emb", emb(2, 4)}, {"flag", FeatureColumn::booleans(1, {1, 0})}}),
                                  type_with("added", 1, {{"emb", emb(1, 4)}})});
        CHECK(d.at("flag").present_in == 1);
    }
    SUBCASE("width conflict names the key")
    {
        try {
            scan_dims({type_with("deleted", 1, {{"emb", emb(1, 128)}}), type_with("added", 1, {{"emb", emb(1, 64)}})});
            FAIL("expected a width conflict");
        } catch (const Error& e) {
            CHECK(std::string(e.what()).find("'emb'") != std::string::npos);
        }
    }
}

TEST_CASE("fill_missing uses a dummy per dtype")
{
    std::vector<TypeFeatures> types = {
        type_with("deleted", 2,
                  {{"score", FeatureColumn::floats(3, std::vector<float>(6, 1.0f))},
                   {"flag", FeatureColumn::booleans(1, {1, 1})},
                   {"idx", FeatureColumn::integers(2, {4, 5, 6, 7})}}),
        type_with("added", 3, {}),
    };
    const auto filled = fill_missing(types);
    const auto& added = filled[1].columns;
    const auto& score = std::get<std::vector<float>>(added.at("score").data);
    CHECK(score.size() == 9);
    for (float v : score) CHECK(std::isnan(v));
    CHECK(std::get<std::vector<std::uint8_t>>(added.at("flag").data) == std::vector<std::uint8_t>(3, 0));
    CHECK(std::get<std::vector<std::int64_t>>(added.at("idx").data) == std::vector<std::int64_t>(6, -1));
    // present values are untouched
    CHECK(std::get<std::vector<std::int64_t>>(filled[0].columns.at("idx").data) == std::vector<std::int64_t>{4, 5, 6, 7});

    types[0].columns.emplace("text", FeatureColumn::texts({"a", "b"}));
    CHECK_THROWS_AS(fill_missing(types), Error);
}

TEST_CASE("valid_keys is an intersection")
{
    const auto f = [](std::size_t n) { return FeatureColumn::floats(1, std::vector<float>(n, 0.0f)); };
    CHECK(valid_keys({type_with("deleted", 1, {{"text_emb", f(1)}, {"del_only", f(1)}}), type_with("added", 1, {{"text_emb", f(1)}})},
                     FeatureSide::nodes)
          == std::set<std::string>{"text_emb"});
    CHECK(valid_keys({type_with("deleted", 1, {{"a", f(1)}, {"b", f(1)}})}, FeatureSide::nodes) == std::set<std::string>{"a", "b"});
    CHECK_THROWS_AS(valid_keys({type_with("deleted", 1, {{"a", f(1)}}), type_with("added", 1, {{"b", f(1)}})}, FeatureSide::nodes), Error);
    CHECK(valid_keys({type_with("CFG", 0, {{"a", f(0)}}), type_with("DDG", 0, {})}, FeatureSide::edges).empty());
}

TEST_CASE("merge: type vectors repeat each type id by its count")
{
    const auto g = small_graph(2, 3, {{0, 1, RelationKind::CFG}, {0, 1, RelationKind::DDG}, {2, 3, RelationKind::DDG}});
    const auto h = to_homogeneous(g);
    CHECK(h.node_type == std::vector<int>{0, 0, 1, 1, 1});
    CHECK(h.edge_type == std::vector<int>{0, 1, 1});
    CHECK(h.node_type_names == std::vector<std::string>{"deleted", "added"});
    CHECK(h.edge_type_names.size() == 5);
    CHECK(h.edge_type_names[4] == "LINEMAP");
}

TEST_CASE("merge: edges are grouped by kind in declaration order")
{
    const auto g = small_graph(2, 2, {{0, 2, RelationKind::LINEMAP}, {0, 1, RelationKind::CFG}, {2, 3, RelationKind::CG}});
    const auto h = to_homogeneous(g);
    CHECK(h.edges == std::vector<std::pair<int, int>>{{0, 1}, {2, 3}, {0, 2}});
    CHECK(h.edge_type == std::vector<int>{0, 2, 4});
    CHECK(h.edge_origin == std::vector<std::size_t>{1, 2, 0});
}

TEST_CASE("motivation commit conversion")
{
    const auto all = fixture::corpus();
    const auto g = build_graph(fixture::by_id(all, "closure-motivation"));
    const auto store = default_feature_store(g);
    const auto h = to_homogeneous(g, store);
    CHECK(h.num_nodes == 12);
    CHECK(h.node_type == std::vector<int>{0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1});
    const auto& text = std::get<std::vector<std::string>>(h.node_features.at("text").data);
    const auto& lines = std::get<std::vector<std::int64_t>>(h.node_features.at("line_no").data);
    REQUIRE(text.size() == 12);
    for (std::size_t i = 0; i < 12; ++i) {
        CHECK(text[i] == g.nodes[i].text);
        CHECK(lines[i] == g.nodes[i].line_no);
    }
    CHECK(oracle::conversion_mismatch(g, store, h).empty());
}

TEST_CASE("strict presence drops partial keys unless filling is requested")
{
    const auto g = small_graph(1, 1, {});
    auto store = default_feature_store(g);
    store.node_types[0].columns.emplace("del_only", FeatureColumn::floats(2, {1.0f, 2.0f}));
    CHECK_FALSE(to_homogeneous(g, store).node_features.count("del_only"));
    const auto filled = to_homogeneous(g, store, {.fill_missing = true});
    const auto& v = std::get<std::vector<float>>(filled.node_features.at("del_only").data);
    REQUIRE(v.size() == 4);
    CHECK(v[0] == 1.0f);
    CHECK(v[1] == 2.0f);
    CHECK(std::isnan(v[2]));
    CHECK(std::isnan(v[3]));
}

TEST_CASE("store and graph must agree")
{
    const auto g = small_graph(2, 1, {{0, 1, RelationKind::CFG}});
    auto store = default_feature_store(g);
    store.node_types[0].count = 1;
    CHECK_THROWS_AS(merge(g, store), Error);

    auto bad = g;
    std::swap(bad.nodes[1], bad.nodes[2]);
    CHECK_THROWS_AS(to_homogeneous(bad), Error);
}

TEST_CASE("randomized conversions preserve everything retained")
{
    Rng rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        const auto g = oracle::random_hetero_graph(rng);
        const auto store = oracle::random_feature_store(g, rng);
        const auto h = to_homogeneous(g, store);
        const auto mismatch = oracle::conversion_mismatch(g, store, h);
        CAPTURE(trial);
        CHECK(mismatch == "");
        // serialization keeps the numeric columns bit-exact
        const auto back = homo_graph_from_json(homo_graph_to_json(h));
        CHECK(back.node_type == h.node_type);
        CHECK(back.edge_type == h.edge_type);
        CHECK(back.edges == h.edges);
        for (const auto& [key, col] : h.node_features) {
            if (col.dtype() != DType::f32) continue;
            for (std::size_t r = 0; r < col.rows(); ++r) CHECK(oracle::row_bytes(back.node_features.at(key), r) == oracle::row_bytes(col, r));
        }
    }
}
