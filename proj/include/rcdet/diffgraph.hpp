#pragma once

// Typed graph over the changed lines of one commit: deleted/added statement
// nodes joined by control-flow, data-dependency, call, class-member and
// line-mapping edges.

#include "rcdet/ingest.hpp"

#include <array>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace rcdet {

// Declaration order is the edge-type order used everywhere downstream.
enum class RelationKind { CFG = 0, DDG = 1, CG = 2, CMFG = 3, LINEMAP = 4 };
inline constexpr int kRelationKinds = 5;
inline constexpr std::array<RelationKind, 4> kStructuralKinds = {
    RelationKind::CFG, RelationKind::DDG, RelationKind::CG, RelationKind::CMFG};

std::string_view to_string(RelationKind kind);
RelationKind relation_from_string(std::string_view name);

enum class Version { old_version, new_version };

std::string_view to_string(Version v);

struct StmtNode {
    int id = 0;
    Version version = Version::old_version;
    std::string path;
    int line_no = 0;
    std::string text;
    bool changed = true;
    bool is_root_cause = false;
};

struct RelationGraph {
    RelationKind kind = RelationKind::CFG;
    Version version = Version::old_version;
    // successors[line_no] for line_no in [1, line_count]; index 0 unused.
    std::vector<std::vector<int>> successors;

    int line_count() const { return static_cast<int>(successors.size()) - 1; }
    std::set<std::pair<int, int>> edge_set() const;
};

struct HeteroEdge {
    int src = 0;
    int dst = 0;
    RelationKind kind = RelationKind::CFG;

    auto operator<=>(const HeteroEdge&) const = default;
};

struct HeteroGraph {
    std::string commit_id;
    std::vector<StmtNode> nodes; // deleted nodes first, then added
    std::vector<HeteroEdge> edges; // sorted, unique

    std::size_t deleted_count() const;
};

struct ExtractedNodes {
    std::vector<StmtNode> deleted;
    std::vector<StmtNode> added;
};

/// One node per non-skipped changed line. Ids are dense from 0: deleted
/// before added, then file order, then line order.
ExtractedNodes extract_nodes(const CommitRecord& commit);

std::vector<RelationGraph> build_relation_graphs(std::string_view source, Version version);

inline constexpr int kMaxContextPath = 64;

/// Edges (u, v) between distinct changed lines such that `rel` has a
/// directed path u -> v whose intermediate vertices are all unchanged lines
/// (at most `kMaxContextPath` of them). Endpoints are line numbers.
std::vector<std::pair<int, int>> lift_edges(const RelationGraph& rel, const std::set<int>& changed_lines);

double token_similarity(std::string_view a, std::string_view b);

inline constexpr double kLineMapThreshold = 0.6;

struct Hunk {
    std::vector<int> deleted_lines; // old line numbers, ascending
    std::vector<int> added_lines;   // new line numbers, ascending
};

/// Reconstructs diff hunks by walking unchanged lines of both versions in
/// lockstep; every maximal run of changes between two anchors is a hunk.
std::vector<Hunk> derive_hunks(const FileChange& file);

/// LINEMAP edges (deleted id -> added id) for one file's nodes.
std::vector<HeteroEdge> map_lines(const FileChange& file, const std::vector<StmtNode>& deleted,
                                  const std::vector<StmtNode>& added);

HeteroGraph build_graph(const CommitRecord& commit);

std::string hetero_graph_to_json(const HeteroGraph& g);
HeteroGraph hetero_graph_from_json(const std::string& text);

} // namespace rcdet
