#include "rcdet/diffgraph.hpp"

#include "rcdet/analyzer.hpp"
#include "rcdet/util.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <deque>
#include <map>
#include <tuple>

namespace rcdet {

std::string_view to_string(RelationKind kind)
{
    switch (kind) {
    case RelationKind::CFG: return "CFG";
    case RelationKind::DDG: return "DDG";
    case RelationKind::CG: return "CG";
    case RelationKind::CMFG: return "CMFG";
    case RelationKind::LINEMAP: return "LINEMAP";
    }
    return "?";
}

RelationKind relation_from_string(std::string_view name)
{
    for (int k = 0; k < kRelationKinds; ++k) {
        if (to_string(static_cast<RelationKind>(k)) == name) return static_cast<RelationKind>(k);
    }
    throw Error("unknown relation kind '" + std::string(name) + "'");
}

std::string_view to_string(Version v)
{
    return v == Version::old_version ? "old" : "new";
}

std::set<std::pair<int, int>> RelationGraph::edge_set() const
{
    std::set<std::pair<int, int>> out;
    for (int u = 1; u < static_cast<int>(successors.size()); ++u) {
        for (int v : successors[static_cast<std::size_t>(u)]) out.emplace(u, v);
    }
    return out;
}

std::size_t HeteroGraph::deleted_count() const
{
    return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const StmtNode& n) {
        return n.version == Version::old_version;
    }));
}

ExtractedNodes extract_nodes(const CommitRecord& commit)
{
    ExtractedNodes out;
    auto collect = [&](Version version, std::vector<StmtNode>& sink) {
        for (const auto& file : commit.files) {
            const auto& source = version == Version::old_version ? file.old_source : file.new_source;
            const auto& changed = version == Version::old_version ? file.deleted : file.added;
            if (changed.empty()) continue;
            // Comment state has to be tracked over the whole file.
            const auto analysis = analyze_source(source);
            auto lines = changed;
            std::sort(lines.begin(), lines.end(),
                      [](const ChangedLine& a, const ChangedLine& b) { return a.line_no < b.line_no; });
            for (const auto& line : lines) {
                if (!analysis.line(line.line_no).is_code()) continue;
                StmtNode node;
                node.version = version;
                node.path = file.path;
                node.line_no = line.line_no;
                node.text = line.text;
                node.is_root_cause = line.is_root_cause;
                sink.push_back(std::move(node));
            }
        }
    };
    collect(Version::old_version, out.deleted);
    collect(Version::new_version, out.added);
    int id = 0;
    for (auto& n : out.deleted) n.id = id++;
    for (auto& n : out.added) n.id = id++;
    return out;
}

namespace {

struct ScopeEntry {
    int def_line = 0;
    bool declared = false;
};

class RelationBuilder {
public:
    RelationBuilder(const SourceAnalysis& a, int n) : a_(a)
    {
        for (auto& s : succ_) s.resize(static_cast<std::size_t>(n) + 1);
    }

    std::array<std::vector<std::vector<int>>, 4> build()
    {
        control_flow();
        dependencies_and_members();
        calls();
        for (auto& s : succ_) {
            for (auto& list : s) {
                std::sort(list.begin(), list.end());
                list.erase(std::unique(list.begin(), list.end()), list.end());
            }
        }
        return std::move(succ_);
    }

private:
    void edge(RelationKind kind, int u, int v)
    {
        if (u == v) return;
        succ_[static_cast<std::size_t>(kind)][static_cast<std::size_t>(u)].push_back(v);
    }

    const Block& block(int id) const { return a_.blocks[static_cast<std::size_t>(id)]; }

    void control_flow()
    {
        for (const auto& b : a_.blocks) {
            for (std::size_t i = 0; i + 1 < b.members.size(); ++i) {
                edge(RelationKind::CFG, b.members[i], b.members[i + 1]);
            }
            if (b.header_line > 0 && !b.members.empty()) {
                edge(RelationKind::CFG, b.header_line, b.members.front());
            }
        }
    }

    // Blocks visible for variable lookup, innermost first, ending at the
    // enclosing method, class body or root.
    std::vector<int> scope_chain(int b) const
    {
        std::vector<int> chain;
        while (b >= 0) {
            chain.push_back(b);
            if (block(b).kind == BlockKind::root || block(b).kind == BlockKind::method_body
                || block(b).kind == BlockKind::class_body) {
                break;
            }
            b = block(b).parent;
        }
        return chain;
    }

    int enclosing_class(int b) const
    {
        while (b >= 0 && block(b).kind != BlockKind::class_body) b = block(b).parent;
        return b;
    }

    ScopeEntry* lookup(const std::vector<int>& chain, const std::string& name)
    {
        for (int b : chain) {
            auto& scope = scopes_[b];
            if (auto it = scope.find(name); it != scope.end()) return &it->second;
        }
        return nullptr;
    }

    bool shadowed(const std::vector<int>& chain, const std::string& name)
    {
        for (int b : chain) {
            if (block(b).kind == BlockKind::class_body) continue;
            auto& scope = scopes_[b];
            if (auto it = scope.find(name); it != scope.end() && it->second.declared) return true;
        }
        return false;
    }

    void dependencies_and_members()
    {
        // Fields: declarations made directly in a class body.
        std::map<int, std::map<std::string, int>> fields;
        for (const auto& line : a_.lines) {
            if (!line.is_code() || line.is_method_decl) continue;
            if (block(line.block).kind != BlockKind::class_body) continue;
            for (const auto& d : line.defs) {
                if (d.declaration) fields[line.block].emplace(d.name, line.line_no);
            }
        }

        for (const auto& line : a_.lines) {
            if (!line.is_code()) continue;
            const auto chain = scope_chain(line.block);
            const int cls = enclosing_class(line.block);
            const auto* class_fields = cls >= 0 && fields.contains(cls) ? &fields.at(cls) : nullptr;

            auto member_ref = [&](const std::string& name, bool explicit_this) {
                if (!class_fields) return;
                const auto it = class_fields->find(name);
                if (it == class_fields->end()) return;
                if (!explicit_this && shadowed(chain, name)) return;
                edge(RelationKind::CMFG, it->second, line.line_no);
            };

            for (const auto& use : line.uses) {
                if (const auto* e = lookup(chain, use)) edge(RelationKind::DDG, e->def_line, line.line_no);
                member_ref(use, false);
            }
            for (const auto& f : line.this_fields) member_ref(f, true);

            const bool header_scoped =
                line.opened_block >= 0
                && (line.is_method_decl || starts_with(line, "for") || starts_with(line, "catch"));
            for (const auto& d : line.defs) {
                if (d.declaration) {
                    const int target = header_scoped ? line.opened_block : line.block;
                    scopes_[target][d.name] = {line.line_no, true};
                    continue;
                }
                member_ref(d.name, false);
                if (auto* e = lookup(chain, d.name)) {
                    e->def_line = line.line_no;
                } else {
                    scopes_[chain.back()][d.name] = {line.line_no, false};
                }
            }
        }
    }

    static bool starts_with(const LineFacts& line, std::string_view word)
    {
        for (const auto& t : line.tokens) {
            if (t.is("}") || t.is("else")) continue;
            return t.is(word);
        }
        return false;
    }

    void calls()
    {
        for (const auto& line : a_.lines) {
            for (const auto& call : line.calls) {
                for (const auto& m : a_.methods) {
                    if (m.name == call.name && m.arity == call.arity) {
                        edge(RelationKind::CG, line.line_no, m.line_no);
                    }
                }
            }
        }
    }

    const SourceAnalysis& a_;
    std::array<std::vector<std::vector<int>>, 4> succ_;
    std::map<int, std::map<std::string, ScopeEntry>> scopes_;
};

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b)
{
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

} // namespace

std::vector<RelationGraph> build_relation_graphs(std::string_view source, Version version)
{
    const auto analysis = analyze_source(source);
    const int n = static_cast<int>(analysis.lines.size());
    auto succ = RelationBuilder(analysis, n).build();
    std::vector<RelationGraph> out;
    for (auto kind : kStructuralKinds) {
        RelationGraph g;
        g.kind = kind;
        g.version = version;
        g.successors = std::move(succ[static_cast<std::size_t>(kind)]);
        out.push_back(std::move(g));
    }
    return out;
}

std::vector<std::pair<int, int>> lift_edges(const RelationGraph& rel, const std::set<int>& changed_lines)
{
    std::vector<std::pair<int, int>> out;
    const int n = rel.line_count();
    std::vector<int> level(static_cast<std::size_t>(n) + 1);
    for (int u : changed_lines) {
        if (u < 1 || u > n) continue;
        std::fill(level.begin(), level.end(), -1);
        std::vector<int> targets;
        // level[w] = fewest context vertices on a path u -> ... -> w, w included.
        std::deque<int> queue;
        auto visit_successors = [&](int from, int from_level) {
            for (int w : rel.successors[static_cast<std::size_t>(from)]) {
                if (w == u) continue;
                if (changed_lines.contains(w)) {
                    targets.push_back(w);
                    continue;
                }
                if (level[static_cast<std::size_t>(w)] >= 0 || from_level + 1 > kMaxContextPath) continue;
                level[static_cast<std::size_t>(w)] = from_level + 1;
                queue.push_back(w);
            }
        };
        visit_successors(u, 0);
        while (!queue.empty()) {
            const int c = queue.front();
            queue.pop_front();
            visit_successors(c, level[static_cast<std::size_t>(c)]);
        }
        std::sort(targets.begin(), targets.end());
        targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
        for (int v : targets) out.emplace_back(u, v);
    }
    return out;
}

double token_similarity(std::string_view a, std::string_view b)
{
    const auto ta = normalized_tokens(a);
    const auto tb = normalized_tokens(b);
    if (ta.empty() && tb.empty()) return 0.0;
    return 2.0 * static_cast<double>(lcs_length(ta, tb)) / static_cast<double>(ta.size() + tb.size());
}

std::vector<Hunk> derive_hunks(const FileChange& file)
{
    std::set<int> del, add;
    for (const auto& d : file.deleted) del.insert(d.line_no);
    for (const auto& a : file.added) add.insert(a.line_no);
    const int n_old = static_cast<int>(split_lines(file.old_source).size());
    const int n_new = static_cast<int>(split_lines(file.new_source).size());
    std::vector<Hunk> hunks;
    int i = 1, j = 1;
    while (i <= n_old || j <= n_new) {
        Hunk cur;
        while (i <= n_old && del.contains(i)) cur.deleted_lines.push_back(i++);
        while (j <= n_new && add.contains(j)) cur.added_lines.push_back(j++);
        if (!cur.deleted_lines.empty() || !cur.added_lines.empty()) hunks.push_back(std::move(cur));
        if (i <= n_old) ++i;
        if (j <= n_new) ++j;
    }
    return hunks;
}

std::vector<HeteroEdge> map_lines(const FileChange& file, const std::vector<StmtNode>& deleted,
                                  const std::vector<StmtNode>& added)
{
    std::map<int, const StmtNode*> del_by_line, add_by_line;
    for (const auto& n : deleted) {
        if (n.path == file.path) del_by_line[n.line_no] = &n;
    }
    for (const auto& n : added) {
        if (n.path == file.path) add_by_line[n.line_no] = &n;
    }
    std::vector<HeteroEdge> out;
    for (const auto& hunk : derive_hunks(file)) {
        if (hunk.deleted_lines.empty() || hunk.added_lines.empty()) continue;
        // (-similarity, offset distance, deleted line, added line)
        std::vector<std::tuple<double, int, int, int>> candidates;
        for (int dl : hunk.deleted_lines) {
            const auto d = del_by_line.find(dl);
            if (d == del_by_line.end()) continue;
            for (int al : hunk.added_lines) {
                const auto a = add_by_line.find(al);
                if (a == add_by_line.end()) continue;
                const double sim = token_similarity(d->second->text, a->second->text);
                if (sim < kLineMapThreshold) continue;
                const int distance = std::abs((dl - hunk.deleted_lines.front()) - (al - hunk.added_lines.front()));
                candidates.emplace_back(-sim, distance, dl, al);
            }
        }
        std::sort(candidates.begin(), candidates.end());
        std::set<int> used_del, used_add;
        for (const auto& [neg_sim, distance, dl, al] : candidates) {
            if (used_del.contains(dl) || used_add.contains(al)) continue;
            used_del.insert(dl);
            used_add.insert(al);
            out.push_back({del_by_line[dl]->id, add_by_line[al]->id, RelationKind::LINEMAP});
        }
    }
    return out;
}

HeteroGraph build_graph(const CommitRecord& commit)
{
    HeteroGraph g;
    g.commit_id = commit.commit_id;
    auto nodes = extract_nodes(commit);

    std::set<HeteroEdge> edges;
    auto lift_version = [&](const FileChange& file, Version version, const std::vector<StmtNode>& pool) {
        std::map<int, int> id_of_line;
        for (const auto& n : pool) {
            if (n.path == file.path) id_of_line[n.line_no] = n.id;
        }
        if (id_of_line.empty()) return;
        std::set<int> changed;
        for (const auto& [line, id] : id_of_line) changed.insert(line);
        const auto& source = version == Version::old_version ? file.old_source : file.new_source;
        for (const auto& rel : build_relation_graphs(source, version)) {
            for (auto [u, v] : lift_edges(rel, changed)) {
                edges.insert({id_of_line.at(u), id_of_line.at(v), rel.kind});
            }
        }
    };
    for (const auto& file : commit.files) {
        lift_version(file, Version::old_version, nodes.deleted);
        lift_version(file, Version::new_version, nodes.added);
        for (const auto& e : map_lines(file, nodes.deleted, nodes.added)) edges.insert(e);
    }

    g.nodes = std::move(nodes.deleted);
    g.nodes.insert(g.nodes.end(), std::make_move_iterator(nodes.added.begin()),
                   std::make_move_iterator(nodes.added.end()));
    g.edges.assign(edges.begin(), edges.end());
    return g;
}

std::string hetero_graph_to_json(const HeteroGraph& g)
{
    using nlohmann::json;
    json nodes = json::array();
    for (const auto& n : g.nodes) {
        nodes.push_back({{"id", n.id},
                         {"version", to_string(n.version)},
                         {"path", n.path},
                         {"line_no", n.line_no},
                         {"text", n.text},
                         {"changed", n.changed},
                         {"is_root_cause", n.is_root_cause}});
    }
    json edges = json::array();
    for (const auto& e : g.edges) {
        edges.push_back({{"src", e.src}, {"dst", e.dst}, {"kind", to_string(e.kind)}});
    }
    return json{{"commit_id", g.commit_id}, {"nodes", std::move(nodes)}, {"edges", std::move(edges)}}.dump(1);
}

HeteroGraph hetero_graph_from_json(const std::string& text)
{
    using nlohmann::json;
    HeteroGraph g;
    try {
        const auto j = json::parse(text);
        g.commit_id = j.at("commit_id").get<std::string>();
        for (const auto& n : j.at("nodes")) {
            StmtNode node;
            node.id = n.at("id").get<int>();
            const auto version = n.at("version").get<std::string>();
            if (version != "old" && version != "new") throw Error("bad node version '" + version + "'");
            node.version = version == "old" ? Version::old_version : Version::new_version;
            node.path = n.value("path", std::string{});
            node.line_no = n.at("line_no").get<int>();
            node.text = n.at("text").get<std::string>();
            node.changed = n.at("changed").get<bool>();
            node.is_root_cause = n.value("is_root_cause", false);
            g.nodes.push_back(std::move(node));
        }
        for (const auto& e : j.at("edges")) {
            g.edges.push_back({e.at("src").get<int>(), e.at("dst").get<int>(),
                               relation_from_string(e.at("kind").get<std::string>())});
        }
    } catch (const json::exception& e) {
        throw Error(std::string("graph JSON: ") + e.what());
    }
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        if (g.nodes[i].id != static_cast<int>(i)) throw Error("graph JSON: node ids are not dense");
    }
    for (const auto& e : g.edges) {
        if (e.src < 0 || e.dst < 0 || e.src >= static_cast<int>(g.nodes.size())
            || e.dst >= static_cast<int>(g.nodes.size())) {
            throw Error("graph JSON: edge endpoint out of range");
        }
    }
    return g;
}

} // namespace rcdet
