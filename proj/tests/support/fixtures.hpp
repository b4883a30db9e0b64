#pragma once

#include "rcdet/ingest.hpp"
#include "rcdet/util.hpp"

#include <set>
#include <string>
#include <vector>

#ifndef RCDET_TEST_DATA
#error "RCDET_TEST_DATA must point at tests/data"
#endif

namespace fixture {

inline std::string data_path(const std::string& name) { return std::string(RCDET_TEST_DATA) + "/" + name; }

inline std::vector<rcdet::CommitRecord> corpus() { return rcdet::load_dataset(data_path("fixture.jsonl")); }

inline const rcdet::CommitRecord& by_id(const std::vector<rcdet::CommitRecord>& all, const std::string& id)
{
    for (const auto& c : all) {
        if (c.commit_id == id) return c;
    }
    throw rcdet::Error("fixture has no commit " + id);
}

// One-file commit from whole sources; changed lines are picked by number.
inline rcdet::FileChange file(const std::string& path, const std::string& old_src, const std::string& new_src,
                              const std::vector<int>& deleted, const std::vector<int>& added,
                              const std::set<int>& roots = {})
{
    rcdet::FileChange f;
    f.path = path;
    f.old_source = old_src;
    f.new_source = new_src;
    const auto old_lines = rcdet::split_lines(old_src);
    const auto new_lines = rcdet::split_lines(new_src);
    for (int n : deleted) {
        f.deleted.push_back({n, old_lines.at(static_cast<std::size_t>(n - 1)), rcdet::LineKind::deleted, roots.count(n) > 0});
    }
    for (int n : added) {
        f.added.push_back({n, new_lines.at(static_cast<std::size_t>(n - 1)), rcdet::LineKind::added, false});
    }
    return f;
}

inline rcdet::CommitRecord commit(const std::string& id, const std::string& project, std::vector<rcdet::FileChange> files)
{
    rcdet::CommitRecord c;
    c.commit_id = id;
    c.project = project;
    c.files = std::move(files);
    return c;
}

// A commit with `deleted` deleted lines (the first one is the root cause).
inline rcdet::CommitRecord sized_commit(const std::string& id, const std::string& project, int deleted)
{
    std::string src;
    std::vector<int> lines;
    for (int i = 1; i <= deleted; ++i) {
        src += "int v" + std::to_string(i) + " = " + std::to_string(i) + ";\n";
        lines.push_back(i);
    }
    return commit(id, project, {file("A.java", src, "", lines, {}, {1})});
}

} // namespace fixture
