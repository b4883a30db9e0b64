#pragma once

// Commit corpus schema: loading, validation and fold assignment.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace rcdet {

enum class LineKind { deleted, added };

struct ChangedLine {
    int line_no = 0; // 1-based, in the file version the line belongs to
    std::string text;
    LineKind kind = LineKind::deleted;
    bool is_root_cause = false; // deleted lines only
};

struct FileChange {
    std::string path;
    std::string old_source;
    std::string new_source;
    std::vector<ChangedLine> deleted;
    std::vector<ChangedLine> added;
};

struct CommitRecord {
    std::string commit_id;
    std::string project;
    std::vector<FileChange> files;

    std::size_t deleted_count() const;
    std::size_t root_cause_count() const;
};

/// Checks every record invariant that is a hard error. Throws `Error`
/// naming the commit and field. Returns soft problems (no deleted lines, no
/// root-cause label) as warnings so that evaluation-only corpora still load.
std::vector<std::string> validate_commit(const CommitRecord& record);

CommitRecord parse_commit(const std::string& json_text);
std::string serialize_commit(const CommitRecord& record);

/// Loads a JSONL corpus in file order. Warnings for flagged records are
/// appended to `warnings` when it is non-null.
std::vector<CommitRecord> load_dataset(const std::string& path,
                                       std::vector<std::string>* warnings = nullptr);
std::vector<CommitRecord> parse_dataset(const std::string& jsonl,
                                        std::vector<std::string>* warnings = nullptr);
void save_dataset(const std::string& path, const std::vector<CommitRecord>& records);

struct FoldAssignment {
    int k = 0;
    std::uint64_t seed = 0;
    std::map<std::string, int> assignment; // commit_id -> fold

    std::vector<std::string> fold_members(int fold) const;
    std::vector<std::size_t> fold_sizes() const;
};

// 1..3 -> 0, 4..10 -> 1, 11+ -> 2
int deleted_count_bucket(std::size_t deleted_lines);

/// Stratified fold assignment. Strata are (project, deleted-line bucket);
/// each stratum is sorted by commit_id, shuffled with one seeded stream and
/// dealt round-robin with a cursor that carries over between strata, so fold
/// sizes differ by at most one.
FoldAssignment split_folds(const std::vector<CommitRecord>& records, int k, std::uint64_t seed);

} // namespace rcdet
