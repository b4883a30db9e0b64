#include "rcdet/ingest.hpp"

#include "rcdet/util.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <set>
#include <sstream>
#include <tuple>

namespace rcdet {

using nlohmann::json;

std::size_t CommitRecord::deleted_count() const
{
    std::size_t n = 0;
    for (const auto& f : files) n += f.deleted.size();
    return n;
}

std::size_t CommitRecord::root_cause_count() const
{
    std::size_t n = 0;
    for (const auto& f : files) {
        for (const auto& d : f.deleted) n += d.is_root_cause ? 1 : 0;
    }
    return n;
}

namespace {

[[noreturn]] void schema_error(const std::string& commit, const std::string& field,
                               const std::string& what)
{
    throw Error("commit '" + commit + "': field '" + field + "': " + what);
}

void check_lines(const std::string& commit, const FileChange& file,
                 const std::vector<ChangedLine>& lines, const std::string& source,
                 const char* field)
{
    const auto source_lines = split_lines(source);
    std::set<int> seen;
    for (const auto& line : lines) {
        const std::string where = file.path + "." + field;
        if (line.line_no < 1) {
            schema_error(commit, where, "line_no " + std::to_string(line.line_no) + " < 1");
        }
        if (static_cast<std::size_t>(line.line_no) > source_lines.size()) {
            schema_error(commit, where,
                         "line_no " + std::to_string(line.line_no) + " beyond end of source ("
                             + std::to_string(source_lines.size()) + " lines)");
        }
        if (!seen.insert(line.line_no).second) {
            schema_error(commit, where, "duplicate line_no " + std::to_string(line.line_no));
        }
        if (rtrim(line.text) != rtrim(source_lines[line.line_no - 1])) {
            schema_error(commit, where,
                         "text of line " + std::to_string(line.line_no)
                             + " does not match the source");
        }
        if (line.kind == LineKind::added && line.is_root_cause) {
            schema_error(commit, where, "added line marked as root cause");
        }
    }
}

template <typename T>
T get_field(const json& obj, const char* key, const std::string& commit, const std::string& ctx)
{
    const auto it = obj.find(key);
    if (it == obj.end()) {
        schema_error(commit, ctx.empty() ? key : ctx + "." + key, "missing");
    }
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        schema_error(commit, ctx.empty() ? key : ctx + "." + key, "wrong type");
    }
}

ChangedLine parse_line(const json& j, LineKind kind, const std::string& commit,
                       const std::string& ctx)
{
    if (!j.is_object()) schema_error(commit, ctx, "expected an object");
    ChangedLine line;
    line.kind = kind;
    line.line_no = get_field<int>(j, "line_no", commit, ctx);
    line.text = get_field<std::string>(j, "text", commit, ctx);
    if (kind == LineKind::deleted) {
        line.is_root_cause = get_field<bool>(j, "is_root_cause", commit, ctx);
    } else if (j.contains("is_root_cause")) {
        line.is_root_cause = get_field<bool>(j, "is_root_cause", commit, ctx);
    }
    return line;
}

CommitRecord from_json(const json& j)
{
    if (!j.is_object()) throw Error("record is not a JSON object");
    CommitRecord rec;
    rec.commit_id = get_field<std::string>(j, "commit_id", "<unknown>", "");
    const auto& id = rec.commit_id;
    rec.project = get_field<std::string>(j, "project", id, "");
    const auto files = get_field<json>(j, "files", id, "");
    if (!files.is_array()) schema_error(id, "files", "expected an array");
    for (std::size_t fi = 0; fi < files.size(); ++fi) {
        const auto& f = files[fi];
        const std::string ctx = "files[" + std::to_string(fi) + "]";
        if (!f.is_object()) schema_error(id, ctx, "expected an object");
        FileChange fc;
        fc.path = get_field<std::string>(f, "path", id, ctx);
        fc.old_source = get_field<std::string>(f, "old_source", id, ctx);
        fc.new_source = get_field<std::string>(f, "new_source", id, ctx);
        const auto del = get_field<json>(f, "deleted", id, ctx);
        const auto add = get_field<json>(f, "added", id, ctx);
        if (!del.is_array()) schema_error(id, ctx + ".deleted", "expected an array");
        if (!add.is_array()) schema_error(id, ctx + ".added", "expected an array");
        for (std::size_t i = 0; i < del.size(); ++i) {
            fc.deleted.push_back(parse_line(del[i], LineKind::deleted, id,
                                            ctx + ".deleted[" + std::to_string(i) + "]"));
        }
        for (std::size_t i = 0; i < add.size(); ++i) {
            fc.added.push_back(parse_line(add[i], LineKind::added, id,
                                          ctx + ".added[" + std::to_string(i) + "]"));
        }
        rec.files.push_back(std::move(fc));
    }
    return rec;
}

json to_json(const CommitRecord& rec)
{
    json files = json::array();
    for (const auto& f : rec.files) {
        json del = json::array();
        for (const auto& d : f.deleted) {
            del.push_back({{"line_no", d.line_no}, {"text", d.text}, {"is_root_cause", d.is_root_cause}});
        }
        json add = json::array();
        for (const auto& a : f.added) {
            add.push_back({{"line_no", a.line_no}, {"text", a.text}});
        }
        files.push_back({{"path", f.path},
                         {"old_source", f.old_source},
                         {"new_source", f.new_source},
                         {"deleted", std::move(del)},
                         {"added", std::move(add)}});
    }
    return {{"commit_id", rec.commit_id}, {"project", rec.project}, {"files", std::move(files)}};
}

} // namespace

std::vector<std::string> validate_commit(const CommitRecord& record)
{
    if (record.commit_id.empty()) {
        throw Error("commit '': field 'commit_id': empty");
    }
    for (const auto& f : record.files) {
        check_lines(record.commit_id, f, f.deleted, f.old_source, "deleted");
        check_lines(record.commit_id, f, f.added, f.new_source, "added");
    }
    std::vector<std::string> warnings;
    if (record.deleted_count() == 0) {
        warnings.push_back("commit '" + record.commit_id + "': no deleted lines");
    } else if (record.root_cause_count() == 0) {
        warnings.push_back("commit '" + record.commit_id + "': no root-cause label");
    }
    return warnings;
}

CommitRecord parse_commit(const std::string& json_text)
{
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw Error(std::string("malformed JSON: ") + e.what());
    }
    auto rec = from_json(j);
    validate_commit(rec);
    return rec;
}

std::string serialize_commit(const CommitRecord& record)
{
    return to_json(record).dump();
}

std::vector<CommitRecord> parse_dataset(const std::string& jsonl, std::vector<std::string>* warnings)
{
    std::vector<CommitRecord> records;
    std::set<std::string> ids;
    std::istringstream in(jsonl);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw Error("line " + std::to_string(line_no) + ": malformed JSON: " + e.what());
        }
        CommitRecord rec;
        try {
            rec = from_json(j);
        } catch (const Error& e) {
            throw Error("line " + std::to_string(line_no) + ": " + e.what());
        }
        auto w = validate_commit(rec);
        if (!ids.insert(rec.commit_id).second) {
            throw Error("commit '" + rec.commit_id + "': field 'commit_id': duplicate in dataset");
        }
        if (warnings) warnings->insert(warnings->end(), w.begin(), w.end());
        records.push_back(std::move(rec));
    }
    return records;
}

std::vector<CommitRecord> load_dataset(const std::string& path, std::vector<std::string>* warnings)
{
    return parse_dataset(read_file(path), warnings);
}

void save_dataset(const std::string& path, const std::vector<CommitRecord>& records)
{
    std::string out;
    for (const auto& r : records) {
        out += serialize_commit(r);
        out += '\n';
    }
    write_file(path, out);
}

std::vector<std::string> FoldAssignment::fold_members(int fold) const
{
    std::vector<std::string> out;
    for (const auto& [id, f] : assignment) {
        if (f == fold) out.push_back(id);
    }
    return out;
}

std::vector<std::size_t> FoldAssignment::fold_sizes() const
{
    std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
    for (const auto& [id, f] : assignment) ++sizes[static_cast<std::size_t>(f)];
    return sizes;
}

int deleted_count_bucket(std::size_t deleted_lines)
{
    if (deleted_lines <= 3) return 0;
    if (deleted_lines <= 10) return 1;
    return 2;
}

FoldAssignment split_folds(const std::vector<CommitRecord>& records, int k, std::uint64_t seed)
{
    if (k < 2) throw Error("split_folds: k must be >= 2 (got " + std::to_string(k) + ")");
    if (static_cast<std::size_t>(k) > records.size()) {
        throw Error("split_folds: k=" + std::to_string(k) + " exceeds the number of commits ("
                    + std::to_string(records.size()) + ")");
    }
    std::map<std::tuple<std::string, int>, std::vector<std::string>> strata;
    for (const auto& r : records) {
        strata[{r.project, deleted_count_bucket(r.deleted_count())}].push_back(r.commit_id);
    }
    FoldAssignment out;
    out.k = k;
    out.seed = seed;
    Rng rng(seed);
    int cursor = 0;
    for (auto& [key, ids] : strata) {
        std::sort(ids.begin(), ids.end());
        rng.shuffle(ids);
        for (const auto& id : ids) {
            out.assignment[id] = cursor;
            cursor = (cursor + 1) % k;
        }
    }
    return out;
}

} // namespace rcdet
