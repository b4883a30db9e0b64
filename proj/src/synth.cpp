#include "rcdet/synth.hpp"

#include "rcdet/util.hpp"

#include <algorithm>
#include <cstdio>
#include <iterator>
#include <string>

namespace rcdet {

namespace {

const char* const kNames[] = {"count", "index", "total", "limit", "offset", "width", "height", "delta",
                              "cursor", "weight", "score", "depth", "size", "step", "base", "extent"};
const char* const kCalls[] = {"normalize", "clampValue", "record", "adjust", "validate", "emit"};
const char* const kOps[] = {"+", "-", "*", "/", "%"};

enum class Role { keep, deleted, root };

struct Stmt {
    std::string text;
    Role role = Role::keep;
};

class Writer {
public:
    explicit Writer(Rng& rng) : rng_(rng) {}

    template <std::size_t N>
    const char* pick(const char* const (&pool)[N])
    {
        return pool[rng_.below(N)];
    }

    std::string fresh()
    {
        return std::string(pick(kNames)) + std::to_string(++serial_);
    }

    std::string any_var()
    {
        return vars_.empty() ? std::string("seed") : vars_[rng_.below(vars_.size())];
    }

    std::string declare(std::string expr)
    {
        const auto v = fresh();
        vars_.push_back(v);
        last_ = v;
        return "int " + v + " = " + std::move(expr) + ";";
    }

    std::string filler()
    {
        switch (rng_.below(4)) {
        case 0: return declare(any_var() + " " + pick(kOps) + " " + std::to_string(1 + rng_.below(9)));
        case 1: return any_var() + " = " + any_var() + " " + pick(kOps) + " " + any_var() + ";";
        case 2: return std::string(pick(kCalls)) + "(" + any_var() + ", " + any_var() + ");";
        default: return declare(std::string(pick(kCalls)) + "(" + any_var() + ")");
        }
    }

    const std::string& last() const { return last_; }
    std::vector<std::string>& vars() { return vars_; }

private:
    Rng& rng_;
    std::vector<std::string> vars_;
    std::string last_;
    int serial_ = 0;
};

CommitRecord make_commit(int index, const std::string& project, Rng& rng)
{
    Writer w(rng);
    const std::string cls = "Unit" + std::to_string(index);

    // Deleted-line budget spread over the three size buckets.
    static const int kBudgets[] = {2, 3, 4, 5, 6, 7, 8, 9, 10, 12, 14};
    const int deleted = kBudgets[rng.below(std::size(kBudgets))];
    const int roots = deleted >= 6 && rng.below(4) == 0 ? 2 : 1;

    std::vector<Stmt> body;
    body.push_back({w.declare("seed * 2"), Role::keep});
    for (int k = 0, n = 2 + static_cast<int>(rng.below(3)); k < n; ++k) body.push_back({w.filler(), Role::keep});

    int left = deleted;
    // Unrelated deletions may come first, so the line order carries no signal.
    for (int pre = static_cast<int>(rng.below(static_cast<std::uint64_t>(deleted - roots + 1))); pre > 0; --pre) {
        if (rng.below(2) == 0) body.push_back({w.filler(), Role::keep});
        body.push_back({w.filler(), Role::deleted});
        --left;
    }
    for (int r = 0; r < roots; ++r) {
        // The planted root: reads the marker, and its local feeds later deleted lines.
        body.push_back({w.declare(w.any_var() + " & " + kSynthMarker), Role::root});
        --left;
        const std::string hub = w.last();
        const int users = std::max(0, std::min(left - (roots - r - 1), 2 + static_cast<int>(rng.below(2))));
        for (int u = 0; u < users; ++u) {
            if (rng.below(3) == 0) body.push_back({w.filler(), Role::keep});
            std::string text = rng.below(2) == 0
                                   ? w.declare(hub + " " + w.pick(kOps) + " " + w.any_var())
                                   : std::string(w.pick(kCalls)) + "(" + hub + ", " + w.any_var() + ");";
            body.push_back({std::move(text), Role::deleted});
            --left;
        }
    }
    while (left > 0) {
        if (rng.below(2) == 0) body.push_back({w.filler(), Role::keep});
        body.push_back({w.filler(), Role::deleted});
        --left;
    }
    body.push_back({"return " + w.any_var() + ";", Role::keep});

    std::vector<std::string> head = {"package " + project + ";", "", "public class " + cls + " {",
                                     "    private int state;", "",
                                     "    public int apply(int seed) {"};
    std::vector<std::string> tail = {"    }", "}"};

    FileChange file;
    file.path = "src/" + project + "/" + cls + ".java";
    std::vector<std::string> old_lines = head, new_lines = head;
    for (std::size_t k = 0; k < body.size(); ++k) {
        const auto& s = body[k];
        const std::string line = "        " + s.text;
        old_lines.push_back(line);
        if (s.role == Role::keep) {
            new_lines.push_back(line);
            continue;
        }
        file.deleted.push_back({static_cast<int>(old_lines.size()), line, LineKind::deleted, s.role == Role::root});
        // Roughly every other deleted line gets a rewritten replacement.
        if (rng.below(2) == 0) {
            const std::string added = "        " + std::string(w.pick(kCalls)) + "(seed, " + std::to_string(k) + ");";
            new_lines.push_back(added);
            file.added.push_back({static_cast<int>(new_lines.size()), added, LineKind::added, false});
        }
    }
    for (const auto& t : tail) {
        old_lines.push_back(t);
        new_lines.push_back(t);
    }
    for (const auto& l : old_lines) file.old_source += l + "\n";
    for (const auto& l : new_lines) file.new_source += l + "\n";

    CommitRecord c;
    char id[32];
    std::snprintf(id, sizeof id, "synth-%04d", index);
    c.commit_id = id;
    c.project = project;
    c.files.push_back(std::move(file));
    return c;
}

} // namespace

std::vector<CommitRecord> synth_corpus(const SynthConfig& config)
{
    if (config.commits < 1 || config.projects < 1) throw Error("synth: commits and projects must be >= 1");
    static const char* const kProjects[] = {"ares", "boreas", "ceto", "dione", "eris", "fornax", "gaia", "helios"};
    Rng rng(mix64(config.seed));
    std::vector<CommitRecord> out;
    for (int i = 0; i < config.commits; ++i) {
        const int p = i % config.projects;
        std::string project = p < 8 ? kProjects[p] : "proj" + std::to_string(p);
        out.push_back(make_commit(i, project, rng));
        validate_commit(out.back());
    }
    return out;
}

} // namespace rcdet
