#include "rcdet/analyzer.hpp"

#include "rcdet/util.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <optional>
#include <set>

namespace rcdet {

namespace {

constexpr std::array<std::string_view, 55> kKeywords = {
    "abstract", "assert",    "boolean",   "break",      "byte",       "case",     "catch",
    "char",     "class",     "const",     "continue",   "default",    "do",       "double",
    "else",     "enum",      "extends",   "final",      "finally",    "float",    "for",
    "goto",     "if",        "implements", "import",    "instanceof", "int",      "interface",
    "long",     "native",    "new",       "package",    "private",    "protected", "public",
    "return",   "short",     "static",    "strictfp",   "super",      "switch",   "synchronized",
    "this",     "throw",     "throws",    "transient",  "try",        "void",     "volatile",
    "while",    "true",      "false",     "null",       "var",        "yield"};

constexpr std::array<std::string_view, 10> kPrimitives = {
    "boolean", "byte", "char", "short", "int", "long", "float", "double", "void", "var"};

constexpr std::array<std::string_view, 9> kModifiers = {
    "public", "private", "protected", "static", "final", "abstract", "synchronized", "transient",
    "volatile"};

constexpr std::array<std::string_view, 25> kSymbols = {
    ">>>=", "<<=", ">>=", ">>>", "==", "!=", "<=", ">=", "&&", "||", "++", "--", "+=",
    "-=",   "*=",  "/=",  "%=",  "&=", "|=", "^=", "->", "::", "<<", ">>", "..."};

constexpr std::array<std::string_view, 12> kAssignOps = {
    "=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>=", ">>>="};

template <std::size_t N>
bool contains(const std::array<std::string_view, N>& arr, std::string_view s)
{
    return std::find(arr.begin(), arr.end(), s) != arr.end();
}

bool ident_start(char c)
{
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}

bool ident_char(char c)
{
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}

bool is_primitive(const Token& t)
{
    return t.kind == TokenKind::keyword && contains(kPrimitives, t.text);
}

bool is_modifier(const Token& t)
{
    return t.kind == TokenKind::keyword && contains(kModifiers, t.text);
}

bool is_name(const Token& t)
{
    return t.kind == TokenKind::identifier;
}

// Token that can end a type: `int`, `Foo`, `List<T>`, `int[]`.
bool is_type_end(const Token& t)
{
    return is_name(t) || is_primitive(t) || t.is(">") || t.is(">>") || t.is("]");
}

bool is_assign_op(const Token& t)
{
    return t.kind == TokenKind::symbol && contains(kAssignOps, t.text);
}

using Tokens = std::vector<Token>;

// Index of the matching close paren for the open paren at `open`, or size().
std::size_t match_paren(const Tokens& toks, std::size_t open)
{
    int depth = 0;
    for (std::size_t i = open; i < toks.size(); ++i) {
        if (toks[i].is("(")) ++depth;
        if (toks[i].is(")")) {
            if (--depth == 0) return i;
        }
    }
    return toks.size();
}

// Splits [begin, end) at depth-0 occurrences of `sep`.
std::vector<std::pair<std::size_t, std::size_t>> split_top(const Tokens& toks, std::size_t begin,
                                                            std::size_t end, std::string_view sep)
{
    std::vector<std::pair<std::size_t, std::size_t>> parts;
    int depth = 0;
    std::size_t start = begin;
    for (std::size_t i = begin; i < end; ++i) {
        const auto& t = toks[i].text;
        if (t == "(" || t == "[" || t == "{") ++depth;
        if (t == ")" || t == "]" || t == "}") --depth;
        if (depth == 0 && t == sep) {
            parts.emplace_back(start, i);
            start = i + 1;
        }
    }
    parts.emplace_back(start, end);
    return parts;
}

int count_args(const Tokens& toks, std::size_t open)
{
    const auto close = match_paren(toks, open);
    if (close == open + 1) return 0;
    return static_cast<int>(split_top(toks, open + 1, std::min(close, toks.size()), ",").size());
}

struct StatementFacts {
    std::vector<VarDef> defs;
    std::vector<std::string> uses;
    std::vector<std::string> this_fields;
    std::vector<CallSite> calls;
};

// Collects reads, `this.f` references and calls over [begin, end), skipping
// the token positions in `skip`.
void scan_reads(const Tokens& toks, std::size_t begin, std::size_t end, StatementFacts& out,
                const std::set<std::size_t>& skip = {})
{
    for (std::size_t i = begin; i < end; ++i) {
        const auto& t = toks[i];
        if (t.is("this") && i + 2 < toks.size() && toks[i + 1].is(".") && is_name(toks[i + 2])) {
            const bool call = i + 3 < toks.size() && toks[i + 3].is("(");
            if (call) {
                out.calls.push_back({toks[i + 2].text, count_args(toks, i + 3)});
            } else if (!skip.contains(i + 2)) {
                out.this_fields.push_back(toks[i + 2].text);
            }
            i += 2;
            continue;
        }
        if (!is_name(t) || skip.contains(i)) continue;
        const bool after_dot = i > 0 && (toks[i - 1].is(".") || toks[i - 1].is("::"));
        const bool call = i + 1 < toks.size() && toks[i + 1].is("(");
        if (call) {
            const bool after_new = i > 0 && toks[i - 1].is("new");
            if (!after_dot && !after_new) {
                out.calls.push_back({t.text, count_args(toks, i + 1)});
            }
            continue;
        }
        if (!after_dot) out.uses.push_back(t.text);
    }
}

// `++x`, `x--` and friends: both a read and a write of x.
void scan_increments(const Tokens& toks, std::size_t begin, std::size_t end, StatementFacts& out)
{
    for (std::size_t i = begin; i < end; ++i) {
        if (!toks[i].is("++") && !toks[i].is("--")) continue;
        if (i + 1 < end && is_name(toks[i + 1]) && !(i > 0 && is_name(toks[i - 1]))) {
            out.defs.push_back({toks[i + 1].text, false});
        } else if (i > begin && is_name(toks[i - 1]) && !(i >= 2 && toks[i - 2].is("."))) {
            out.defs.push_back({toks[i - 1].text, false});
        }
    }
}

// Declarator list such as `final Map<K, V> a = x, b` in [begin, end). Returns
// false when the range does not look like a declaration.
bool scan_declaration(const Tokens& toks, std::size_t begin, std::size_t end, StatementFacts& out)
{
    const auto parts = split_top(toks, begin, end, ",");
    // First declarator fixes the type.
    auto [b0, e0] = parts.front();
    std::size_t eq = e0;
    for (std::size_t i = b0; i < e0; ++i) {
        if (toks[i].is("=")) {
            eq = i;
            break;
        }
    }
    if (eq - b0 < 2) return false;
    if (!is_name(toks[eq - 1]) || !is_type_end(toks[eq - 2])) return false;
    for (std::size_t i = b0; i + 1 < eq; ++i) {
        const auto& t = toks[i];
        const bool ok = is_name(t) || is_primitive(t) || is_modifier(t) || t.is("<") || t.is(">")
                        || t.is(">>") || t.is(",") || t.is("[") || t.is("]") || t.is(".")
                        || t.is("?") || t.is("extends") || t.is("super") || t.is("@");
        if (!ok) return false;
    }
    out.defs.push_back({toks[eq - 1].text, true});
    if (eq < e0) scan_reads(toks, eq + 1, e0, out);
    for (std::size_t p = 1; p < parts.size(); ++p) {
        auto [b, e] = parts[p];
        if (b < e && is_name(toks[b])) {
            out.defs.push_back({toks[b].text, true});
            if (b + 1 < e && toks[b + 1].is("=")) scan_reads(toks, b + 2, e, out);
        } else {
            scan_reads(toks, b, e, out);
        }
    }
    return true;
}

// Plain statement or expression over [begin, end).
void scan_statement(const Tokens& toks, std::size_t begin, std::size_t end, StatementFacts& out)
{
    if (begin >= end) return;
    if (toks[begin].is("return") || toks[begin].is("throw") || toks[begin].is("yield")) {
        scan_reads(toks, begin + 1, end, out);
        scan_increments(toks, begin + 1, end, out);
        return;
    }
    std::size_t stop = end;
    if (stop > begin && toks[stop - 1].is(";")) --stop;

    int depth = 0;
    std::size_t assign = stop;
    for (std::size_t i = begin; i < stop; ++i) {
        const auto& t = toks[i].text;
        if (t == "(" || t == "[" || t == "{") ++depth;
        if (t == ")" || t == "]" || t == "}") --depth;
        if (depth == 0 && is_assign_op(toks[i])) {
            assign = i;
            break;
        }
    }

    if (assign == stop) {
        // `int x;` / `Foo a, b;`
        const auto first_paren = std::find_if(toks.begin() + static_cast<std::ptrdiff_t>(begin),
                                              toks.begin() + static_cast<std::ptrdiff_t>(stop),
                                              [](const Token& t) { return t.is("("); });
        if (first_paren == toks.begin() + static_cast<std::ptrdiff_t>(stop)
            && scan_declaration(toks, begin, stop, out)) {
            return;
        }
        scan_reads(toks, begin, stop, out);
        scan_increments(toks, begin, stop, out);
        return;
    }

    if (toks[assign].is("=") && scan_declaration(toks, begin, stop, out)) {
        return;
    }

    // Assignment to an existing location.
    std::set<std::size_t> skip;
    const auto& last = toks[assign - (assign > begin ? 1 : 0)];
    if (assign > begin && is_name(last)) {
        const std::size_t pos = assign - 1;
        const bool dotted = pos > begin && toks[pos - 1].is(".");
        const bool this_dot = dotted && pos >= begin + 2 && toks[pos - 2].is("this");
        if (!dotted || this_dot) {
            out.defs.push_back({last.text, false});
            if (this_dot) out.this_fields.push_back(last.text);
            skip.insert(pos);
            if (!toks[assign].is("=")) out.uses.push_back(last.text);
        }
    }
    scan_reads(toks, begin, assign, out, skip);
    scan_reads(toks, assign + 1, stop, out);
    scan_increments(toks, begin, stop, out);
}

bool looks_like_method_decl(const Tokens& toks, std::size_t begin, MethodDecl& decl,
                            bool* typed = nullptr)
{
    // [modifiers] [type] name ( params ) [throws X, Y] ( { | ; )
    std::size_t open = toks.size();
    for (std::size_t i = begin; i < toks.size(); ++i) {
        if (toks[i].is("(")) {
            open = i;
            break;
        }
        if (toks[i].is("=") || toks[i].is(";") || toks[i].is("{") || toks[i].is(".")) return false;
    }
    if (open == toks.size() || open == begin) return false;
    const auto& name = toks[open - 1];
    if (!is_name(name)) return false;
    if (open - 1 > begin) {
        const auto& before = toks[open - 2];
        if (!(is_type_end(before) || is_modifier(before))) return false;
    }
    for (std::size_t i = begin; i + 1 < open; ++i) {
        const auto& t = toks[i];
        if (t.kind == TokenKind::keyword && !is_primitive(t) && !is_modifier(t)) return false;
    }
    const auto close = match_paren(toks, open);
    if (close >= toks.size()) return false;
    std::size_t i = close + 1;
    if (i < toks.size() && toks[i].is("throws")) {
        ++i;
        while (i < toks.size() && (is_name(toks[i]) || toks[i].is(",") || toks[i].is("."))) ++i;
    }
    if (i >= toks.size() || !(toks[i].is("{") || toks[i].is(";"))) return false;
    decl.name = name.text;
    decl.arity = count_args(toks, open);
    if (typed) *typed = open - 1 > begin;
    return true;
}

void scan_method_params(const Tokens& toks, std::size_t begin, StatementFacts& out)
{
    std::size_t open = begin;
    while (open < toks.size() && !toks[open].is("(")) ++open;
    const auto close = match_paren(toks, open);
    if (close == open + 1 || close >= toks.size()) return;
    for (auto [b, e] : split_top(toks, open + 1, close, ",")) {
        if (b < e && is_name(toks[e - 1])) out.defs.push_back({toks[e - 1].text, true});
    }
}

StatementFacts scan_for_header(const Tokens& toks, std::size_t begin)
{
    StatementFacts out;
    const std::size_t open = begin + 1;
    if (open >= toks.size() || !toks[open].is("(")) return out;
    const auto close = match_paren(toks, open);
    const auto inner_end = std::min(close, toks.size());
    const auto clauses = split_top(toks, open + 1, inner_end, ";");
    if (clauses.size() == 1) {
        // for (Type x : xs)
        auto [b, e] = clauses.front();
        std::size_t colon = e;
        for (std::size_t i = b; i < e; ++i) {
            if (toks[i].is(":")) {
                colon = i;
                break;
            }
        }
        if (colon < e && colon > b && is_name(toks[colon - 1])) {
            out.defs.push_back({toks[colon - 1].text, true});
            scan_reads(toks, colon + 1, e, out);
        } else {
            scan_reads(toks, b, e, out);
        }
    } else {
        auto [ib, ie] = clauses[0];
        if (!scan_declaration(toks, ib, ie, out)) {
            for (auto [b, e] : split_top(toks, ib, ie, ",")) scan_statement(toks, b, e, out);
        }
        for (std::size_t c = 1; c < clauses.size(); ++c) {
            auto [b, e] = clauses[c];
            for (auto [pb, pe] : split_top(toks, b, e, ",")) scan_statement(toks, pb, pe, out);
        }
    }
    if (close + 1 < toks.size()) {
        std::size_t end = toks.size();
        if (toks[end - 1].is("{")) --end;
        scan_statement(toks, close + 1, end, out);
    }
    return out;
}

// Control-flow header without braces awaiting a one-statement body.
bool is_unbraced_head(const Tokens& toks, std::size_t begin)
{
    if (begin >= toks.size()) return false;
    const auto& first = toks[begin];
    if (!(first.is("if") || first.is("else") || first.is("for") || first.is("while") || first.is("do"))) {
        return false;
    }
    const auto& last = toks.back();
    if (last.is(";") || last.is("{") || last.is("}")) return false;
    if (first.is("if") || first.is("for") || first.is("while") || (first.is("else") && begin + 1 < toks.size())) {
        // Header must end with its condition's close paren.
        std::size_t open = begin;
        while (open < toks.size() && !toks[open].is("(")) ++open;
        if (open == toks.size()) return false;
        return match_paren(toks, open) == toks.size() - 1;
    }
    return true;
}

BlockKind classify_header(const Tokens& toks, std::size_t begin)
{
    if (begin >= toks.size()) return BlockKind::other;
    const auto& first = toks[begin];
    if (first.is("switch")) return BlockKind::switch_body;
    if (first.is("if") || first.is("else") || first.is("for") || first.is("while") || first.is("do")) {
        return BlockKind::control;
    }
    if (first.is("try") || first.is("catch") || first.is("finally") || first.is("synchronized")
        || first.is("static")) {
        if (!(first.is("static") && begin + 1 < toks.size() && !toks[begin + 1].is("{"))) {
            return BlockKind::other;
        }
    }
    for (std::size_t i = begin; i < toks.size(); ++i) {
        if (toks[i].is("(") || toks[i].is("=")) break;
        if (toks[i].is("class") || toks[i].is("interface") || toks[i].is("enum")) {
            return BlockKind::class_body;
        }
    }
    const bool has_new = std::any_of(toks.begin() + static_cast<std::ptrdiff_t>(begin), toks.end(),
                                     [](const Token& t) { return t.is("new"); });
    if (has_new && toks.size() >= 2 && toks.back().is("{") && toks[toks.size() - 2].is(")")) {
        return BlockKind::class_body;
    }
    MethodDecl decl;
    if (looks_like_method_decl(toks, begin, decl)) return BlockKind::method_body;
    return BlockKind::other;
}

class BlockBuilder {
public:
    explicit BlockBuilder(SourceAnalysis& a) : a_(a)
    {
        a_.blocks.push_back(Block{});
        stack_.push_back(0);
    }

    void add_line(LineFacts& line)
    {
        const auto& toks = line.tokens;
        const bool closer_only =
            std::all_of(toks.begin(), toks.end(),
                        [](const Token& t) { return t.is("}") || t.is(")") || t.is(";") || t.is(","); })
            && std::any_of(toks.begin(), toks.end(), [](const Token& t) { return t.is("}"); });
        if (closer_only) {
            attach(line);
            for (const auto& t : toks) {
                if (t.is("}")) pop_braced();
            }
            complete_singles();
            return;
        }

        std::size_t lead = 0;
        while (lead < toks.size() && toks[lead].is("}")) {
            pop_braced();
            ++lead;
        }
        if (lead > 0) complete_singles_after_close();

        const auto& first = toks[lead];
        const bool case_label = (first.is("case") || first.is("default")) && lead + 1 < toks.size()
                                && std::any_of(toks.begin() + static_cast<std::ptrdiff_t>(lead), toks.end(),
                                               [](const Token& t) { return t.is(":") || t.is("->"); });
        if (case_label && in_switch()) {
            if (top().kind == BlockKind::case_group) stack_.pop_back();
            attach(line);
            push(BlockKind::case_group, line.line_no);
        } else {
            if (pending_head_) {
                push(BlockKind::single, *pending_head_);
                pending_head_.reset();
            }
            attach(line);
        }

        int net = 0;
        for (std::size_t i = lead; i < toks.size(); ++i) {
            if (toks[i].is("{")) ++net;
            if (toks[i].is("}")) --net;
        }
        if (net > 0) {
            const auto kind = classify_header(toks, lead);
            for (int i = 0; i < net; ++i) {
                const int id = push(i == 0 ? kind : BlockKind::other, line.line_no);
                if (i == 0) line.opened_block = id;
            }
            return;
        }
        for (int i = 0; i < -net; ++i) pop_braced();
        if (!case_label && is_unbraced_head(toks, lead)) {
            pending_head_ = line.line_no;
            return;
        }
        complete_singles();
    }

private:
    Block& top() { return a_.blocks[static_cast<std::size_t>(stack_.back())]; }

    bool in_switch()
    {
        for (auto it = stack_.rbegin(); it != stack_.rend(); ++it) {
            const auto kind = a_.blocks[static_cast<std::size_t>(*it)].kind;
            if (kind == BlockKind::switch_body) return true;
            if (kind != BlockKind::case_group) return false;
        }
        return false;
    }

    void attach(LineFacts& line)
    {
        line.block = stack_.back();
        top().members.push_back(line.line_no);
    }

    int push(BlockKind kind, int header)
    {
        Block b;
        b.kind = kind;
        b.header_line = header;
        b.parent = stack_.back();
        a_.blocks.push_back(std::move(b));
        const int id = static_cast<int>(a_.blocks.size()) - 1;
        stack_.push_back(id);
        return id;
    }

    void pop_braced()
    {
        pending_head_.reset();
        while (stack_.size() > 1
               && (top().kind == BlockKind::case_group || top().kind == BlockKind::single)) {
            stack_.pop_back();
        }
        if (stack_.size() > 1) stack_.pop_back();
    }

    // A single-statement body is complete once its statement has no open
    // braces left.
    void complete_singles()
    {
        while (stack_.size() > 1 && top().kind == BlockKind::single && !top().members.empty()) {
            stack_.pop_back();
        }
    }

    // `} else {` style lines: singles whose braced member just closed.
    void complete_singles_after_close() { complete_singles(); }

    SourceAnalysis& a_;
    std::vector<int> stack_;
    std::optional<int> pending_head_;
};

} // namespace

bool is_java_keyword(std::string_view word)
{
    return contains(kKeywords, word);
}

std::vector<Token> tokenize_line(std::string_view line, bool& in_block_comment)
{
    std::vector<Token> toks;
    std::size_t i = 0;
    const std::size_t n = line.size();
    while (i < n) {
        if (in_block_comment) {
            const auto end = line.find("*/", i);
            if (end == std::string_view::npos) return toks;
            in_block_comment = false;
            i = end + 2;
            continue;
        }
        const char c = line[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        if (c == '/' && i + 1 < n && line[i + 1] == '/') break;
        if (c == '/' && i + 1 < n && line[i + 1] == '*') {
            in_block_comment = true;
            i += 2;
            continue;
        }
        if (ident_start(c)) {
            std::size_t j = i + 1;
            while (j < n && ident_char(line[j])) ++j;
            std::string word(line.substr(i, j - i));
            const auto kind = is_java_keyword(word) ? TokenKind::keyword : TokenKind::identifier;
            toks.push_back({kind, std::move(word)});
            i = j;
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c))
            || (c == '.' && i + 1 < n && std::isdigit(static_cast<unsigned char>(line[i + 1])))) {
            std::size_t j = i + 1;
            while (j < n) {
                const char d = line[j];
                if (std::isalnum(static_cast<unsigned char>(d)) || d == '_' || d == '.') {
                    ++j;
                } else if ((d == '+' || d == '-') && (line[j - 1] == 'e' || line[j - 1] == 'E')) {
                    ++j;
                } else {
                    break;
                }
            }
            toks.push_back({TokenKind::number, std::string(line.substr(i, j - i))});
            i = j;
            continue;
        }
        if (c == '"' || c == '\'') {
            std::size_t j = i + 1;
            while (j < n && line[j] != c) {
                j += (line[j] == '\\') ? 2 : 1;
            }
            j = std::min(j + 1, n);
            toks.push_back({TokenKind::literal, std::string(line.substr(i, j - i))});
            i = j;
            continue;
        }
        bool matched = false;
        for (auto sym : kSymbols) {
            if (line.substr(i, sym.size()) == sym) {
                toks.push_back({TokenKind::symbol, std::string(sym)});
                i += sym.size();
                matched = true;
                break;
            }
        }
        if (!matched) {
            toks.push_back({TokenKind::symbol, std::string(1, c)});
            ++i;
        }
    }
    return toks;
}

std::vector<Token> tokenize(std::string_view line)
{
    bool in_comment = false;
    return tokenize_line(line, in_comment);
}

std::vector<std::string> normalized_tokens(std::string_view line)
{
    std::vector<std::string> out;
    for (auto& t : tokenize(line)) out.push_back(std::move(t.text));
    return out;
}

bool is_skipped_line(std::string_view line, bool in_block_comment)
{
    if (trim(line).empty()) return true;
    return tokenize_line(line, in_block_comment).empty();
}

SourceAnalysis analyze_source(std::string_view source)
{
    SourceAnalysis a;
    const auto raw = split_lines(source);
    a.lines.resize(raw.size());
    bool in_comment = false;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        auto& line = a.lines[i];
        line.line_no = static_cast<int>(i) + 1;
        line.blank = trim(raw[i]).empty();
        line.tokens = tokenize_line(raw[i], in_comment);
        line.comment_only = !line.blank && line.tokens.empty();
    }

    BlockBuilder builder(a);
    for (auto& line : a.lines) {
        if (line.is_code()) builder.add_line(line);
    }

    // Statement facts.
    for (auto& line : a.lines) {
        if (!line.is_code()) continue;
        const auto& toks = line.tokens;
        std::size_t lead = 0;
        while (lead < toks.size() && toks[lead].is("}")) ++lead;
        if (lead < toks.size() && (toks[lead].is("case") || toks[lead].is("default"))) {
            // case labels read their constant; a trailing statement after
            // ':' is analyzed as usual.
            std::size_t colon = lead;
            while (colon < toks.size() && !toks[colon].is(":") && !toks[colon].is("->")) ++colon;
            StatementFacts f;
            scan_reads(toks, lead + 1, colon, f);
            if (colon + 1 < toks.size()) scan_statement(toks, colon + 1, toks.size(), f);
            line.defs = std::move(f.defs);
            line.uses = std::move(f.uses);
            line.this_fields = std::move(f.this_fields);
            line.calls = std::move(f.calls);
            continue;
        }
        if (lead < toks.size() && toks[lead].is("else")) ++lead;
        StatementFacts f;
        MethodDecl decl;
        const auto block_kind = a.blocks[static_cast<std::size_t>(line.block)].kind;
        const bool in_class = block_kind == BlockKind::class_body;
        bool typed = false;
        if (lead < toks.size() && looks_like_method_decl(toks, lead, decl, &typed)
            && (in_class || typed)) {
            decl.line_no = line.line_no;
            a.methods.push_back(decl);
            line.is_method_decl = true;
            scan_method_params(toks, lead, f);
        } else if (lead < toks.size() && toks[lead].is("for")) {
            f = scan_for_header(toks, lead);
        } else if (lead < toks.size() && toks[lead].is("catch")) {
            std::size_t open = lead + 1;
            if (open < toks.size() && toks[open].is("(")) {
                const auto close = match_paren(toks, open);
                if (close < toks.size() && close > open + 1 && is_name(toks[close - 1])) {
                    f.defs.push_back({toks[close - 1].text, true});
                }
            }
        } else if (lead < toks.size()
                   && (toks[lead].is("if") || toks[lead].is("while") || toks[lead].is("switch")
                       || toks[lead].is("synchronized"))) {
            std::size_t open = lead + 1;
            const auto close = (open < toks.size() && toks[open].is("(")) ? match_paren(toks, open) : lead;
            scan_reads(toks, lead + 1, std::min(close + 1, toks.size()), f);
            scan_increments(toks, lead + 1, std::min(close + 1, toks.size()), f);
            if (close + 1 < toks.size()) {
                std::size_t end = toks.size();
                if (toks[end - 1].is("{")) --end;
                scan_statement(toks, close + 1, end, f);
            }
        } else {
            std::size_t end = toks.size();
            while (end > lead && (toks[end - 1].is("{") || toks[end - 1].is("}"))) --end;
            std::size_t begin = lead;
            while (begin < end && (toks[begin].is("do") || toks[begin].is("try") || toks[begin].is("finally"))) {
                ++begin;
            }
            scan_statement(toks, begin, end, f);
        }
        line.defs = std::move(f.defs);
        line.uses = std::move(f.uses);
        line.this_fields = std::move(f.this_fields);
        line.calls = std::move(f.calls);
    }
    return a;
}

} // namespace rcdet
