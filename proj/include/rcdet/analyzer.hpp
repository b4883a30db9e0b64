#pragma once

// Line-granular analyzer for a Java-like subset. Brace-balanced block
// detection, identifier tokenization and assignment/declaration recognition;
// any text is accepted and unanalyzable lines simply carry no facts.

#include <string>
#include <string_view>
#include <vector>

namespace rcdet {

enum class TokenKind { identifier, keyword, number, literal, symbol };

struct Token {
    TokenKind kind;
    std::string text;

    bool is(std::string_view s) const { return text == s; }
    bool operator==(const Token&) const = default;
};

/// Tokenizes one line. `in_block_comment` carries `/* */` state across lines.
std::vector<Token> tokenize_line(std::string_view line, bool& in_block_comment);

/// Tokens of a single line with no comment state carried in.
std::vector<Token> tokenize(std::string_view line);

// Whitespace-insensitive token texts, the unit of line similarity.
std::vector<std::string> normalized_tokens(std::string_view line);

bool is_java_keyword(std::string_view word);

enum class BlockKind { root, class_body, method_body, control, switch_body, case_group, single, other };

struct Block {
    BlockKind kind = BlockKind::root;
    int header_line = 0; // 0 for the root block
    int parent = -1;
    std::vector<int> members; // line numbers in order
};

struct MethodDecl {
    std::string name;
    int arity = 0;
    int line_no = 0;
};

struct CallSite {
    std::string name;
    int arity = 0;
};

struct VarDef {
    std::string name;
    bool declaration = false;
};

struct LineFacts {
    int line_no = 0;
    bool blank = true;
    bool comment_only = false;
    std::vector<Token> tokens;
    int block = 0;         // block the line is a member of
    int opened_block = -1; // first block this line opens, if any
    std::vector<VarDef> defs;
    std::vector<std::string> uses;
    std::vector<std::string> this_fields; // `this.f` references
    std::vector<CallSite> calls;
    bool is_method_decl = false;

    bool is_code() const { return !blank && !comment_only; }
};

struct SourceAnalysis {
    std::vector<LineFacts> lines; // index = line_no - 1
    std::vector<Block> blocks;    // blocks[0] is the root
    std::vector<MethodDecl> methods;

    const LineFacts& line(int line_no) const { return lines.at(static_cast<std::size_t>(line_no - 1)); }
};

SourceAnalysis analyze_source(std::string_view source);

/// True for lines the graph builder never turns into nodes: blank lines and
/// comment-only lines. `in_block_comment` is the state before the line.
bool is_skipped_line(std::string_view line, bool in_block_comment = false);

} // namespace rcdet
