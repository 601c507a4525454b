#pragma once

// Lexer and recursive-descent parser for the C subset found in paired
// vulnerability test cases. Preprocessor directives are kept as opaque
// tokens and skipped by the parser.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "vrbench/common.hpp"

namespace vrbench::csyntax {

enum class TokenKind {
    Identifier,
    Keyword,
    Number,
    CharLiteral,
    StringLiteral,
    Punct,
    Directive,
    LineComment,
    BlockComment,
    End,
};

struct Token {
    TokenKind kind = TokenKind::End;
    std::string text;
    Span span;
};

/// Tokenizes `source`. Comments and directives are returned only when
/// `keep_trivia` is set. Throws ParseError on unterminated literals/comments.
std::vector<Token> lex(std::string_view source, bool keep_trivia = false);

bool is_keyword(std::string_view word);

enum class NodeKind : std::uint8_t {
    TranslationUnit,
    FunctionDef,
    ParamList,
    Param,
    TypeName,
    Declaration,
    Declarator,
    ArrayDim,
    Initializer,
    RecordDecl,
    // statements
    Compound,
    If,
    While,
    DoWhile,
    For,
    Switch,
    Case,
    Default,
    Label,
    Break,
    Continue,
    Return,
    Goto,
    ExprStmt,
    Empty,
    // expressions
    Ident,
    IntLit,
    FloatLit,
    CharLit,
    StringLit,
    Binary,
    Assign,
    Unary,
    Postfix,
    Call,
    Index,
    Member,
    Cast,
    SizeofExpr,
    SizeofType,
    Conditional,
    Comma,
    InitList,
    CompoundLiteral,
};

std::string_view node_kind_name(NodeKind kind);
bool is_expression(NodeKind kind);
bool is_statement(NodeKind kind);

using NodeId = std::uint32_t;
inline constexpr NodeId kNoNode = 0xffffffffu;

struct Node {
    NodeKind kind = NodeKind::Empty;
    // Identifier name, operator spelling, literal spelling, normalized type
    // text or function/declarator name depending on kind.
    std::string text;
    Span span;
    std::vector<NodeId> children;
    NodeId parent = kNoNode;
};

/// Arena-allocated syntax tree. Node 0 is the translation unit.
class Ast {
public:
    const Node& node(NodeId id) const { return nodes_.at(id); }
    Node& node(NodeId id) { return nodes_.at(id); }
    std::size_t size() const { return nodes_.size(); }
    NodeId root() const { return 0; }
    const std::vector<Node>& nodes() const { return nodes_; }

    NodeId add(NodeKind kind, std::string text, Span span);
    void adopt(NodeId parent, NodeId child);

    // Constructs that were parsed but are outside the analysis model
    // (goto, function pointers).
    std::vector<std::string> warnings;

private:
    std::vector<Node> nodes_;
};

struct ParseOptions {
    // Extra typedef names assumed to come from headers that are not expanded.
    std::vector<std::string> known_types;
};

/// Parses a translation unit. Throws ParseError with a line number on
/// syntactically invalid input.
Ast parse(std::string_view source, const ParseOptions& options = {});

/// Shape signature of a subtree: node kinds and arities, with identifier and
/// literal spellings ignored. Equal signatures mean isomorphic trees modulo
/// names.
std::string shape_signature(const Ast& ast, NodeId id);

/// Text of the source covered by `span`.
inline std::string_view slice(std::string_view source, const Span& span) {
    return source.substr(span.byte_start, span.byte_end - span.byte_start);
}

/// Removes comments, keeping the newlines of block comments so that line
/// numbers are preserved.
std::string strip_comments(std::string_view source);

}  // namespace vrbench::csyntax
