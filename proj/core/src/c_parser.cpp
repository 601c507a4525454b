#include <array>
#include <unordered_set>

#include "vrbench/c_syntax.hpp"

namespace vrbench::csyntax {

namespace {

constexpr std::array<std::string_view, 46> kDefaultTypedefs = {
    "size_t",   "ssize_t",   "wchar_t",   "ptrdiff_t", "intptr_t",  "uintptr_t", "int8_t",
    "int16_t",  "int32_t",   "int64_t",   "uint8_t",   "uint16_t",  "uint32_t",  "uint64_t",
    "intmax_t", "uintmax_t", "off_t",     "time_t",    "pid_t",     "FILE",      "va_list",
    "bool",     "SOCKET",    "socklen_t", "in_addr_t", "errno_t",   "DWORD",     "HANDLE",
    "BOOL",     "BYTE",      "WORD",      "LPSTR",     "clock_t",   "fpos_t",    "mode_t",
    "uid_t",    "gid_t",     "sig_atomic_t", "div_t",  "ldiv_t",    "wint_t",    "u_long",
    "twoIntsStruct", "char16_t", "char32_t", "jmp_buf",
};

bool is_type_keyword(std::string_view w) {
    static const std::unordered_set<std::string_view> kSet = {
        "void",   "char",     "short",    "int",     "long",     "float",   "double",
        "signed", "unsigned", "_Bool",    "_Complex", "struct",  "union",   "enum",
        "const",  "volatile", "restrict", "__restrict", "static", "extern", "auto",
        "register", "typedef", "inline",  "__inline", "_Atomic",  "_Noreturn",
        "_Thread_local", "_Alignas",
    };
    return kSet.count(w) != 0;
}

bool is_assign_op(std::string_view p) {
    return p == "=" || p == "+=" || p == "-=" || p == "*=" || p == "/=" || p == "%=" ||
           p == "&=" || p == "|=" || p == "^=" || p == "<<=" || p == ">>=";
}

int binary_precedence(std::string_view op) {
    if (op == "||") return 1;
    if (op == "&&") return 2;
    if (op == "|") return 3;
    if (op == "^") return 4;
    if (op == "&") return 5;
    if (op == "==" || op == "!=") return 6;
    if (op == "<" || op == ">" || op == "<=" || op == ">=") return 7;
    if (op == "<<" || op == ">>") return 8;
    if (op == "+" || op == "-") return 9;
    if (op == "*" || op == "/" || op == "%") return 10;
    return 0;
}

struct DeclaratorInfo {
    std::string name;
    Span name_span{};
    Span span{};
    int pointer_depth = 0;
    bool function_pointer = false;
    NodeId params = kNoNode;  // ParamList when the outermost suffix is a parameter list
    std::vector<NodeId> dims;
};

struct Specifiers {
    std::string text;
    bool is_typedef = false;
    bool any = false;
    Span span{};
};

class Parser {
public:
    Parser(std::string_view src, const ParseOptions& options) : src_(src) {
        tokens_ = lex(src, false);
        for (auto t : kDefaultTypedefs) typedefs_.insert(std::string(t));
        for (const auto& t : options.known_types) typedefs_.insert(t);
    }

    Ast run() {
        auto root = ast_.add(NodeKind::TranslationUnit, "", Span{});
        while (!at_end()) {
            if (is_punct(";")) {
                advance();
                continue;
            }
            auto item = parse_external();
            if (item != kNoNode) ast_.adopt(root, item);
        }
        ast_.node(root).span = Span{0, static_cast<std::uint32_t>(src_.size()), 1,
                                    tokens_.back().span.line_end};
        return std::move(ast_);
    }

private:
    // ---- token helpers -------------------------------------------------
    const Token& cur() const { return tokens_[pos_]; }
    const Token& look(std::size_t n) const {
        return tokens_[std::min(pos_ + n, tokens_.size() - 1)];
    }
    bool at_end() const { return cur().kind == TokenKind::End; }
    bool is_punct(std::string_view p, std::size_t n = 0) const {
        return look(n).kind == TokenKind::Punct && look(n).text == p;
    }
    bool is_kw(std::string_view k, std::size_t n = 0) const {
        return look(n).kind == TokenKind::Keyword && look(n).text == k;
    }
    bool is_ident(std::size_t n = 0) const { return look(n).kind == TokenKind::Identifier; }

    const Token& advance() {
        const Token& t = tokens_[pos_];
        if (!at_end()) ++pos_;
        last_end_ = t.span.byte_end;
        last_line_ = t.span.line_end;
        return t;
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError("line " + std::to_string(cur().span.line_start) + ": " + msg +
                         (at_end() ? " at end of input" : " near '" + cur().text + "'"));
    }

    void expect_punct(std::string_view p) {
        if (!is_punct(p)) fail("expected '" + std::string(p) + "'");
        advance();
    }

    Span span_from(const Token& first) const {
        return Span{first.span.byte_start, last_end_, first.span.line_start, last_line_};
    }
    Span span_from(const Span& first) const {
        return Span{first.byte_start, last_end_, first.line_start, last_line_};
    }

    NodeId add(NodeKind kind, std::string text, Span span) {
        return ast_.add(kind, std::move(text), span);
    }
    NodeId add(NodeKind kind, std::string text, Span span, std::initializer_list<NodeId> kids) {
        auto id = ast_.add(kind, std::move(text), span);
        for (auto k : kids) {
            if (k != kNoNode) ast_.adopt(id, k);
        }
        return id;
    }

    bool is_typedef_name(const Token& t) const {
        if (t.kind != TokenKind::Identifier) return false;
        if (typedefs_.count(t.text)) return true;
        return t.text.size() > 2 && t.text.ends_with("_t");
    }

    bool starts_type(std::size_t n = 0) const {
        const Token& t = look(n);
        if (t.kind == TokenKind::Keyword) return is_type_keyword(t.text);
        return is_typedef_name(t);
    }

    void skip_attribute() {
        // __attribute__((...)) / __declspec(...)
        while (is_ident() && (cur().text == "__attribute__" || cur().text == "__declspec" ||
                              cur().text == "__extension__" || cur().text == "__asm__")) {
            bool has_parens = cur().text != "__extension__";
            advance();
            if (has_parens && is_punct("(")) skip_balanced("(", ")");
        }
    }

    void skip_balanced(std::string_view open, std::string_view close) {
        int depth = 0;
        do {
            if (at_end()) fail("unbalanced '" + std::string(open) + "'");
            if (is_punct(open)) ++depth;
            if (is_punct(close)) --depth;
            advance();
        } while (depth > 0);
    }

    // ---- declarations --------------------------------------------------
    Specifiers parse_specifiers() {
        Specifiers spec;
        const Token& first = cur();
        bool have_type = false;
        while (!at_end()) {
            skip_attribute();
            const Token& t = cur();
            if (t.kind == TokenKind::Keyword && is_type_keyword(t.text)) {
                if (t.text == "typedef") {
                    spec.is_typedef = true;
                    advance();
                    spec.any = true;
                    continue;
                }
                if (t.text == "struct" || t.text == "union" || t.text == "enum") {
                    append(spec.text, parse_record_specifier());
                    have_type = true;
                    spec.any = true;
                    continue;
                }
                if (t.text == "_Alignas") {
                    advance();
                    skip_balanced("(", ")");
                    continue;
                }
                bool is_base = t.text != "const" && t.text != "volatile" && t.text != "restrict" &&
                               t.text != "__restrict" && t.text != "static" && t.text != "extern" &&
                               t.text != "auto" && t.text != "register" && t.text != "inline" &&
                               t.text != "__inline" && t.text != "_Noreturn" &&
                               t.text != "_Thread_local";
                if (is_base) have_type = true;
                append(spec.text, t.text);
                advance();
                spec.any = true;
                continue;
            }
            if (!have_type && is_typedef_name(t)) {
                append(spec.text, t.text);
                advance();
                have_type = true;
                spec.any = true;
                continue;
            }
            break;
        }
        if (spec.any) spec.span = span_from(first);
        return spec;
    }

    static void append(std::string& text, std::string_view word) {
        if (!text.empty()) text.push_back(' ');
        text.append(word);
    }

    std::string parse_record_specifier() {
        const Token& kw = advance();
        std::string text = kw.text;
        skip_attribute();
        if (is_ident()) {
            text += " " + advance().text;
        }
        if (is_punct("{")) {
            auto start = cur().span;
            advance();
            if (kw.text == "enum") {
                while (!is_punct("}")) {
                    if (at_end()) fail("unterminated enum");
                    if (!is_ident()) fail("expected enumerator");
                    advance();
                    if (is_punct("=")) {
                        advance();
                        parse_conditional();
                    }
                    if (is_punct(",")) advance();
                }
                advance();
            } else {
                while (!is_punct("}")) {
                    if (at_end()) fail("unterminated record");
                    if (is_punct(";")) {
                        advance();
                        continue;
                    }
                    auto spec = parse_specifiers();
                    if (!spec.any) fail("expected member declaration");
                    while (!is_punct(";")) {
                        if (!is_punct(":")) parse_declarator(true);
                        if (is_punct(":")) {
                            advance();
                            parse_conditional();
                        }
                        if (is_punct(",")) {
                            advance();
                            continue;
                        }
                        if (!is_punct(";")) fail("expected ';' in record");
                    }
                    advance();
                }
                advance();
            }
            auto rec = add(NodeKind::RecordDecl, text, span_from(start));
            pending_records_.push_back(rec);
        }
        return text;
    }

    DeclaratorInfo parse_declarator(bool allow_abstract) {
        DeclaratorInfo info;
        const Token& first = cur();
        Span start = first.span;
        skip_attribute();
        while (is_punct("*")) {
            advance();
            ++info.pointer_depth;
            while (is_kw("const") || is_kw("volatile") || is_kw("restrict") ||
                   is_kw("__restrict") || is_kw("_Atomic")) {
                advance();
            }
            skip_attribute();
        }
        bool nested = false;
        if (is_ident()) {
            const Token& name = advance();
            info.name = name.text;
            info.name_span = name.span;
        } else if (is_punct("(") && (is_punct("*", 1) || is_punct("(", 1) || is_punct("^", 1))) {
            advance();
            auto inner = parse_declarator(allow_abstract);
            expect_punct(")");
            info.name = inner.name;
            info.name_span = inner.name_span;
            info.function_pointer = inner.pointer_depth > 0 || inner.function_pointer;
            nested = true;
        } else if (!allow_abstract) {
            fail("expected declarator name");
        }
        while (true) {
            skip_attribute();
            if (is_punct("[")) {
                auto open = cur().span;
                advance();
                NodeId size_expr = kNoNode;
                while (is_kw("static") || is_kw("const") || is_kw("volatile")) advance();
                if (!is_punct("]")) size_expr = parse_assignment();
                expect_punct("]");
                info.dims.push_back(add(NodeKind::ArrayDim, "", span_from(open), {size_expr}));
                continue;
            }
            if (is_punct("(")) {
                auto params = parse_params();
                if (nested) {
                    info.function_pointer = true;
                } else if (info.params == kNoNode) {
                    info.params = params;
                }
                continue;
            }
            break;
        }
        info.span = span_from(start);
        return info;
    }

    NodeId parse_params() {
        auto open = cur().span;
        expect_punct("(");
        auto list = add(NodeKind::ParamList, "", open);
        if (is_kw("void") && is_punct(")", 1)) {
            advance();
        }
        while (!is_punct(")")) {
            if (at_end()) fail("unterminated parameter list");
            if (is_punct("...")) {
                auto& t = advance();
                ast_.adopt(list, add(NodeKind::Param, "...", t.span));
                continue;
            }
            auto pstart = cur().span;
            auto spec = parse_specifiers();
            if (!spec.any) {
                // K&R identifier list or unknown type name: accept an identifier.
                if (is_ident() && (is_ident(1) || is_punct("*", 1))) {
                    typedefs_.insert(cur().text);
                    spec = parse_specifiers();
                } else if (is_ident()) {
                    auto& t = advance();
                    auto type = add(NodeKind::TypeName, "int", t.span);
                    auto param = add(NodeKind::Param, t.text, t.span, {type});
                    ast_.adopt(list, param);
                    if (is_punct(",")) advance();
                    continue;
                } else {
                    fail("expected parameter");
                }
            }
            auto decl = parse_declarator(true);
            if (decl.function_pointer) warn_function_pointer(decl);
            auto type = add(NodeKind::TypeName, type_text(spec, decl), spec.span);
            auto param = add(NodeKind::Param, decl.name, span_from(pstart), {type});
            for (auto d : decl.dims) ast_.adopt(param, d);
            ast_.adopt(list, param);
            if (is_punct(",")) {
                advance();
            } else if (!is_punct(")")) {
                fail("expected ',' or ')' in parameter list");
            }
        }
        advance();
        ast_.node(list).span = span_from(open);
        return list;
    }

    static std::string type_text(const Specifiers& spec, const DeclaratorInfo& decl) {
        std::string text = spec.text;
        if (decl.pointer_depth > 0) {
            text.push_back(' ');
            text.append(static_cast<std::size_t>(decl.pointer_depth), '*');
        }
        return text;
    }

    void warn_function_pointer(const DeclaratorInfo& decl) {
        ast_.warnings.push_back("line " + std::to_string(decl.span.line_start) +
                                ": function pointer '" + decl.name +
                                "' is outside the flow model");
    }

    NodeId parse_initializer_value() {
        if (is_punct("{")) return parse_init_list();
        return parse_assignment();
    }

    NodeId parse_init_list() {
        auto open = cur().span;
        expect_punct("{");
        auto list = add(NodeKind::InitList, "", open);
        while (!is_punct("}")) {
            if (at_end()) fail("unterminated initializer list");
            // designators
            while (is_punct(".") || is_punct("[")) {
                if (is_punct(".")) {
                    advance();
                    advance();
                } else {
                    skip_balanced("[", "]");
                }
                if (is_punct("=")) advance();
            }
            ast_.adopt(list, parse_initializer_value());
            if (is_punct(",")) {
                advance();
            } else if (!is_punct("}")) {
                fail("expected ',' or '}' in initializer list");
            }
        }
        advance();
        ast_.node(list).span = span_from(open);
        return list;
    }

    // Parses the declarator list after the specifiers; `first` is already
    // parsed.
    NodeId finish_declaration(const Specifiers& spec, DeclaratorInfo first, Span start) {
        auto decl_node = add(NodeKind::Declaration, spec.is_typedef ? "typedef" : "", start);
        ast_.adopt(decl_node, add(NodeKind::TypeName, spec.text, spec.span));
        for (auto rec : pending_records_) ast_.adopt(decl_node, rec);
        pending_records_.clear();
        bool have = first.name.size() || first.pointer_depth || !first.dims.empty();
        DeclaratorInfo d = std::move(first);
        while (have) {
            if (d.function_pointer) warn_function_pointer(d);
            if (spec.is_typedef && !d.name.empty()) typedefs_.insert(d.name);
            auto dn = add(NodeKind::Declarator, d.name, d.span);
            ast_.node(dn).children.clear();
            for (auto dim : d.dims) ast_.adopt(dn, dim);
            if (d.params != kNoNode) ast_.adopt(dn, d.params);
            skip_attribute();
            if (is_punct("=")) {
                auto eq = cur().span;
                advance();
                auto value = parse_initializer_value();
                ast_.adopt(dn, add(NodeKind::Initializer, "", span_from(eq), {value}));
            }
            ast_.node(dn).span = span_from(d.span);
            ast_.adopt(decl_node, dn);
            if (is_punct(",")) {
                advance();
                d = parse_declarator(false);
                continue;
            }
            break;
        }
        expect_punct(";");
        ast_.node(decl_node).span = span_from(start);
        return decl_node;
    }

    NodeId parse_external() {
        auto start = cur().span;
        skip_attribute();
        auto spec = parse_specifiers();
        if (!spec.any) {
            if (is_ident() && is_punct("(", 1)) {
                spec.text = "int";
                spec.span = start;
            } else if (is_ident() && (is_ident(1) || is_punct("*", 1))) {
                typedefs_.insert(cur().text);
                spec = parse_specifiers();
            } else {
                fail("expected declaration");
            }
        }
        if (is_punct(";")) {
            advance();
            auto decl_node = add(NodeKind::Declaration, "", span_from(start));
            ast_.adopt(decl_node, add(NodeKind::TypeName, spec.text, spec.span));
            for (auto rec : pending_records_) ast_.adopt(decl_node, rec);
            pending_records_.clear();
            return decl_node;
        }
        auto decl = parse_declarator(false);
        skip_attribute();
        if (decl.params != kNoNode && !decl.function_pointer && is_punct("{")) {
            pending_records_.clear();
            auto ret = add(NodeKind::TypeName, type_text(spec, decl), spec.span);
            auto body = parse_compound();
            return add(NodeKind::FunctionDef, decl.name, span_from(start), {ret, decl.params, body});
        }
        return finish_declaration(spec, std::move(decl), start);
    }

    // ---- statements ----------------------------------------------------
    bool statement_is_declaration() {
        const Token& t = cur();
        if (t.kind == TokenKind::Keyword) return is_type_keyword(t.text);
        if (t.kind != TokenKind::Identifier) return false;
        if (is_punct(":", 1)) return false;
        if (is_typedef_name(t)) {
            return is_ident(1) || is_punct("*", 1) || (is_punct("(", 1) && is_punct("*", 2));
        }
        // Unknown type names from unexpanded headers: `T x`, `T * x;`
        if (is_ident(1)) return true;
        if (is_punct("*", 1)) {
            std::size_t n = 2;
            while (is_punct("*", n)) ++n;
            if (is_ident(n)) {
                const Token& after = look(n + 1);
                return after.kind == TokenKind::Punct &&
                       (after.text == ";" || after.text == "=" || after.text == "," ||
                        after.text == "[");
            }
        }
        return false;
    }

    NodeId parse_local_declaration() {
        auto start = cur().span;
        if (is_ident() && !is_typedef_name(cur())) typedefs_.insert(cur().text);
        auto spec = parse_specifiers();
        if (is_punct(";")) {
            advance();
            auto decl_node = add(NodeKind::Declaration, "", span_from(start));
            ast_.adopt(decl_node, add(NodeKind::TypeName, spec.text, spec.span));
            for (auto rec : pending_records_) ast_.adopt(decl_node, rec);
            pending_records_.clear();
            return decl_node;
        }
        auto decl = parse_declarator(false);
        return finish_declaration(spec, std::move(decl), start);
    }

    NodeId parse_compound() {
        auto open = cur().span;
        expect_punct("{");
        auto block = add(NodeKind::Compound, "", open);
        while (!is_punct("}")) {
            if (at_end()) fail("unterminated block");
            ast_.adopt(block, parse_block_item());
        }
        advance();
        ast_.node(block).span = span_from(open);
        return block;
    }

    NodeId parse_block_item() {
        skip_attribute();
        if (statement_is_declaration()) return parse_local_declaration();
        return parse_statement();
    }

    NodeId parse_paren_expr() {
        expect_punct("(");
        auto e = parse_expression();
        expect_punct(")");
        return e;
    }

    NodeId parse_statement() {
        const Token& t = cur();
        Span start = t.span;
        if (is_punct("{")) return parse_compound();
        if (is_punct(";")) {
            advance();
            return add(NodeKind::Empty, "", start);
        }
        if (t.kind == TokenKind::Keyword) {
            const std::string kw = t.text;
            if (kw == "if") {
                advance();
                auto cond = parse_paren_expr();
                auto then_s = parse_statement();
                NodeId else_s = kNoNode;
                if (is_kw("else")) {
                    advance();
                    else_s = parse_statement();
                }
                return add(NodeKind::If, "if", span_from(start), {cond, then_s, else_s});
            }
            if (kw == "while") {
                advance();
                auto cond = parse_paren_expr();
                auto body = parse_statement();
                return add(NodeKind::While, "while", span_from(start), {cond, body});
            }
            if (kw == "do") {
                advance();
                auto body = parse_statement();
                if (!is_kw("while")) fail("expected 'while' after do body");
                advance();
                auto cond = parse_paren_expr();
                expect_punct(";");
                return add(NodeKind::DoWhile, "do", span_from(start), {body, cond});
            }
            if (kw == "for") {
                advance();
                expect_punct("(");
                NodeId init;
                if (statement_is_declaration()) {
                    init = parse_local_declaration();
                } else if (is_punct(";")) {
                    init = add(NodeKind::Empty, "", cur().span);
                    advance();
                } else {
                    auto e_start = cur().span;
                    auto e = parse_expression();
                    expect_punct(";");
                    init = add(NodeKind::ExprStmt, "", span_from(e_start), {e});
                }
                NodeId cond = is_punct(";") ? add(NodeKind::Empty, "", cur().span) : parse_expression();
                expect_punct(";");
                NodeId incr = is_punct(")") ? add(NodeKind::Empty, "", cur().span) : parse_expression();
                expect_punct(")");
                auto body = parse_statement();
                return add(NodeKind::For, "for", span_from(start), {init, cond, incr, body});
            }
            if (kw == "switch") {
                advance();
                auto cond = parse_paren_expr();
                auto body = parse_statement();
                return add(NodeKind::Switch, "switch", span_from(start), {cond, body});
            }
            if (kw == "case") {
                advance();
                auto value = parse_conditional();
                if (is_punct("...")) {
                    advance();
                    parse_conditional();
                }
                expect_punct(":");
                NodeId inner = is_punct("}") ? kNoNode : parse_labeled_body();
                return add(NodeKind::Case, "case", span_from(start), {value, inner});
            }
            if (kw == "default") {
                advance();
                expect_punct(":");
                NodeId inner = is_punct("}") ? kNoNode : parse_labeled_body();
                return add(NodeKind::Default, "default", span_from(start), {inner});
            }
            if (kw == "break" || kw == "continue") {
                advance();
                expect_punct(";");
                return add(kw == "break" ? NodeKind::Break : NodeKind::Continue, kw, span_from(start));
            }
            if (kw == "return") {
                advance();
                NodeId value = is_punct(";") ? kNoNode : parse_expression();
                expect_punct(";");
                return add(NodeKind::Return, "return", span_from(start), {value});
            }
            if (kw == "goto") {
                advance();
                if (!is_ident()) fail("expected label after goto");
                auto label = advance().text;
                expect_punct(";");
                ast_.warnings.push_back("line " + std::to_string(start.line_start) +
                                        ": goto is outside the flow model");
                return add(NodeKind::Goto, label, span_from(start));
            }
        }
        if (is_ident() && is_punct(":", 1)) {
            auto label = advance().text;
            advance();
            NodeId inner = is_punct("}") ? kNoNode : parse_labeled_body();
            return add(NodeKind::Label, label, span_from(start), {inner});
        }
        auto e = parse_expression();
        expect_punct(";");
        return add(NodeKind::ExprStmt, "", span_from(start), {e});
    }

    NodeId parse_labeled_body() {
        if (statement_is_declaration()) return parse_local_declaration();
        return parse_statement();
    }

    // ---- expressions ---------------------------------------------------
    NodeId parse_expression() {
        auto start = cur().span;
        auto lhs = parse_assignment();
        while (is_punct(",")) {
            advance();
            auto rhs = parse_assignment();
            lhs = add(NodeKind::Comma, ",", span_from(start), {lhs, rhs});
        }
        return lhs;
    }

    NodeId parse_assignment() {
        auto start = cur().span;
        auto lhs = parse_conditional();
        if (cur().kind == TokenKind::Punct && is_assign_op(cur().text)) {
            auto op = advance().text;
            auto rhs = parse_assignment();
            return add(NodeKind::Assign, op, span_from(start), {lhs, rhs});
        }
        return lhs;
    }

    NodeId parse_conditional() {
        auto start = cur().span;
        auto cond = parse_binary(1);
        if (is_punct("?")) {
            advance();
            auto a = parse_expression();
            expect_punct(":");
            auto b = parse_conditional();
            return add(NodeKind::Conditional, "?:", span_from(start), {cond, a, b});
        }
        return cond;
    }

    NodeId parse_binary(int min_prec) {
        auto start = cur().span;
        auto lhs = parse_cast();
        while (cur().kind == TokenKind::Punct) {
            int prec = binary_precedence(cur().text);
            if (prec == 0 || prec < min_prec) break;
            auto op = advance().text;
            auto rhs = parse_binary(prec + 1);
            lhs = add(NodeKind::Binary, op, span_from(start), {lhs, rhs});
        }
        return lhs;
    }

    bool paren_starts_type_name() const {
        if (!is_punct("(")) return false;
        if (starts_type(1)) return true;
        // (Unknown *) or (Unknown) followed by an operand.
        if (look(1).kind == TokenKind::Identifier) {
            std::size_t n = 2;
            bool stars = false;
            while (is_punct("*", n)) {
                ++n;
                stars = true;
            }
            if (!is_punct(")", n)) return false;
            if (stars) return true;
            const Token& after = look(n + 1);
            return after.kind == TokenKind::Identifier || after.kind == TokenKind::Number ||
                   after.kind == TokenKind::CharLiteral || after.kind == TokenKind::StringLiteral;
        }
        return false;
    }

    NodeId parse_type_name() {
        auto start = cur().span;
        if (is_ident() && !starts_type()) typedefs_.insert(cur().text);
        auto spec = parse_specifiers();
        if (!spec.any) fail("expected type name");
        auto decl = parse_declarator(true);
        std::string text = type_text(spec, decl);
        for (std::size_t i = 0; i < decl.dims.size(); ++i) text += "[]";
        pending_records_.clear();
        return add(NodeKind::TypeName, text, span_from(start));
    }

    NodeId parse_cast() {
        auto start = cur().span;
        if (paren_starts_type_name()) {
            advance();
            auto type = parse_type_name();
            expect_punct(")");
            if (is_punct("{")) {
                auto init = parse_init_list();
                return parse_postfix_tail(
                    add(NodeKind::CompoundLiteral, "", span_from(start), {type, init}), start);
            }
            auto operand = parse_cast();
            return add(NodeKind::Cast, "", span_from(start), {type, operand});
        }
        return parse_unary();
    }

    NodeId parse_unary() {
        auto start = cur().span;
        if (cur().kind == TokenKind::Punct) {
            const auto& p = cur().text;
            if (p == "++" || p == "--") {
                auto op = advance().text;
                auto operand = parse_unary();
                return add(NodeKind::Unary, op + "pre", span_from(start), {operand});
            }
            if (p == "&" || p == "*" || p == "+" || p == "-" || p == "~" || p == "!") {
                auto op = advance().text;
                auto operand = parse_cast();
                return add(NodeKind::Unary, op, span_from(start), {operand});
            }
        }
        if (is_kw("sizeof") || is_kw("_Alignof")) {
            advance();
            if (paren_starts_type_name()) {
                advance();
                auto type = parse_type_name();
                expect_punct(")");
                return add(NodeKind::SizeofType, "sizeof", span_from(start), {type});
            }
            auto operand = parse_unary();
            return add(NodeKind::SizeofExpr, "sizeof", span_from(start), {operand});
        }
        return parse_postfix();
    }

    NodeId parse_postfix() {
        auto start = cur().span;
        return parse_postfix_tail(parse_primary(), start);
    }

    NodeId parse_postfix_tail(NodeId expr, Span start) {
        while (true) {
            if (is_punct("[")) {
                advance();
                auto index = parse_expression();
                expect_punct("]");
                expr = add(NodeKind::Index, "[]", span_from(start), {expr, index});
            } else if (is_punct("(")) {
                advance();
                std::string callee =
                    ast_.node(expr).kind == NodeKind::Ident ? ast_.node(expr).text : std::string();
                auto call = add(NodeKind::Call, callee, start, {expr});
                while (!is_punct(")")) {
                    if (at_end()) fail("unterminated argument list");
                    ast_.adopt(call, parse_assignment());
                    if (is_punct(",")) {
                        advance();
                    } else if (!is_punct(")")) {
                        fail("expected ',' or ')' in argument list");
                    }
                }
                advance();
                ast_.node(call).span = span_from(start);
                expr = call;
            } else if (is_punct(".") || is_punct("->")) {
                auto op = advance().text;
                if (!is_ident()) fail("expected member name");
                auto field = advance().text;
                expr = add(NodeKind::Member, op + field, span_from(start), {expr});
            } else if (is_punct("++") || is_punct("--")) {
                auto op = advance().text;
                expr = add(NodeKind::Postfix, op, span_from(start), {expr});
            } else {
                return expr;
            }
        }
    }

    NodeId parse_primary() {
        const Token& t = cur();
        Span start = t.span;
        switch (t.kind) {
        case TokenKind::Identifier: {
            advance();
            return add(NodeKind::Ident, t.text, start);
        }
        case TokenKind::Number: {
            advance();
            bool is_float = t.text.find_first_of(".") != std::string::npos ||
                            ((t.text.find_first_of("eE") != std::string::npos) &&
                             t.text.rfind("0x", 0) != 0 && t.text.rfind("0X", 0) != 0);
            return add(is_float ? NodeKind::FloatLit : NodeKind::IntLit, t.text, start);
        }
        case TokenKind::CharLiteral: {
            advance();
            return add(NodeKind::CharLit, t.text, start);
        }
        case TokenKind::StringLiteral: {
            std::string text = advance().text;
            while (cur().kind == TokenKind::StringLiteral ||
                   (is_ident() && cur().text.rfind("PRI", 0) == 0 &&
                    look(1).kind == TokenKind::StringLiteral)) {
                text += " " + advance().text;
            }
            return add(NodeKind::StringLit, text, span_from(start));
        }
        case TokenKind::Punct: {
            if (t.text == "(") {
                advance();
                if (is_punct("{")) {
                    fail("statement expressions are not supported");
                }
                auto inner = parse_expression();
                expect_punct(")");
                return inner;
            }
            break;
        }
        default:
            break;
        }
        fail("expected expression");
    }

    std::string_view src_;
    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
    std::uint32_t last_end_ = 0;
    std::uint32_t last_line_ = 1;
    std::unordered_set<std::string> typedefs_;
    std::vector<NodeId> pending_records_;
    Ast ast_;
};

void shape_rec(const Ast& ast, NodeId id, std::string& out) {
    const auto& n = ast.node(id);
    out += node_kind_name(n.kind);
    switch (n.kind) {
    case NodeKind::Binary:
    case NodeKind::Assign:
    case NodeKind::Unary:
    case NodeKind::Postfix:
        out += n.text;
        break;
    default:
        break;
    }
    if (!n.children.empty()) {
        out.push_back('(');
        for (std::size_t i = 0; i < n.children.size(); ++i) {
            if (i) out.push_back(',');
            shape_rec(ast, n.children[i], out);
        }
        out.push_back(')');
    }
}

}  // namespace

NodeId Ast::add(NodeKind kind, std::string text, Span span) {
    Node n;
    n.kind = kind;
    n.text = std::move(text);
    n.span = span;
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
}

void Ast::adopt(NodeId parent, NodeId child) {
    nodes_.at(child).parent = parent;
    nodes_.at(parent).children.push_back(child);
}

Ast parse(std::string_view source, const ParseOptions& options) {
    return Parser(source, options).run();
}

std::string shape_signature(const Ast& ast, NodeId id) {
    std::string out;
    shape_rec(ast, id, out);
    return out;
}

std::string_view node_kind_name(NodeKind kind) {
    switch (kind) {
    case NodeKind::TranslationUnit: return "TranslationUnit";
    case NodeKind::FunctionDef: return "FunctionDef";
    case NodeKind::ParamList: return "ParamList";
    case NodeKind::Param: return "Param";
    case NodeKind::TypeName: return "TypeName";
    case NodeKind::Declaration: return "Declaration";
    case NodeKind::Declarator: return "Declarator";
    case NodeKind::ArrayDim: return "ArrayDim";
    case NodeKind::Initializer: return "Initializer";
    case NodeKind::RecordDecl: return "RecordDecl";
    case NodeKind::Compound: return "Compound";
    case NodeKind::If: return "If";
    case NodeKind::While: return "While";
    case NodeKind::DoWhile: return "DoWhile";
    case NodeKind::For: return "For";
    case NodeKind::Switch: return "Switch";
    case NodeKind::Case: return "Case";
    case NodeKind::Default: return "Default";
    case NodeKind::Label: return "Label";
    case NodeKind::Break: return "Break";
    case NodeKind::Continue: return "Continue";
    case NodeKind::Return: return "Return";
    case NodeKind::Goto: return "Goto";
    case NodeKind::ExprStmt: return "ExprStmt";
    case NodeKind::Empty: return "Empty";
    case NodeKind::Ident: return "Ident";
    case NodeKind::IntLit: return "IntLit";
    case NodeKind::FloatLit: return "FloatLit";
    case NodeKind::CharLit: return "CharLit";
    case NodeKind::StringLit: return "StringLit";
    case NodeKind::Binary: return "Binary";
    case NodeKind::Assign: return "Assign";
    case NodeKind::Unary: return "Unary";
    case NodeKind::Postfix: return "Postfix";
    case NodeKind::Call: return "Call";
    case NodeKind::Index: return "Index";
    case NodeKind::Member: return "Member";
    case NodeKind::Cast: return "Cast";
    case NodeKind::SizeofExpr: return "SizeofExpr";
    case NodeKind::SizeofType: return "SizeofType";
    case NodeKind::Conditional: return "Conditional";
    case NodeKind::Comma: return "Comma";
    case NodeKind::InitList: return "InitList";
    case NodeKind::CompoundLiteral: return "CompoundLiteral";
    }
    return "?";
}

bool is_expression(NodeKind kind) {
    return kind >= NodeKind::Ident && kind <= NodeKind::CompoundLiteral;
}

bool is_statement(NodeKind kind) {
    return kind >= NodeKind::Compound && kind <= NodeKind::Empty;
}

}  // namespace vrbench::csyntax
