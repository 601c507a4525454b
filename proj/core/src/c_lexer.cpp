#include <algorithm>
#include <array>
#include <cctype>

#include "vrbench/c_syntax.hpp"

namespace vrbench::csyntax {

namespace {

constexpr std::array<std::string_view, 44> kKeywords = {
    "auto",     "break",    "case",     "char",     "const",    "continue", "default",
    "do",       "double",   "else",     "enum",     "extern",   "float",    "for",
    "goto",     "if",       "inline",   "int",      "long",     "register", "restrict",
    "return",   "short",    "signed",   "sizeof",   "static",   "struct",   "switch",
    "typedef",  "union",    "unsigned", "void",     "volatile", "while",    "_Bool",
    "_Complex", "_Alignas", "_Alignof", "_Atomic",  "_Noreturn", "_Static_assert",
    "_Thread_local", "__restrict", "__inline",
};

constexpr std::array<std::string_view, 24> kPuncts3And2 = {
    ">>=", "<<=", "...", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=",
    "&&",  "||",  "+=",  "-=", "*=", "/=", "%=", "&=", "^=", "|=", "##", "::",
};

bool ident_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}
bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}

class Lexer {
public:
    Lexer(std::string_view src, bool keep) : src_(src), keep_(keep) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        bool at_line_start = true;
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (c == '\n') {
                ++line_;
                ++pos_;
                at_line_start = true;
                continue;
            }
            if (c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v') {
                ++pos_;
                continue;
            }
            if (c == '\\' && peek(1) == '\n') {
                pos_ += 2;
                ++line_;
                continue;
            }
            auto start = pos_;
            auto start_line = line_;
            if (c == '/' && peek(1) == '/') {
                while (pos_ < src_.size() && src_[pos_] != '\n') {
                    if (src_[pos_] == '\\' && peek(1) == '\n') {
                        ++line_;
                        ++pos_;
                    }
                    ++pos_;
                }
                emit(out, TokenKind::LineComment, start, start_line);
                continue;
            }
            if (c == '/' && peek(1) == '*') {
                pos_ += 2;
                while (pos_ < src_.size() && !(src_[pos_] == '*' && peek(1) == '/')) {
                    if (src_[pos_] == '\n') ++line_;
                    ++pos_;
                }
                if (pos_ >= src_.size()) fail(start_line, "unterminated block comment");
                pos_ += 2;
                emit(out, TokenKind::BlockComment, start, start_line);
                continue;
            }
            if (c == '#' && at_line_start) {
                lex_directive();
                emit(out, TokenKind::Directive, start, start_line);
                continue;
            }
            at_line_start = false;
            if (ident_start(c)) {
                while (pos_ < src_.size() && ident_char(src_[pos_])) ++pos_;
                auto word = src_.substr(start, pos_ - start);
                bool prefix = word == "L" || word == "u" || word == "U" || word == "u8";
                if (prefix && pos_ < src_.size() && (src_[pos_] == '"' || src_[pos_] == '\'')) {
                    char q = src_[pos_];
                    lex_quoted(q, start_line);
                    emit(out, q == '"' ? TokenKind::StringLiteral : TokenKind::CharLiteral, start,
                         start_line);
                    continue;
                }
                emit(out, is_keyword(word) ? TokenKind::Keyword : TokenKind::Identifier, start,
                     start_line);
                continue;
            }
            if (std::isdigit(static_cast<unsigned char>(c)) ||
                (c == '.' && std::isdigit(static_cast<unsigned char>(peek(1))))) {
                while (pos_ < src_.size()) {
                    char d = src_[pos_];
                    if (ident_char(d) || d == '.') {
                        ++pos_;
                    } else if ((d == '+' || d == '-') && pos_ > start &&
                               (src_[pos_ - 1] == 'e' || src_[pos_ - 1] == 'E' ||
                                src_[pos_ - 1] == 'p' || src_[pos_ - 1] == 'P') &&
                               !(src_[start] == '0' && start + 1 < pos_ &&
                                 (src_[start + 1] == 'x' || src_[start + 1] == 'X') &&
                                 (src_[pos_ - 1] == 'e' || src_[pos_ - 1] == 'E'))) {
                        ++pos_;
                    } else {
                        break;
                    }
                }
                emit(out, TokenKind::Number, start, start_line);
                continue;
            }
            if (c == '"' || c == '\'') {
                lex_quoted(c, start_line);
                emit(out, c == '"' ? TokenKind::StringLiteral : TokenKind::CharLiteral, start,
                     start_line);
                continue;
            }
            bool matched = false;
            for (auto p : kPuncts3And2) {
                if (src_.substr(pos_, p.size()) == p) {
                    pos_ += p.size();
                    matched = true;
                    break;
                }
            }
            if (!matched) {
                static constexpr std::string_view kSingles = "{}[]()<>;:,.?!~+-*/%&|^=#";
                if (kSingles.find(c) == std::string_view::npos) {
                    fail(line_, std::string("unexpected character '") + c + "'");
                }
                ++pos_;
            }
            emit(out, TokenKind::Punct, start, start_line);
        }
        Token end;
        end.kind = TokenKind::End;
        end.span = Span{static_cast<std::uint32_t>(src_.size()),
                        static_cast<std::uint32_t>(src_.size()), line_, line_};
        out.push_back(end);
        return out;
    }

private:
    char peek(std::size_t ahead) const {
        return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
    }

    [[noreturn]] void fail(std::uint32_t line, const std::string& msg) const {
        throw ParseError("line " + std::to_string(line) + ": " + msg);
    }

    void lex_quoted(char quote, std::uint32_t start_line) {
        ++pos_;
        while (pos_ < src_.size() && src_[pos_] != quote) {
            if (src_[pos_] == '\n') fail(start_line, "newline in literal");
            if (src_[pos_] == '\\') {
                if (peek(1) == '\n') ++line_;
                ++pos_;
            }
            ++pos_;
        }
        if (pos_ >= src_.size()) fail(start_line, "unterminated literal");
        ++pos_;
    }

    void lex_directive() {
        while (pos_ < src_.size() && src_[pos_] != '\n') {
            if (src_[pos_] == '\\' && peek(1) == '\n') {
                ++line_;
                pos_ += 2;
                continue;
            }
            if (src_[pos_] == '/' && peek(1) == '*') {
                pos_ += 2;
                while (pos_ < src_.size() && !(src_[pos_] == '*' && peek(1) == '/')) {
                    if (src_[pos_] == '\n') ++line_;
                    ++pos_;
                }
                pos_ = std::min(pos_ + 2, src_.size());
                continue;
            }
            ++pos_;
        }
    }

    void emit(std::vector<Token>& out, TokenKind kind, std::size_t start, std::uint32_t start_line) {
        bool trivia = kind == TokenKind::LineComment || kind == TokenKind::BlockComment ||
                      kind == TokenKind::Directive;
        if (trivia && !keep_) return;
        Token t;
        t.kind = kind;
        t.text = std::string(src_.substr(start, pos_ - start));
        t.span = Span{static_cast<std::uint32_t>(start), static_cast<std::uint32_t>(pos_),
                      start_line, line_};
        out.push_back(std::move(t));
    }

    std::string_view src_;
    bool keep_;
    std::size_t pos_ = 0;
    std::uint32_t line_ = 1;
};

}  // namespace

bool is_keyword(std::string_view word) {
    for (auto k : kKeywords) {
        if (k == word) return true;
    }
    return false;
}

std::vector<Token> lex(std::string_view source, bool keep_trivia) {
    return Lexer(source, keep_trivia).run();
}

std::string strip_comments(std::string_view source) {
    auto tokens = lex(source, true);
    std::string out;
    out.reserve(source.size());
    std::size_t cursor = 0;
    for (const auto& t : tokens) {
        if (t.kind != TokenKind::LineComment && t.kind != TokenKind::BlockComment) continue;
        out.append(source.substr(cursor, t.span.byte_start - cursor));
        cursor = t.span.byte_end;
        bool ends_line = cursor >= source.size() || source[cursor] == '\n' || source[cursor] == '\r';
        if (ends_line) {
            while (!out.empty() && (out.back() == ' ' || out.back() == '\t')) out.pop_back();
        }
        for (char c : t.text) {
            if (c == '\n') out.push_back('\n');
        }
    }
    out.append(source.substr(cursor));
    return out;
}

}  // namespace vrbench::csyntax
