#include <algorithm>
#include <cctype>
#include <random>
#include <unordered_map>
#include <unordered_set>

#include "variant_internal.hpp"

namespace vrbench::variant {

namespace {

bool word_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

class Renamer {
public:
    Renamer(const std::vector<std::string>& deny, const std::vector<std::string>& pool,
            std::uint64_t seed, std::unordered_set<std::string> taken)
        : deny_(deny), pool_(pool), taken_(std::move(taken)) {
        std::mt19937_64 rng(derive_seed(seed, "mask"));
        for (std::size_t i = pool_.size(); i > 1; --i) std::swap(pool_[i - 1], pool_[rng() % i]);
    }

    bool denied(std::string_view word) const { return contains_deny_token(word, deny_); }

    const std::string& rename(const std::string& word) {
        auto it = map_.find(word);
        if (it != map_.end()) return it->second;
        auto fresh = next_name();
        taken_.insert(fresh);
        order_.emplace_back(word, fresh);
        return map_.emplace(word, std::move(fresh)).first->second;
    }

    // Rewrites denied words inside free text (literals, directives).
    std::string rewrite_words(std::string_view text) {
        std::string out;
        std::size_t i = 0;
        while (i < text.size()) {
            char c = text[i];
            if (c == '\\' && i + 1 < text.size()) {
                out.append(text.substr(i, 2));
                i += 2;
                continue;
            }
            if (word_start(c)) {
                auto j = i;
                while (j < text.size() && word_char(text[j])) ++j;
                std::string word(text.substr(i, j - i));
                out += denied(word) ? rename(word) : word;
                i = j;
                continue;
            }
            out.push_back(c);
            ++i;
        }
        return out;
    }

    std::vector<std::pair<std::string, std::string>> renames() const { return order_; }

private:
    std::string next_name() {
        if (pool_.empty()) throw RenameCollision("neutral name pool is empty");
        // Counter suffixes are tried round by round after the bare words run
        // out.
        constexpr std::size_t kMaxRounds = 10000;
        for (std::size_t attempt = 0; attempt < pool_.size() * kMaxRounds; ++attempt) {
            std::size_t slot = (cursor_ + attempt) % pool_.size();
            std::size_t round = (cursor_ + attempt) / pool_.size();
            std::string candidate = pool_[slot];
            if (round > 0) candidate += std::to_string(round + 1);
            if (taken_.count(candidate) || denied(candidate) || csyntax::is_keyword(candidate)) {
                continue;
            }
            cursor_ += attempt + 1;
            return candidate;
        }
        throw RenameCollision("no fresh neutral name left");
    }

    const std::vector<std::string>& deny_;
    std::vector<std::string> pool_;
    std::unordered_set<std::string> taken_;
    std::unordered_map<std::string, std::string> map_;
    std::vector<std::pair<std::string, std::string>> order_;
    std::size_t cursor_ = 0;
};

bool is_include(std::string_view directive) {
    auto i = directive.find('#');
    if (i == std::string_view::npos) return false;
    ++i;
    while (i < directive.size() && (directive[i] == ' ' || directive[i] == '\t')) ++i;
    return directive.substr(i).starts_with("include");
}

// Comment removal leaves runs of empty lines behind; keep at most one.
std::string squeeze_blank_lines(std::string_view text) {
    std::string out;
    int blanks = 0;
    bool any = false;
    for (const auto& line : split_lines(text)) {
        bool blank = trim(line).empty();
        blanks = blank ? blanks + 1 : 0;
        if (blank && (blanks > 1 || !any)) continue;
        out += blank ? std::string() : line;
        out.push_back('\n');
        any = true;
    }
    return out;
}

}  // namespace

std::vector<std::string> default_deny_list() {
    return {"good", "bad", "vuln", "cwe", "flaw", "sink", "source"};
}

std::vector<std::string> default_neutral_pool() {
    return {"cat",    "apple",  "river",  "stone",   "cloud",  "maple",   "tiger",
            "lemon",  "harbor", "pencil", "meadow",  "violet", "copper",  "falcon",
            "garden", "island", "jungle", "kettle",  "lantern", "marble", "nutmeg",
            "orchard", "pepper", "quartz", "saddle", "timber", "walnut", "yarrow",
            "zebra",  "acorn",  "birch",  "cedar"};
}

bool contains_deny_token(std::string_view text, const std::vector<std::string>& deny) {
    return std::any_of(deny.begin(), deny.end(),
                       [&](const std::string& d) { return !d.empty() && contains_ci(text, d); });
}

std::string MaskResult::renamed(const std::string& name) const {
    for (const auto& [from, to] : renames) {
        if (from == name) return to;
    }
    return name;
}

MaskResult mask_labels_detailed(std::string_view source, const std::vector<std::string>& deny,
                                const std::vector<std::string>& pool, std::uint64_t seed) {
    auto stripped = csyntax::strip_comments(source);
    auto tokens = csyntax::lex(stripped, true);

    std::unordered_set<std::string> taken;
    for (std::size_t i = 0; i < stripped.size();) {
        if (word_start(stripped[i])) {
            auto j = i;
            while (j < stripped.size() && word_char(stripped[j])) ++j;
            taken.emplace(stripped.substr(i, j - i));
            i = j;
        } else {
            ++i;
        }
    }
    Renamer renamer(deny, pool, seed, std::move(taken));

    MaskResult result;
    std::size_t cursor = 0;
    for (const auto& t : tokens) {
        if (t.kind == csyntax::TokenKind::End) break;
        result.text.append(stripped, cursor, t.span.byte_start - cursor);
        cursor = t.span.byte_end;
        switch (t.kind) {
        case csyntax::TokenKind::Identifier:
            result.text += renamer.denied(t.text) ? renamer.rename(t.text) : t.text;
            break;
        case csyntax::TokenKind::StringLiteral:
        case csyntax::TokenKind::CharLiteral:
            result.text += renamer.rewrite_words(t.text);
            break;
        case csyntax::TokenKind::Directive:
            result.text += is_include(t.text) ? t.text : renamer.rewrite_words(t.text);
            break;
        default:
            result.text += t.text;
            break;
        }
    }
    result.text.append(stripped, cursor, std::string::npos);
    result.renames = renamer.renames();
    return result;
}

std::string mask_labels(std::string_view source, const std::vector<std::string>& deny,
                        const std::vector<std::string>& pool, std::uint64_t seed) {
    return mask_labels_detailed(source, deny, pool, seed).text;
}

Variant mask_variant(const Variant& variant, const std::vector<std::string>& deny,
                     const std::vector<std::string>& pool, std::uint64_t seed) {
    auto masked = mask_labels_detailed(variant.source, deny, pool, seed);
    Variant v = variant;
    v.source = squeeze_blank_lines(masked.text);
    v.function_name = masked.renamed(variant.function_name);
    v.mask_slots = mask_slots_of(v.source);
    return v;
}

}  // namespace vrbench::variant
