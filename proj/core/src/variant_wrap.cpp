#include <algorithm>
#include <array>
#include <random>
#include <set>

#include <json.hpp>

#include "variant_internal.hpp"

namespace vrbench::variant {

using csyntax::NodeId;
using csyntax::NodeKind;

namespace {

constexpr std::string_view kMaskPrefix = "__mask_";

std::string mask_placeholder(int slot) { return std::string(kMaskPrefix) + std::to_string(slot) + "__"; }

// Column of the first character of `span` when only whitespace precedes
// it on its line, else nullopt.
std::optional<std::size_t> line_indent(std::string_view source, const Span& span) {
    std::size_t line = span.byte_start;
    while (line > 0 && source[line - 1] != '\n') --line;
    for (std::size_t i = line; i < span.byte_start; ++i) {
        if (source[i] != ' ' && source[i] != '\t') return std::nullopt;
    }
    return span.byte_start - line;
}

// Statement text with continuation lines shifted left by the statement's
// own indentation.
std::string dedented(std::string_view source, const Span& span) {
    auto indent = line_indent(source, span).value_or(0);
    auto lines = split_lines(csyntax::slice(source, span));
    std::string out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string_view line = lines[i];
        if (i > 0) {
            std::size_t k = 0;
            while (k < indent && k < line.size() && (line[k] == ' ' || line[k] == '\t')) ++k;
            line.remove_prefix(k);
            out.push_back('\n');
        }
        out.append(line);
    }
    return out;
}

void emit(std::string& out, std::string_view text, int depth) {
    for (const auto& line : split_lines(text)) {
        if (!line.empty()) out.append(static_cast<std::size_t>(depth) * 4, ' ');
        out.append(line);
        out.push_back('\n');
    }
}

struct Stmt {
    NodeId id;
    std::string key;
    std::string text;
    bool is_decl;
    bool is_compound;
};

std::vector<Stmt> statements_of(const flow::SourceUnit& unit, NodeId compound) {
    std::vector<Stmt> out;
    for (auto c : unit.ast.node(compound).children) {
        const auto& n = unit.ast.node(c);
        Stmt s;
        s.id = c;
        for (const auto& t : csyntax::lex(csyntax::slice(unit.source, n.span))) {
            if (t.kind == csyntax::TokenKind::End) break;
            if (!s.key.empty()) s.key.push_back(' ');
            s.key += t.text;
        }
        s.text = dedented(unit.source, n.span);
        s.is_decl = n.kind == NodeKind::Declaration;
        s.is_compound = n.kind == NodeKind::Compound;
        out.push_back(std::move(s));
    }
    return out;
}

void extract_into(const flow::SourceUnit& unit, NodeId safe, NodeId unsafe, int depth,
                  BlockExtraction& out) {
    auto s = statements_of(unit, safe);
    auto u = statements_of(unit, unsafe);
    std::size_t p = 0;
    while (p < s.size() && p < u.size() && s[p].key == u[p].key) ++p;
    std::size_t q = 0;
    while (q < s.size() - p && q < u.size() - p &&
           s[s.size() - 1 - q].key == u[u.size() - 1 - q].key) {
        ++q;
    }
    for (std::size_t i = 0; i < p; ++i) out.prefix.push_back({s[i].text, depth});
    std::vector<Stmt> smid(s.begin() + static_cast<long>(p), s.end() - static_cast<long>(q));
    std::vector<Stmt> umid(u.begin() + static_cast<long>(p), u.end() - static_cast<long>(q));
    std::vector<Piece> suffix;
    for (std::size_t i = s.size() - q; i < s.size(); ++i) suffix.push_back({s[i].text, depth});

    if (smid.size() == 1 && umid.size() == 1 && smid[0].is_compound && umid[0].is_compound) {
        out.prefix.push_back({"{", depth});
        extract_into(unit, smid[0].id, umid[0].id, depth + 1, out);
        out.suffix.push_back({"}", depth});
        out.suffix.insert(out.suffix.end(), suffix.begin(), suffix.end());
        return;
    }
    if (smid.empty() && umid.empty()) {
        throw ExtractionError(unit.path + ": safe and unsafe bodies have no unique statements");
    }
    auto all_decl = [](const std::vector<Stmt>& v) {
        return std::all_of(v.begin(), v.end(), [](const Stmt& x) { return x.is_decl; });
    };
    if (all_decl(smid) && all_decl(umid)) {
        throw ExtractionError(unit.path + ": safe and unsafe bodies differ only in declarations");
    }
    auto any_decl = [](const std::vector<Stmt>& v) {
        return std::any_of(v.begin(), v.end(), [](const Stmt& x) { return x.is_decl; });
    };
    if (any_decl(smid) || any_decl(umid)) {
        // Declarations in a guarded block go out of scope; keep later uses
        // inside the block.
        for (std::size_t i = s.size() - q; i < s.size(); ++i) smid.push_back(s[i]);
        for (std::size_t i = u.size() - q; i < u.size(); ++i) umid.push_back(u[i]);
        suffix.clear();
    }
    for (const auto& x : smid) out.safe_block.push_back(x.text);
    for (const auto& x : umid) out.unsafe_block.push_back(x.text);
    out.hole_depth = depth;
    out.suffix.insert(out.suffix.end(), suffix.begin(), suffix.end());
}

std::string normalized_return_type(std::string_view type_text) {
    static const std::set<std::string, std::less<>> kDrop = {
        "static", "extern", "inline", "__inline", "_Noreturn", "register"};
    std::string out;
    std::size_t i = 0;
    while (i < type_text.size()) {
        auto j = type_text.find(' ', i);
        if (j == std::string_view::npos) j = type_text.size();
        auto word = type_text.substr(i, j - i);
        if (!word.empty() && !kDrop.count(word)) {
            if (!out.empty()) out.push_back(' ');
            out.append(word);
        }
        i = j + 1;
    }
    return out;
}

std::vector<Span> find_mask_slots(std::string_view source) {
    std::vector<std::pair<int, Span>> found;
    for (const auto& t : csyntax::lex(source)) {
        if (t.kind != csyntax::TokenKind::Identifier || !t.text.starts_with(kMaskPrefix)) continue;
        auto digits = t.text.substr(kMaskPrefix.size());
        if (digits.size() < 3 || !digits.ends_with("__")) continue;
        found.emplace_back(std::stoi(digits.substr(0, digits.size() - 2)), t.span);
    }
    std::sort(found.begin(), found.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<Span> out;
    for (auto& f : found) out.push_back(f.second);
    return out;
}

const MaskCatalogEntry* entry_for_condition(std::string_view condition,
                                            const std::vector<MaskCatalogEntry>& catalog) {
    auto want = trim(condition);
    for (const auto& e : catalog) {
        if (e.style != MaskStyle::SingleIterationLoop && e.condition() == want) return &e;
    }
    return nullptr;
}

}  // namespace

std::vector<Span> mask_slots_of(std::string_view source) { return find_mask_slots(source); }

std::optional<std::size_t> statement_indent(std::string_view source, const Span& span) {
    return line_indent(source, span);
}

std::string statement_text(std::string_view source, const Span& span) {
    return dedented(source, span);
}

std::string insert_helpers(std::string source, std::string_view function_name,
                           const std::vector<const MaskCatalogEntry*>& entries) {
    std::vector<const MaskCatalogEntry*> needed;
    for (const auto* e : entries) {
        if (e->helper.empty()) continue;
        if (std::any_of(needed.begin(), needed.end(),
                        [&](const MaskCatalogEntry* n) { return n->helper_name == e->helper_name; })) {
            continue;
        }
        if (source.find(e->helper) != std::string::npos) continue;
        needed.push_back(e);
    }
    if (needed.empty()) return source;
    std::sort(needed.begin(), needed.end(),
              [](const auto* a, const auto* b) { return a->helper_name < b->helper_name; });
    auto ast = csyntax::parse(source);
    std::size_t at = 0;
    for (auto c : ast.node(ast.root()).children) {
        const auto& n = ast.node(c);
        if (n.kind == NodeKind::FunctionDef && n.text == function_name) {
            at = n.span.byte_start;
            break;
        }
    }
    std::string text;
    for (const auto* e : needed) text += e->helper + "\n\n";
    source.insert(at, text);
    return source;
}

std::string_view structure_name(Structure s) {
    switch (s) {
    case Structure::Outer: return "Outer";
    case Structure::Inner: return "Inner";
    case Structure::OuterInner: return "OuterInner";
    }
    return "?";
}

std::string_view behavior_name(Behavior b) {
    switch (b) {
    case Behavior::Safe: return "Safe";
    case Behavior::Unsafe: return "Unsafe";
    case Behavior::Impaired: return "Impaired";
    }
    return "?";
}

std::string_view compile_status_name(CompileStatus s) {
    switch (s) {
    case CompileStatus::Unchecked: return "Unchecked";
    case CompileStatus::Ok: return "Ok";
    case CompileStatus::Failed: return "Failed";
    }
    return "?";
}

std::string_view mask_style_name(MaskStyle s) {
    switch (s) {
    case MaskStyle::GlobalConstFlag: return "GlobalConstFlag";
    case MaskStyle::ConstExpr: return "ConstExpr";
    case MaskStyle::IdentityFunctionCall: return "IdentityFunctionCall";
    case MaskStyle::SingleIterationLoop: return "SingleIterationLoop";
    }
    return "?";
}

Structure parse_structure(std::string_view text) {
    for (auto s : {Structure::Outer, Structure::Inner, Structure::OuterInner}) {
        if (structure_name(s) == text) return s;
    }
    throw ConfigError("unknown structure '" + std::string(text) + "'");
}

Behavior parse_behavior(std::string_view text) {
    for (auto b : {Behavior::Safe, Behavior::Unsafe, Behavior::Impaired}) {
        if (behavior_name(b) == text) return b;
    }
    throw ConfigError("unknown behavior '" + std::string(text) + "'");
}

CompileStatus parse_compile_status(std::string_view text) {
    for (auto s : {CompileStatus::Unchecked, CompileStatus::Ok, CompileStatus::Failed}) {
        if (compile_status_name(s) == text) return s;
    }
    throw ConfigError("unknown compile status '" + std::string(text) + "'");
}

std::string Variant::id() const {
    std::string key = base_path;
    key += '|';
    key += structure_name(spec.structure);
    key += '|';
    key += behavior_name(spec.behavior);
    key += '|' + std::to_string(spec.injection_count) + '|' + std::to_string(spec.seed);
    key += masked() ? "|masked" : "|filled";
    return hex_id(fnv1a(key));
}

std::string MaskCatalogEntry::condition() const {
    if (style == MaskStyle::SingleIterationLoop) return "";
    auto open = condition_template.find('(');
    if (open == std::string::npos) return "";
    int depth = 0;
    for (std::size_t i = open; i < condition_template.size(); ++i) {
        if (condition_template[i] == '(') ++depth;
        if (condition_template[i] == ')' && --depth == 0) {
            return trim(std::string_view(condition_template).substr(open + 1, i - open - 1));
        }
    }
    return "";
}

std::vector<MaskCatalogEntry> default_catalog() {
    const std::string flag_true = "static const int STATIC_CONST_TRUE = 1;";
    const std::string flag_false = "static const int STATIC_CONST_FALSE = 0;";
    const std::string one = "static int neutralReturnsOne(void)\n{\n    return 1;\n}";
    const std::string zero = "static int neutralReturnsZero(void)\n{\n    return 0;\n}";
    return {
        {"flag_true", "if (STATIC_CONST_TRUE) {@}", TruthValue::AlwaysTrue,
         MaskStyle::GlobalConstFlag, flag_true, "STATIC_CONST_TRUE"},
        {"flag_false", "if (STATIC_CONST_FALSE) {@}", TruthValue::AlwaysFalse,
         MaskStyle::GlobalConstFlag, flag_false, "STATIC_CONST_FALSE"},
        {"expr_true", "if (5 == 5) {@}", TruthValue::AlwaysTrue, MaskStyle::ConstExpr, "", ""},
        {"expr_false", "if (5 != 5) {@}", TruthValue::AlwaysFalse, MaskStyle::ConstExpr, "", ""},
        {"call_true", "if (neutralReturnsOne()) {@}", TruthValue::AlwaysTrue,
         MaskStyle::IdentityFunctionCall, one, "neutralReturnsOne"},
        {"call_false", "if (neutralReturnsZero()) {@}", TruthValue::AlwaysFalse,
         MaskStyle::IdentityFunctionCall, zero, "neutralReturnsZero"},
        {"loop_true", "while (1) {@ break;}", TruthValue::AlwaysTrue,
         MaskStyle::SingleIterationLoop, "", ""},
        {"loop_false", "while (0) {@ break;}", TruthValue::AlwaysFalse,
         MaskStyle::SingleIterationLoop, "", ""},
    };
}

std::vector<MaskCatalogEntry> load_catalog(std::string_view json_text) {
    std::vector<MaskCatalogEntry> out;
    try {
        auto doc = nlohmann::json::parse(json_text);
        for (const auto& j : doc) {
            MaskCatalogEntry e;
            e.id = j.at("id").get<std::string>();
            e.condition_template = j.at("condition_template").get<std::string>();
            auto truth = j.at("truth_value").get<std::string>();
            if (truth == "AlwaysTrue") {
                e.truth_value = TruthValue::AlwaysTrue;
            } else if (truth == "AlwaysFalse") {
                e.truth_value = TruthValue::AlwaysFalse;
            } else {
                throw ConfigError("catalog entry " + e.id + ": bad truth_value " + truth);
            }
            auto style = j.at("style").get<std::string>();
            bool known = false;
            for (auto s : {MaskStyle::GlobalConstFlag, MaskStyle::ConstExpr,
                           MaskStyle::IdentityFunctionCall, MaskStyle::SingleIterationLoop}) {
                if (mask_style_name(s) == style) {
                    e.style = s;
                    known = true;
                }
            }
            if (!known) throw ConfigError("catalog entry " + e.id + ": bad style " + style);
            if (e.condition_template.find('@') == std::string::npos) {
                throw ConfigError("catalog entry " + e.id + ": template has no '@' hole");
            }
            e.helper = j.value("helper", "");
            e.helper_name = j.value("helper_name", "");
            out.push_back(std::move(e));
        }
    } catch (const nlohmann::json::exception& ex) {
        throw ConfigError(std::string("catalog: ") + ex.what());
    }
    return out;
}

BlockExtraction extract_blocks(const flow::SourceUnit& unit) {
    auto body_of = [&](const std::string& name) {
        return unit.ast.node(unit.function_node(name)).children.back();
    };
    BlockExtraction out;
    extract_into(unit, body_of(unit.safe_fn), body_of(unit.unsafe_fn), 0, out);
    out.return_type = normalized_return_type(
        unit.ast.node(unit.ast.node(unit.function_node(unit.unsafe_fn)).children.front()).text);
    return out;
}

std::string impaired_block_for(std::string_view return_type) {
    std::string block = "printf(\"" + std::string(kImpairedMarker) + "\\n\");\n";
    auto type = normalized_return_type(return_type);
    if (type == "void") {
        block += "return;";
    } else if (type.find('*') != std::string::npos) {
        block += "return NULL;";
    } else {
        static const std::set<std::string, std::less<>> kScalar = {
            "char",  "short", "int",  "long",     "float",    "double", "signed",
            "unsigned", "_Bool", "bool", "const", "volatile", "wchar_t"};
        bool scalar = true;
        std::size_t i = 0;
        while (i < type.size()) {
            auto j = type.find(' ', i);
            if (j == std::string::npos) j = type.size();
            auto word = std::string_view(type).substr(i, j - i);
            if (!kScalar.count(word) && !word.ends_with("_t")) scalar = false;
            i = j + 1;
        }
        if (scalar) {
            block += "return 0;";
        } else {
            block += "{\n    " + type + " zeroValue = {0};\n    return zeroValue;\n}";
        }
    }
    return block;
}

std::string make_impaired_block(const flow::SourceUnit& unit) {
    auto fn = unit.function_node(unit.unsafe_fn);
    return impaired_block_for(unit.ast.node(unit.ast.node(fn).children.front()).text);
}

Variant wrap_structure(const flow::SourceUnit& unit, const VariantSpec& spec) {
    auto blocks = extract_blocks(unit);
    auto impaired = impaired_block_for(blocks.return_type);
    std::mt19937_64 rng(derive_seed(spec.seed, "layout"));

    auto block_text = [&](Behavior b) {
        std::string text;
        const auto& lines = b == Behavior::Safe ? blocks.safe_block : blocks.unsafe_block;
        for (const auto& l : lines) text += l + "\n";
        return text;
    };
    auto inline_block = [&](std::string& out, Behavior b, int depth) {
        if (b == Behavior::Impaired) {
            emit(out, impaired, depth);
        } else {
            emit(out, block_text(b), depth);
        }
    };
    auto full_branch = [&](std::string& out, Behavior b, int depth) {
        if (b == Behavior::Impaired) {
            emit(out, impaired, depth);
            return;
        }
        for (const auto& p : blocks.prefix) emit(out, p.text, depth + p.depth);
        inline_block(out, b, depth + blocks.hole_depth);
        for (const auto& p : blocks.suffix) emit(out, p.text, depth + p.depth);
    };
    auto guarded = [&](std::string& out, int slot, int depth, auto then_fn, auto else_fn) {
        emit(out, "if (" + mask_placeholder(slot) + ")", depth);
        emit(out, "{", depth);
        then_fn(depth + 1);
        emit(out, "}", depth);
        emit(out, "else", depth);
        emit(out, "{", depth);
        else_fn(depth + 1);
        emit(out, "}", depth);
    };

    Variant v;
    v.spec = spec;
    v.base_path = unit.path;
    v.cwe_id = unit.cwe_id;
    v.function_name = unit.unsafe_fn;

    std::string body = "{\n";
    if (spec.structure == Structure::OuterInner) {
        std::array<Behavior, 3> order{Behavior::Safe, Behavior::Unsafe, Behavior::Impaired};
        for (std::size_t i = order.size() - 1; i > 0; --i) {
            std::swap(order[i], order[rng() % (i + 1)]);
        }
        guarded(
            body, 1, 1,
            [&](int d) {
                for (const auto& p : blocks.prefix) emit(body, p.text, d + p.depth);
                guarded(
                    body, 2, d + blocks.hole_depth,
                    [&](int dd) { inline_block(body, order[0], dd); },
                    [&](int dd) { inline_block(body, order[1], dd); });
                for (const auto& p : blocks.suffix) emit(body, p.text, d + p.depth);
            },
            [&](int d) { full_branch(body, order[2], d); });
        v.routes = {{order[0], {true, true}}, {order[1], {true, false}},
                    {order[2], {false, std::nullopt}}};
    } else {
        std::vector<Behavior> others;
        for (auto b : {Behavior::Safe, Behavior::Unsafe, Behavior::Impaired}) {
            if (b != spec.behavior) others.push_back(b);
        }
        Behavior decoy = others[rng() % others.size()];
        bool first = rng() % 2 == 0;
        Behavior then_b = first ? spec.behavior : decoy;
        Behavior else_b = first ? decoy : spec.behavior;
        if (spec.structure == Structure::Outer) {
            guarded(
                body, 1, 1, [&](int d) { full_branch(body, then_b, d); },
                [&](int d) { full_branch(body, else_b, d); });
        } else {
            for (const auto& p : blocks.prefix) emit(body, p.text, 1 + p.depth);
            guarded(
                body, 1, 1 + blocks.hole_depth,
                [&](int d) { inline_block(body, then_b, d); },
                [&](int d) { inline_block(body, else_b, d); });
            for (const auto& p : blocks.suffix) emit(body, p.text, 1 + p.depth);
        }
        v.routes = {{then_b, {true}}, {else_b, {false}}};
    }
    body += "}";

    const auto& fn_body = unit.ast.node(unit.ast.node(unit.function_node(unit.unsafe_fn)).children.back());
    std::string source = unit.source.substr(0, fn_body.span.byte_start) + body +
                         unit.source.substr(fn_body.span.byte_end);
    bool has_stdio = false;
    for (const auto& t : csyntax::lex(source, true)) {
        if (t.kind == csyntax::TokenKind::Directive && t.text.find("#include") != std::string::npos &&
            (t.text.find("stdio.h") != std::string::npos ||
             t.text.find("std_testcase.h") != std::string::npos)) {
            has_stdio = true;
        }
    }
    if (!has_stdio) source = "#include <stdio.h>\n" + source;
    v.source = std::move(source);
    v.mask_slots = find_mask_slots(v.source);
    return v;
}

bool condition_truth(std::string_view condition, const std::vector<MaskCatalogEntry>& catalog) {
    const auto* e = entry_for_condition(condition, catalog);
    if (!e) throw ConfigError("condition '" + std::string(condition) + "' is not in the catalog");
    return e->truth_value == TruthValue::AlwaysTrue;
}

std::optional<Behavior> route_of(const Variant& masked, const std::vector<bool>& slot_truths) {
    for (const auto& r : masked.routes) {
        if (r.slot_values.size() != slot_truths.size()) continue;
        bool match = true;
        for (std::size_t i = 0; i < slot_truths.size(); ++i) {
            if (r.slot_values[i] && *r.slot_values[i] != slot_truths[i]) match = false;
        }
        if (match) return r.behavior;
    }
    return std::nullopt;
}

std::vector<std::string> route_conditions(const Variant& masked, Behavior behavior,
                                          const std::vector<MaskCatalogEntry>& catalog,
                                          std::uint64_t seed) {
    auto route = std::find_if(masked.routes.begin(), masked.routes.end(),
                              [&](const Route& r) { return r.behavior == behavior; });
    if (route == masked.routes.end()) {
        throw BehaviorUnavailable(std::string(behavior_name(behavior)) +
                                  " block is not part of this layout");
    }
    std::vector<const MaskCatalogEntry*> truthy, falsy;
    for (const auto& e : catalog) {
        if (e.style == MaskStyle::SingleIterationLoop) continue;
        (e.truth_value == TruthValue::AlwaysTrue ? truthy : falsy).push_back(&e);
    }
    std::mt19937_64 rng(derive_seed(seed, "fill"));
    std::vector<std::string> out;
    for (const auto& value : route->slot_values) {
        bool want = value ? *value : (rng() % 2 == 0);
        const auto& pool = want ? truthy : falsy;
        if (pool.empty()) {
            throw CatalogEmpty(std::string("no ") + (want ? "always-true" : "always-false") +
                               " condition in the catalog");
        }
        out.push_back(pool[rng() % pool.size()]->condition());
    }
    return out;
}

Variant fill_slots(const Variant& masked, const std::vector<std::string>& conditions,
                   const std::vector<MaskCatalogEntry>& catalog) {
    if (conditions.size() != masked.mask_slots.size()) {
        throw ConfigError("expected " + std::to_string(masked.mask_slots.size()) +
                          " conditions, got " + std::to_string(conditions.size()));
    }
    std::vector<const MaskCatalogEntry*> used;
    std::vector<bool> truths;
    for (const auto& c : conditions) {
        const auto* e = entry_for_condition(c, catalog);
        if (!e) throw ConfigError("condition '" + c + "' is not in the catalog");
        used.push_back(e);
        truths.push_back(e->truth_value == TruthValue::AlwaysTrue);
    }
    Variant v = masked;
    std::vector<std::size_t> order(conditions.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return masked.mask_slots[a].byte_start > masked.mask_slots[b].byte_start;
    });
    for (auto i : order) {
        const auto& s = masked.mask_slots[i];
        v.source.replace(s.byte_start, s.length(), conditions[i]);
    }
    v.source = insert_helpers(std::move(v.source), v.function_name, used);
    v.mask_slots.clear();
    v.fills = conditions;
    if (auto b = route_of(masked, truths)) v.spec.behavior = *b;
    v.compile_status = CompileStatus::Unchecked;
    return v;
}

Variant fill_mask(const Variant& masked, Behavior behavior,
                  const std::vector<MaskCatalogEntry>& catalog, std::uint64_t seed) {
    if (catalog.empty()) throw CatalogEmpty("mask catalog is empty");
    if (!masked.masked()) throw ConfigError("variant has no open mask slot");
    auto v = fill_slots(masked, route_conditions(masked, behavior, catalog, seed), catalog);
    v.spec.behavior = behavior;
    return v;
}

}  // namespace vrbench::variant
