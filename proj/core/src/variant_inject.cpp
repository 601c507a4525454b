#include <algorithm>
#include <random>

#include "variant_internal.hpp"

namespace vrbench::variant {

using csyntax::Ast;
using csyntax::NodeId;
using csyntax::NodeKind;

namespace {

bool is_loop(NodeKind k) {
    return k == NodeKind::While || k == NodeKind::DoWhile || k == NodeKind::For;
}

// True when the subtree holds a jump or label that binds outside it.
bool has_escaping_jump(const Ast& ast, NodeId id, bool in_loop, bool in_switch) {
    const auto& n = ast.node(id);
    switch (n.kind) {
    case NodeKind::Break:
        return !in_loop && !in_switch;
    case NodeKind::Continue:
        return !in_loop;
    case NodeKind::Case:
    case NodeKind::Default:
        if (!in_switch) return true;
        break;
    case NodeKind::Label:
    case NodeKind::Goto:
        return true;
    default:
        break;
    }
    bool loop = in_loop || is_loop(n.kind);
    bool sw = in_switch || n.kind == NodeKind::Switch;
    for (auto c : n.children) {
        if (has_escaping_jump(ast, c, loop, sw)) return true;
    }
    return false;
}

bool eligible_kind(NodeKind k) {
    switch (k) {
    case NodeKind::ExprStmt:
    case NodeKind::If:
    case NodeKind::While:
    case NodeKind::DoWhile:
    case NodeKind::For:
    case NodeKind::Switch:
    case NodeKind::Return:
    case NodeKind::Compound:
        return true;
    default:
        return false;
    }
}

void collect(const Ast& ast, std::string_view source, NodeId id, std::vector<NodeId>& out) {
    const auto& n = ast.node(id);
    if (n.kind == NodeKind::Compound) {
        for (auto c : n.children) {
            const auto& child = ast.node(c);
            if (eligible_kind(child.kind) && statement_indent(source, child.span) &&
                !has_escaping_jump(ast, c, false, false)) {
                out.push_back(c);
            }
        }
    }
    for (auto c : n.children) collect(ast, source, c, out);
}

std::string indent_text(std::string_view text, std::string_view indent) {
    std::string out;
    bool first = true;
    for (const auto& line : split_lines(text)) {
        if (!first) out.push_back('\n');
        first = false;
        if (!line.empty()) out.append(indent);
        out.append(line);
    }
    return out;
}

std::string render_wrapper(const MaskCatalogEntry& entry, std::string_view stmt,
                           std::string_view indent) {
    const auto& tpl = entry.condition_template;
    auto hole = tpl.find('@');
    auto header = trim(std::string_view(tpl).substr(0, hole));
    if (header.ends_with("{")) header = trim(std::string_view(header).substr(0, header.size() - 1));
    auto tail = trim(std::string_view(tpl).substr(hole + 1));
    if (tail.ends_with("}")) tail = trim(std::string_view(tail).substr(0, tail.size() - 1));

    std::string inner(indent);
    inner += "    ";
    std::string out;
    out += header + "\n";
    out += std::string(indent) + "{\n";
    out += indent_text(stmt, inner) + "\n";
    if (!tail.empty()) out += inner + tail + "\n";
    out += std::string(indent) + "}";
    return out;
}

}  // namespace

Variant inject_control_flow(const Variant& variant, std::uint32_t count,
                            const std::vector<MaskCatalogEntry>& catalog, std::uint64_t seed) {
    if (count == 0) return variant;
    std::vector<const MaskCatalogEntry*> wrappers;
    for (const auto& e : catalog) {
        if (e.truth_value == TruthValue::AlwaysTrue) wrappers.push_back(&e);
    }
    if (wrappers.empty()) throw CatalogEmpty("no always-true entry for control-flow injection");

    auto ast = csyntax::parse(variant.source);
    NodeId body = csyntax::kNoNode;
    for (auto c : ast.node(ast.root()).children) {
        const auto& n = ast.node(c);
        if (n.kind == NodeKind::FunctionDef && n.text == variant.function_name) {
            body = n.children.back();
        }
    }
    if (body == csyntax::kNoNode) {
        throw UnknownElement("function " + variant.function_name + " not in variant");
    }
    std::vector<NodeId> candidates;
    collect(ast, variant.source, body, candidates);

    std::mt19937_64 rng(derive_seed(seed, "inject"));
    for (std::size_t i = candidates.size(); i > 1; --i) {
        std::swap(candidates[i - 1], candidates[rng() % i]);
    }
    struct Pick {
        Span span;
        const MaskCatalogEntry* entry;
    };
    std::vector<Pick> picks;
    for (auto c : candidates) {
        if (picks.size() >= count) break;
        const auto& span = ast.node(c).span;
        bool overlaps = std::any_of(picks.begin(), picks.end(),
                                    [&](const Pick& p) { return p.span.overlaps(span); });
        if (overlaps) continue;
        picks.push_back({span, wrappers[rng() % wrappers.size()]});
    }
    std::sort(picks.begin(), picks.end(),
              [](const Pick& a, const Pick& b) { return a.span.byte_start > b.span.byte_start; });

    Variant v = variant;
    std::vector<const MaskCatalogEntry*> used;
    for (const auto& p : picks) {
        auto column = *statement_indent(v.source, p.span);
        std::size_t line_start = p.span.byte_start - column;
        std::string indent = v.source.substr(line_start, column);
        auto stmt = statement_text(v.source, p.span);
        auto text = indent + render_wrapper(*p.entry, stmt, indent);
        v.source.replace(line_start, p.span.byte_end - line_start, text);
        used.push_back(p.entry);
    }
    v.source = insert_helpers(std::move(v.source), v.function_name, used);
    v.spec.injection_count += static_cast<std::uint32_t>(picks.size());
    v.mask_slots = mask_slots_of(v.source);
    v.compile_status = CompileStatus::Unchecked;
    return v;
}

}  // namespace vrbench::variant
