#include <algorithm>
#include <regex>
#include <unordered_map>
#include <unordered_set>

#include "vrbench/flow.hpp"

namespace vrbench::flow {

using csyntax::NodeId;
using csyntax::NodeKind;

namespace {

class ElementCollector {
public:
    explicit ElementCollector(SourceUnit& unit) : unit_(unit), ast_(unit.ast) {
        unit_.node_element.assign(ast_.size(), kNoElement);
        unit_.init_anchor.assign(ast_.size(), kNoElement);
        scopes_.emplace_back();
    }

    void run() { visit(ast_.root()); }

private:
    ElementId add(ElementKind kind, std::string name, Span span, NodeId node) {
        CodeElement e;
        e.id = static_cast<ElementId>(unit_.elements.size());
        e.kind = kind;
        e.name = std::move(name);
        e.span = span;
        if (!function_.empty()) e.enclosing_function = function_;
        e.node = node;
        unit_.elements.push_back(std::move(e));
        return unit_.elements.back().id;
    }

    ElementId declare(const std::string& name, Span span, NodeId node) {
        auto id = add(ElementKind::Variable, name, span, node);
        scopes_.back()[name] = id;
        unit_.node_element[node] = id;
        return id;
    }

    ElementId resolve(const std::string& name, NodeId use) {
        for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
            auto found = it->find(name);
            if (found != it->end()) return found->second;
        }
        // Undeclared: macro constants and header globals become unit-level
        // variables.
        auto saved = std::exchange(function_, std::string());
        auto id = add(ElementKind::Variable, name, ast_.node(use).span, use);
        function_ = std::move(saved);
        scopes_.front()[name] = id;
        return id;
    }

    void visit_children(NodeId id) {
        for (auto child : ast_.node(id).children) visit(child);
    }

    void visit(NodeId id) {
        const auto& n = ast_.node(id);
        switch (n.kind) {
        case NodeKind::TranslationUnit:
        case NodeKind::ParamList:
        case NodeKind::ArrayDim:
        case NodeKind::Case:
        case NodeKind::Default:
        case NodeKind::Label:
        case NodeKind::ExprStmt:
        case NodeKind::Empty:
        case NodeKind::Initializer:
            visit_children(id);
            return;
        case NodeKind::TypeName:
        case NodeKind::RecordDecl:
            return;
        case NodeKind::FunctionDef: {
            auto saved = function_;
            function_ = n.text;
            auto fid = add(ElementKind::FunctionDef, n.text, n.span, id);
            unit_.node_element[id] = fid;
            unit_.functions.push_back(fid);
            scopes_.emplace_back();
            visit_children(id);
            scopes_.pop_back();
            function_ = saved;
            return;
        }
        case NodeKind::Param:
            if (!n.text.empty() && n.text != "...") declare(n.text, n.span, id);
            visit_children(id);
            return;
        case NodeKind::Declaration:
            if (n.text == "typedef") return;
            visit_children(id);
            return;
        case NodeKind::Declarator: {
            bool prototype = std::any_of(n.children.begin(), n.children.end(), [&](NodeId c) {
                return ast_.node(c).kind == NodeKind::ParamList;
            });
            if (prototype || n.text.empty()) return;
            declare(n.text, n.span, id);
            for (auto child : n.children) {
                if (ast_.node(child).kind == NodeKind::Initializer) {
                    auto anchor = add(ElementKind::Expression, "", n.span, child);
                    unit_.init_anchor[id] = anchor;
                    unit_.node_element[child] = anchor;
                }
                visit(child);
            }
            return;
        }
        case NodeKind::Compound:
        case NodeKind::For:
            if (n.kind == NodeKind::For) control(id);
            scopes_.emplace_back();
            visit_children(id);
            scopes_.pop_back();
            return;
        case NodeKind::If:
        case NodeKind::While:
        case NodeKind::DoWhile:
        case NodeKind::Switch:
        case NodeKind::Break:
        case NodeKind::Continue:
        case NodeKind::Return:
        case NodeKind::Goto:
            control(id);
            visit_children(id);
            return;
        case NodeKind::Ident:
            unit_.node_element[id] = resolve(n.text, id);
            return;
        case NodeKind::IntLit:
        case NodeKind::FloatLit:
        case NodeKind::CharLit:
        case NodeKind::StringLit:
            unit_.node_element[id] = add(ElementKind::Literal, n.text, n.span, id);
            return;
        case NodeKind::Call: {
            auto callee = n.children.front();
            std::string name = n.text;
            if (name.empty()) {
                name = std::string(csyntax::slice(unit_.source, ast_.node(callee).span));
                unit_.warnings.push_back("line " + std::to_string(n.span.line_start) +
                                         ": call through expression '" + name + "'");
            }
            unit_.node_element[id] = add(ElementKind::FunctionCall, name, n.span, id);
            for (std::size_t i = 0; i < n.children.size(); ++i) {
                if (i == 0 && ast_.node(callee).kind == NodeKind::Ident) continue;
                visit(n.children[i]);
            }
            return;
        }
        default:
            break;
        }
        if (csyntax::is_expression(n.kind)) {
            unit_.node_element[id] = add(ElementKind::Expression, "", n.span, id);
            visit_children(id);
            return;
        }
        visit_children(id);
    }

    void control(NodeId id) {
        const auto& n = ast_.node(id);
        std::string name(n.kind == NodeKind::Goto ? "goto" : n.text);
        unit_.node_element[id] = add(ElementKind::ControlStatement, name, n.span, id);
    }

    SourceUnit& unit_;
    const csyntax::Ast& ast_;
    std::vector<std::unordered_map<std::string, ElementId>> scopes_;
    std::string function_;
};

bool is_dispatcher(std::string_view name) {
    return name == "good" || name.ends_with("_good");
}

}  // namespace

const CodeElement& SourceUnit::element(ElementId id) const {
    if (id >= elements.size()) throw UnknownElement("element " + std::to_string(id));
    return elements[id];
}

std::optional<ElementId> SourceUnit::function_named(std::string_view name) const {
    for (auto f : functions) {
        if (elements[f].name == name) return f;
    }
    return std::nullopt;
}

NodeId SourceUnit::function_node(std::string_view name) const {
    auto f = function_named(name);
    if (!f) throw UnknownElement("function " + std::string(name));
    return elements[*f].node;
}

bool SourceUnit::is_user_function(std::string_view name) const {
    return function_named(name).has_value();
}

std::vector<ElementId> SourceUnit::elements_in(std::string_view name) const {
    std::vector<ElementId> out;
    for (const auto& e : elements) {
        if (e.enclosing_function && *e.enclosing_function == name) out.push_back(e.id);
    }
    return out;
}

std::string cwe_from_path(std::string_view path) {
    static const std::regex kCwe(R"(CWE[-_]?(\d+))", std::regex::icase);
    std::cmatch m;
    auto slash = path.find_last_of("/\\");
    auto base = slash == std::string_view::npos ? path : path.substr(slash + 1);
    if (std::regex_search(base.begin(), base.end(), m, kCwe)) return "CWE-" + m[1].str();
    return "";
}

std::optional<PairInfo> match_juliet_pair(const SourceUnit& unit) {
    PairInfo info;
    std::string dispatcher;
    for (auto f : unit.functions) {
        const auto& name = unit.elements[f].name;
        if (info.unsafe_fn.empty() && (name == "bad" || name.ends_with("_bad"))) {
            info.unsafe_fn = name;
        } else if (is_dispatcher(name)) {
            if (dispatcher.empty()) dispatcher = name;
        } else if (info.safe_fn.empty() && name.starts_with("good")) {
            info.safe_fn = name;
        }
    }
    if (info.safe_fn.empty()) info.safe_fn = dispatcher;
    if (info.safe_fn.empty() || info.unsafe_fn.empty()) return std::nullopt;
    info.cwe_id = cwe_from_path(unit.path);
    return info;
}

SourceUnit parse_source(std::string_view source, std::string path, const PairOptions& options) {
    SourceUnit unit;
    unit.path = std::move(path);
    unit.source = std::string(source);
    unit.ast = csyntax::parse(unit.source, options.parse);
    unit.warnings = unit.ast.warnings;
    ElementCollector(unit).run();

    std::optional<PairInfo> pair = options.pair;
    if (!pair) pair = match_juliet_pair(unit);
    if (!pair) {
        if (options.require_pair) {
            throw MissingPairError(unit.path + ": no safe/unsafe function pair");
        }
        return unit;
    }
    for (const auto* fn : {&pair->safe_fn, &pair->unsafe_fn}) {
        if (!unit.function_named(*fn)) {
            throw MissingPairError(unit.path + ": function '" + *fn + "' not found");
        }
    }
    if (pair->safe_fn == pair->unsafe_fn) {
        throw MissingPairError(unit.path + ": safe and unsafe function are the same");
    }
    unit.safe_fn = pair->safe_fn;
    unit.unsafe_fn = pair->unsafe_fn;
    unit.cwe_id = pair->cwe_id.empty() ? cwe_from_path(unit.path) : pair->cwe_id;
    return unit;
}

std::string_view element_kind_name(ElementKind kind) {
    switch (kind) {
    case ElementKind::Variable: return "Variable";
    case ElementKind::Literal: return "Literal";
    case ElementKind::Expression: return "Expression";
    case ElementKind::FunctionCall: return "FunctionCall";
    case ElementKind::ControlStatement: return "ControlStatement";
    case ElementKind::FunctionDef: return "FunctionDef";
    }
    return "?";
}

std::vector<std::string> TargetPolicy::default_sinks() {
    return {
        "memcpy",   "memmove",   "memset",   "strcpy",    "strncpy",    "strcat",     "strncat",
        "strlen",   "sprintf",   "snprintf", "vsnprintf", "printf",     "fprintf",    "puts",
        "fputs",    "fgets",     "gets",     "scanf",     "sscanf",     "fscanf",     "malloc",
        "calloc",   "realloc",   "free",     "alloca",    "atoi",       "atol",       "strtol",
        "strtoul",  "fread",     "fwrite",   "read",      "write",      "recv",       "send",
        "wcscpy",   "wcsncpy",   "wcscat",   "wcsncat",   "wcslen",     "wmemset",    "wmemcpy",
        "system",   "popen",     "execl",    "execlp",    "printLine",  "printWLine", "printIntLine",
        "printLongLine", "printLongLongLine", "printSizeTLine", "printHexCharLine",
        "printWcharLine", "printUnsignedLine", "printDoubleLine", "printFloatLine",
        "printStructLine", "printBytesLine", "printShortLine",
    };
}

bool is_target(const SourceUnit& unit, const CodeElement& element, const TargetPolicy& policy) {
    if (element.kind != ElementKind::FunctionCall) return false;
    if (policy.include_user_defined && unit.is_user_function(element.name)) return true;
    return std::find(policy.sinks.begin(), policy.sinks.end(), element.name) != policy.sinks.end();
}

}  // namespace vrbench::flow
