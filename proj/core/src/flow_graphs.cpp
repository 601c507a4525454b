#include <algorithm>
#include <optional>
#include <unordered_map>

#include "vrbench/flow.hpp"

namespace vrbench::flow {

using csyntax::NodeId;
using csyntax::NodeKind;

namespace {

// Library calls that write through a pointer argument, by argument index.
const std::unordered_map<std::string_view, std::size_t>& output_arguments() {
    static const std::unordered_map<std::string_view, std::size_t> kTable = {
        {"memcpy", 0},   {"memmove", 0},  {"memset", 0},   {"strcpy", 0},   {"strncpy", 0},
        {"strcat", 0},   {"strncat", 0},  {"wcscpy", 0},   {"wcsncpy", 0},  {"wcscat", 0},
        {"wcsncat", 0},  {"wmemset", 0},  {"wmemcpy", 0},  {"wmemmove", 0}, {"fgets", 0},
        {"fgetws", 0},   {"gets", 0},     {"sprintf", 0},  {"snprintf", 0}, {"swprintf", 0},
        {"vsnprintf", 0}, {"fread", 0},   {"read", 1},     {"recv", 1},     {"strcpy_s", 0},
    };
    return kTable;
}

bool is_incdec(const csyntax::Node& n) {
    return (n.kind == NodeKind::Postfix) ||
           (n.kind == NodeKind::Unary && (n.text == "++pre" || n.text == "--pre"));
}

bool is_effect(const csyntax::Node& n) {
    return n.kind == NodeKind::Call || n.kind == NodeKind::Assign || is_incdec(n);
}

using Set = std::vector<ElementId>;

void merge(Set& into, const Set& from) {
    for (auto e : from) {
        if (std::find(into.begin(), into.end(), e) == into.end()) into.push_back(e);
    }
}

class DataFlowBuilder {
public:
    explicit DataFlowBuilder(const SourceUnit& unit) : unit_(unit), ast_(unit.ast) {}

    std::vector<FlowEdge> run() {
        walk(ast_.root());
        return std::move(edges_);
    }

private:
    ElementId elem(NodeId id) const { return unit_.node_element[id]; }
    const csyntax::Node& node(NodeId id) const { return ast_.node(id); }

    void edge(ElementId src, ElementId dst) {
        if (src == kNoElement || dst == kNoElement || src == dst) return;
        edges_.push_back({src, dst, EdgeKind::DataDep});
    }
    void edges_into(const Set& srcs, ElementId dst) {
        for (auto s : srcs) edge(s, dst);
    }

    // Statement-level traversal.
    void walk(NodeId id) {
        const auto& n = node(id);
        switch (n.kind) {
        case NodeKind::Declarator: {
            auto var = elem(id);
            for (auto c : n.children) {
                const auto& child = node(c);
                if (child.kind == NodeKind::Initializer) {
                    auto src = sources(child.children.front());
                    edges_into(src, var);
                    edge(unit_.init_anchor[id], var);
                } else if (child.kind == NodeKind::ArrayDim && !child.children.empty()) {
                    sources(child.children.front());
                }
            }
            return;
        }
        case NodeKind::ExprStmt:
            sources(n.children.front());
            return;
        case NodeKind::If:
        case NodeKind::While:
        case NodeKind::Switch:
            edges_into(sources(n.children[0]), elem(id));
            for (std::size_t i = 1; i < n.children.size(); ++i) walk(n.children[i]);
            return;
        case NodeKind::DoWhile:
            walk(n.children[0]);
            edges_into(sources(n.children[1]), elem(id));
            return;
        case NodeKind::For: {
            walk(n.children[0]);
            if (node(n.children[1]).kind != NodeKind::Empty) {
                edges_into(sources(n.children[1]), elem(id));
            }
            if (node(n.children[2]).kind != NodeKind::Empty) sources(n.children[2]);
            walk(n.children[3]);
            return;
        }
        case NodeKind::Return:
            if (!n.children.empty()) edges_into(sources(n.children[0]), elem(id));
            return;
        case NodeKind::TypeName:
        case NodeKind::RecordDecl:
        case NodeKind::ParamList:
            return;
        default:
            break;
        }
        if (csyntax::is_expression(n.kind)) {
            sources(id);
            return;
        }
        for (auto c : n.children) walk(c);
    }

    // Variables written by an lvalue expression. Index expressions are
    // recorded as sources of the written variable.
    Set targets(NodeId id) {
        const auto& n = node(id);
        switch (n.kind) {
        case NodeKind::Ident:
            return {elem(id)};
        case NodeKind::Index: {
            auto base = targets(n.children[0]);
            auto idx = sources(n.children[1]);
            for (auto t : base) edges_into(idx, t);
            return base;
        }
        case NodeKind::Member:
        case NodeKind::Cast:
        case NodeKind::Postfix:
            return targets(n.children.back());
        case NodeKind::Unary:
            return targets(n.children.front());
        case NodeKind::Conditional: {
            sources(n.children[0]);
            auto a = targets(n.children[1]);
            merge(a, targets(n.children[2]));
            return a;
        }
        case NodeKind::Comma:
            sources(n.children[0]);
            return targets(n.children[1]);
        default:
            sources(id);
            return {};
        }
    }

    // Elements whose value flows into the value of `id`; records the data
    // edges of side effects met on the way.
    Set sources(NodeId id) {
        const auto& n = node(id);
        switch (n.kind) {
        case NodeKind::Ident:
        case NodeKind::IntLit:
        case NodeKind::FloatLit:
        case NodeKind::CharLit:
        case NodeKind::StringLit:
            return {elem(id)};
        case NodeKind::SizeofExpr:
        case NodeKind::SizeofType:
        case NodeKind::TypeName:
            return {};
        case NodeKind::Call:
            return {call(id)};
        case NodeKind::Assign: {
            auto rhs = sources(n.children[1]);
            auto lhs = targets(n.children[0]);
            if (n.text != "=") merge(rhs, lhs);
            for (auto t : lhs) {
                edges_into(rhs, t);
                edge(elem(id), t);
            }
            return lhs;
        }
        case NodeKind::Postfix:
        case NodeKind::Unary:
            if (is_incdec(n)) {
                auto lhs = targets(n.children[0]);
                for (auto t : lhs) edge(elem(id), t);
                return lhs;
            }
            return sources(n.children[0]);
        case NodeKind::Comma:
            sources(n.children[0]);
            return sources(n.children[1]);
        default:
            break;
        }
        Set out;
        for (auto c : n.children) merge(out, sources(c));
        return out;
    }

    ElementId call(NodeId id) {
        const auto& n = node(id);
        auto self = elem(id);
        if (node(n.children[0]).kind != NodeKind::Ident) sources(n.children[0]);
        auto out_arg = output_arguments().find(n.text);
        for (std::size_t i = 1; i < n.children.size(); ++i) {
            auto arg = n.children[i];
            edges_into(sources(arg), self);
            const auto& a = node(arg);
            bool address_of = a.kind == NodeKind::Unary && a.text == "&";
            bool out = out_arg != output_arguments().end() && out_arg->second == i - 1;
            if (address_of || out) {
                // Pointer arguments the callee writes through.
                for (auto t : lvalue_vars(address_of ? a.children[0] : arg)) edge(self, t);
            }
        }
        return self;
    }

    // Variables designated by an lvalue without recording index sources a
    // second time.
    Set lvalue_vars(NodeId id) {
        const auto& n = node(id);
        if (n.kind == NodeKind::Ident) return {elem(id)};
        if (n.kind == NodeKind::Index || n.kind == NodeKind::Member || n.kind == NodeKind::Cast ||
            n.kind == NodeKind::Unary) {
            return lvalue_vars(n.kind == NodeKind::Cast ? n.children.back() : n.children.front());
        }
        return {};
    }

    const SourceUnit& unit_;
    const csyntax::Ast& ast_;
    std::vector<FlowEdge> edges_;
};

struct StmtResult {
    std::optional<ElementId> entry;
    Set exits;
};

class ControlFlowBuilder {
public:
    explicit ControlFlowBuilder(const SourceUnit& unit) : unit_(unit), ast_(unit.ast) {}

    std::vector<FlowEdge> run() {
        for (auto f : unit_.functions) function(unit_.elements[f].node, f);
        return std::move(edges_);
    }

private:
    struct Jumps {
        Set breaks;
        Set continues;
    };

    ElementId elem(NodeId id) const { return unit_.node_element[id]; }
    const csyntax::Node& node(NodeId id) const { return ast_.node(id); }

    void function(NodeId fn, ElementId entry) {
        points_in_function_.clear();
        jumps_in_function_.clear();
        const auto& body = node(fn).children.back();
        build(body, {entry});
        for (auto [jump, guard] : jumps_in_function_) {
            const auto& js = unit_.elements[jump].span;
            for (auto p : points_in_function_) {
                if (unit_.elements[p].span.byte_start >= js.byte_end) {
                    edges_.push_back({guard, p, EdgeKind::ControlGuard});
                }
            }
        }
    }

    void link(const Set& preds, ElementId to) {
        for (auto p : preds) edges_.push_back({p, to, EdgeKind::ControlSucc});
    }

    // Appends `pts` in order after `preds`.
    StmtResult sequence(const Set& pts, Set preds) {
        StmtResult r;
        for (auto p : pts) {
            link(preds, p);
            if (!r.entry) r.entry = p;
            preds = {p};
        }
        r.exits = std::move(preds);
        return r;
    }

    void record_point(ElementId e) {
        points_in_function_.push_back(e);
        for (auto g : guard_stack_) edges_.push_back({g, e, EdgeKind::ControlGuard});
    }

    // Evaluation-order effect points of an expression: calls and writes,
    // post-order.
    void expr_points(NodeId id, Set& out) {
        const auto& n = node(id);
        if (n.kind == NodeKind::SizeofExpr || n.kind == NodeKind::SizeofType) return;
        for (std::size_t i = 0; i < n.children.size(); ++i) {
            if (n.kind == NodeKind::Call && i == 0 && node(n.children[0]).kind == NodeKind::Ident) {
                continue;
            }
            expr_points(n.children[i], out);
        }
        if (is_effect(n)) out.push_back(elem(id));
    }

    Set stmt_points(NodeId id) {
        const auto& n = node(id);
        Set pts;
        if (n.kind == NodeKind::ExprStmt) {
            auto top = n.children.front();
            expr_points(top, pts);
            auto e = elem(top);
            if (e != kNoElement && !is_effect(node(top)) &&
                unit_.elements[e].kind == ElementKind::Expression) {
                pts.push_back(e);
            }
        } else if (n.kind == NodeKind::Declaration) {
            for (auto c : n.children) {
                if (node(c).kind != NodeKind::Declarator) continue;
                for (auto dc : node(c).children) {
                    if (node(dc).kind == NodeKind::Initializer) {
                        expr_points(node(dc).children.front(), pts);
                        pts.push_back(unit_.init_anchor[c]);
                    }
                }
            }
        } else if (csyntax::is_expression(n.kind)) {
            expr_points(id, pts);
        }
        for (auto p : pts) record_point(p);
        return pts;
    }

    Set cond_points(NodeId expr) {
        Set pts;
        if (node(expr).kind != NodeKind::Empty) expr_points(expr, pts);
        for (auto p : pts) record_point(p);
        return pts;
    }

    StmtResult control_point(NodeId id, Set preds) {
        auto e = elem(id);
        record_point(e);
        link(preds, e);
        return {e, {e}};
    }

    static void chain_entry(StmtResult& r, const StmtResult& next) {
        if (!r.entry) r.entry = next.entry;
    }

    StmtResult build(NodeId id, Set preds) {
        const auto& n = node(id);
        switch (n.kind) {
        case NodeKind::Compound: {
            StmtResult r;
            r.exits = std::move(preds);
            for (auto c : n.children) {
                auto next = build(c, std::move(r.exits));
                chain_entry(r, next);
                r.exits = std::move(next.exits);
            }
            return r;
        }
        case NodeKind::ExprStmt:
        case NodeKind::Declaration:
            return sequence(stmt_points(id), std::move(preds));
        case NodeKind::If: {
            auto cond = sequence(cond_points(n.children[0]), std::move(preds));
            auto self = control_point(id, cond.exits);
            chain_entry(cond, self);
            guard_stack_.push_back(self.entry.value());
            auto then_r = build(n.children[1], self.exits);
            Set exits = then_r.exits;
            if (n.children.size() > 2) {
                merge(exits, build(n.children[2], self.exits).exits);
            } else {
                merge(exits, self.exits);
            }
            guard_stack_.pop_back();
            return {cond.entry, exits};
        }
        case NodeKind::While: {
            auto cond = sequence(cond_points(n.children[0]), std::move(preds));
            auto self = control_point(id, cond.exits);
            chain_entry(cond, self);
            auto head = cond.entry.value();
            Jumps jumps;
            auto body = loop_body(n.children[1], self.exits, self.entry.value(), jumps);
            merge(body.exits, jumps.continues);
            link(body.exits, head);
            Set exits = self.exits;
            merge(exits, jumps.breaks);
            return {cond.entry, exits};
        }
        case NodeKind::DoWhile: {
            auto e = elem(id);
            Jumps jumps;
            auto body = loop_body(n.children[0], preds, e, jumps);
            merge(body.exits, jumps.continues);
            auto cond = sequence(cond_points(n.children[1]), body.exits);
            auto self = control_point(id, cond.exits);
            ElementId head = body.entry ? *body.entry : (cond.entry ? *cond.entry : e);
            link({e}, head);
            StmtResult r{body.entry, self.exits};
            if (!r.entry) r.entry = cond.entry ? cond.entry : self.entry;
            merge(r.exits, jumps.breaks);
            return r;
        }
        case NodeKind::For: {
            auto init = build(n.children[0], std::move(preds));
            auto cond = sequence(cond_points(n.children[1]), init.exits);
            auto self = control_point(id, cond.exits);
            chain_entry(cond, self);
            auto head = cond.entry.value();
            Jumps jumps;
            guard_stack_.push_back(elem(id));
            loops_.push_back(&jumps);
            breaks_.push_back(&jumps.breaks);
            auto body = build(n.children[3], self.exits);
            breaks_.pop_back();
            loops_.pop_back();
            merge(body.exits, jumps.continues);
            auto incr = sequence(cond_points(n.children[2]), body.exits);
            guard_stack_.pop_back();
            link(incr.exits, head);
            StmtResult r{init.entry ? init.entry : cond.entry, self.exits};
            merge(r.exits, jumps.breaks);
            return r;
        }
        case NodeKind::Switch: {
            auto cond = sequence(cond_points(n.children[0]), std::move(preds));
            auto self = control_point(id, cond.exits);
            chain_entry(cond, self);
            Jumps jumps;
            guard_stack_.push_back(elem(id));
            switches_.push_back({elem(id), false});
            breaks_.push_back(&jumps.breaks);
            auto body = build(n.children[1], {});
            breaks_.pop_back();
            bool has_default = switches_.back().second;
            switches_.pop_back();
            guard_stack_.pop_back();
            Set exits = body.exits;
            merge(exits, jumps.breaks);
            if (!has_default) merge(exits, self.exits);
            return {cond.entry, exits};
        }
        case NodeKind::Case:
        case NodeKind::Default: {
            if (!switches_.empty()) {
                merge(preds, {switches_.back().first});
                if (n.kind == NodeKind::Default) switches_.back().second = true;
            }
            auto inner = n.kind == NodeKind::Case ? (n.children.size() > 1 ? n.children[1]
                                                                          : csyntax::kNoNode)
                                                  : (n.children.empty() ? csyntax::kNoNode
                                                                        : n.children[0]);
            if (inner == csyntax::kNoNode) return {std::nullopt, preds};
            return build(inner, std::move(preds));
        }
        case NodeKind::Label:
            if (n.children.empty()) return {std::nullopt, preds};
            return build(n.children[0], std::move(preds));
        case NodeKind::Break:
        case NodeKind::Continue: {
            auto self = control_point(id, preds);
            note_jump(self.entry.value());
            if (n.kind == NodeKind::Break && !breaks_.empty()) {
                breaks_.back()->push_back(self.entry.value());
            } else if (n.kind == NodeKind::Continue && !loops_.empty()) {
                loops_.back()->continues.push_back(self.entry.value());
            }
            return {self.entry, {}};
        }
        case NodeKind::Return: {
            Set pts;
            if (!n.children.empty()) pts = cond_points(n.children[0]);
            auto value = sequence(pts, std::move(preds));
            auto self = control_point(id, value.exits);
            chain_entry(value, self);
            note_jump(self.entry.value());
            return {value.entry, {}};
        }
        case NodeKind::Goto: {
            auto self = control_point(id, preds);
            note_jump(self.entry.value());
            return {self.entry, {}};
        }
        default:
            return {std::nullopt, preds};
        }
    }

    StmtResult loop_body(NodeId body, Set preds, ElementId loop, Jumps& jumps) {
        guard_stack_.push_back(loop);
        loops_.push_back(&jumps);
        breaks_.push_back(&jumps.breaks);
        auto r = build(body, std::move(preds));
        breaks_.pop_back();
        loops_.pop_back();
        guard_stack_.pop_back();
        return r;
    }

    void note_jump(ElementId jump) {
        if (!guard_stack_.empty()) jumps_in_function_.push_back({jump, guard_stack_.back()});
    }

    const SourceUnit& unit_;
    const csyntax::Ast& ast_;
    std::vector<FlowEdge> edges_;
    Set guard_stack_;
    std::vector<Jumps*> loops_;
    std::vector<Set*> breaks_;
    std::vector<std::pair<ElementId, bool>> switches_;
    Set points_in_function_;
    std::vector<std::pair<ElementId, ElementId>> jumps_in_function_;
};

std::vector<ElementId> all_elements(const SourceUnit& unit) {
    std::vector<ElementId> ids(unit.elements.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<ElementId>(i);
    return ids;
}

}  // namespace

FlowGraph build_dfg(const SourceUnit& unit) {
    return FlowGraph(GraphKind::Data, all_elements(unit), DataFlowBuilder(unit).run());
}

FlowGraph build_cfg(const SourceUnit& unit) {
    return FlowGraph(GraphKind::Control, all_elements(unit), ControlFlowBuilder(unit).run());
}

}  // namespace vrbench::flow
