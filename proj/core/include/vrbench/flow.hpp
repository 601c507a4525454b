#pragma once

// Code elements, data-flow and control-flow graphs, and impact queries over
// a parsed C translation unit.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "vrbench/c_syntax.hpp"
#include "vrbench/common.hpp"

namespace vrbench::flow {

using ElementId = std::uint32_t;
inline constexpr ElementId kNoElement = 0xffffffffu;

enum class ElementKind : std::uint8_t {
    Variable,
    Literal,
    Expression,
    FunctionCall,
    ControlStatement,
    FunctionDef,
};

std::string_view element_kind_name(ElementKind kind);

struct CodeElement {
    ElementId id = kNoElement;
    ElementKind kind = ElementKind::Expression;
    std::string name;
    Span span;
    std::optional<std::string> enclosing_function;
    // Declaring AST node (declarator, parameter, first use for implicit
    // variables) or the node the element stands for.
    csyntax::NodeId node = csyntax::kNoNode;
};

enum class EdgeKind : std::uint8_t { DataDep, ControlSucc, ControlGuard };
enum class GraphKind : std::uint8_t { Data, Control };

std::string_view edge_kind_name(EdgeKind kind);

struct FlowEdge {
    ElementId src = kNoElement;
    ElementId dst = kNoElement;
    EdgeKind kind = EdgeKind::DataDep;
    friend bool operator==(const FlowEdge&, const FlowEdge&) = default;
};

class FlowGraph {
public:
    FlowGraph() = default;
    /// Throws InvalidGraph when an edge endpoint is not a node or an edge kind
    /// does not belong to the graph kind. Duplicate edges are dropped.
    FlowGraph(GraphKind kind, std::vector<ElementId> nodes, std::vector<FlowEdge> edges);

    GraphKind kind() const { return kind_; }
    const std::vector<ElementId>& nodes() const { return nodes_; }
    const std::vector<FlowEdge>& edges() const { return edges_; }
    bool has_node(ElementId id) const;
    bool has_edge(ElementId src, ElementId dst, std::optional<EdgeKind> kind = std::nullopt) const;

    /// Successors over all edge kinds.
    const std::vector<ElementId>& successors(ElementId id) const;
    /// Successors restricted to one edge kind.
    std::vector<ElementId> successors(ElementId id, EdgeKind kind) const;
    std::vector<ElementId> predecessors(ElementId id, EdgeKind kind) const;

private:
    std::size_t index_of(ElementId id) const;

    GraphKind kind_ = GraphKind::Data;
    std::vector<ElementId> nodes_;  // sorted
    std::vector<FlowEdge> edges_;
    std::vector<std::vector<ElementId>> adjacency_;  // by node index
};

struct PairInfo {
    std::string safe_fn;
    std::string unsafe_fn;
    std::string cwe_id;
};

struct PairOptions {
    // Caller-provided pair; when absent the Juliet naming convention is used.
    std::optional<PairInfo> pair;
    bool require_pair = true;
    csyntax::ParseOptions parse;
};

struct SourceUnit {
    std::string path;
    std::string source;
    std::vector<CodeElement> elements;
    std::vector<ElementId> functions;
    std::string safe_fn;
    std::string unsafe_fn;
    std::string cwe_id;

    csyntax::Ast ast;
    // AST node -> element. Identifier nodes map to the variable they resolve
    // to; other nodes to the element they introduce, if any.
    std::vector<ElementId> node_element;
    // Declarator node -> anchor element of its initialization, if any.
    std::vector<ElementId> init_anchor;
    std::vector<std::string> warnings;

    const CodeElement& element(ElementId id) const;
    std::optional<ElementId> function_named(std::string_view name) const;
    csyntax::NodeId function_node(std::string_view name) const;
    bool is_user_function(std::string_view name) const;
    /// Elements whose enclosing function is `name`.
    std::vector<ElementId> elements_in(std::string_view name) const;
};

/// Parses a translation unit and collects code elements by depth-first
/// traversal. Throws ParseError or MissingPairError.
SourceUnit parse_source(std::string_view source, std::string path, const PairOptions& options = {});

/// Juliet naming convention: unsafe is `bad` / `*_bad`, safe is the first
/// `good*` helper that is not the `*_good` dispatcher (or the dispatcher when
/// no helper exists). CWE id comes from a `CWE<digits>_` file name prefix.
std::optional<PairInfo> match_juliet_pair(const SourceUnit& unit);
std::string cwe_from_path(std::string_view path);

FlowGraph build_dfg(const SourceUnit& unit);
FlowGraph build_cfg(const SourceUnit& unit);

/// Shortest path length in edges. Throws UnknownElement.
std::optional<std::uint32_t> hop_distance(const FlowGraph& graph, ElementId src, ElementId dst);

enum class ImpactCategory : std::uint8_t { DirectData, NoConnection, IndirectControl, Both };
std::string_view impact_category_name(ImpactCategory category);

struct ImpactRelation {
    ImpactCategory category = ImpactCategory::NoConnection;
    std::optional<std::uint32_t> data_hops;
    std::optional<std::uint32_t> control_hops;
};

/// Impact of `src` on `dst`. Influence is propagated along data edges and
/// control-guard edges; control successor edges only describe ordering.
ImpactRelation classify_impact(const FlowGraph& dfg, const FlowGraph& cfg, ElementId src,
                               ElementId dst);

/// Caches the influence graph for repeated queries over the same graphs.
class ImpactAnalyzer {
public:
    ImpactAnalyzer(const FlowGraph& dfg, const FlowGraph& cfg);
    ImpactRelation classify(ElementId src, ElementId dst) const;
    /// Distance along data and guard edges.
    std::optional<std::uint32_t> influence_distance(ElementId src, ElementId dst) const;
    /// Guards of `dst`: control statements with a guard edge into it.
    std::vector<ElementId> guards_of(ElementId dst) const;

private:
    const FlowGraph& dfg_;
    const FlowGraph& cfg_;
    std::unordered_map<ElementId, std::vector<ElementId>> influence_;
};

struct TargetPolicy {
    std::vector<std::string> sinks = default_sinks();
    bool include_user_defined = true;

    static std::vector<std::string> default_sinks();
};

/// FunctionCall elements counted as targets for impact questions.
bool is_target(const SourceUnit& unit, const CodeElement& element, const TargetPolicy& policy);

/// One JSON object per line: nodes first, then edges.
std::string graph_to_jsonl(const SourceUnit& unit, const FlowGraph& graph);

}  // namespace vrbench::flow
