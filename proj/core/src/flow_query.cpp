#include <algorithm>
#include <deque>

#include <json.hpp>

#include "vrbench/flow.hpp"

namespace vrbench::flow {

namespace {

template <typename Successors>
std::optional<std::uint32_t> bfs(ElementId src, ElementId dst, Successors&& next) {
    if (src == dst) return 0;
    std::unordered_map<ElementId, std::uint32_t> dist{{src, 0}};
    std::deque<ElementId> queue{src};
    while (!queue.empty()) {
        auto u = queue.front();
        queue.pop_front();
        auto du = dist[u];
        for (auto v : next(u)) {
            if (dist.count(v)) continue;
            if (v == dst) return du + 1;
            dist.emplace(v, du + 1);
            queue.push_back(v);
        }
    }
    return std::nullopt;
}

bool graph_accepts(GraphKind graph, EdgeKind edge) {
    return graph == GraphKind::Data ? edge == EdgeKind::DataDep : edge != EdgeKind::DataDep;
}

}  // namespace

FlowGraph::FlowGraph(GraphKind kind, std::vector<ElementId> nodes, std::vector<FlowEdge> edges)
    : kind_(kind), nodes_(std::move(nodes)) {
    std::sort(nodes_.begin(), nodes_.end());
    nodes_.erase(std::unique(nodes_.begin(), nodes_.end()), nodes_.end());
    adjacency_.resize(nodes_.size());
    for (const auto& e : edges) {
        if (!graph_accepts(kind_, e.kind)) {
            throw InvalidGraph(std::string(edge_kind_name(e.kind)) + " edge in " +
                               (kind_ == GraphKind::Data ? "data" : "control") + " graph");
        }
        if (!has_node(e.src) || !has_node(e.dst)) {
            throw InvalidGraph("edge " + std::to_string(e.src) + "->" + std::to_string(e.dst) +
                               " has an endpoint outside the graph");
        }
        if (std::find(edges_.begin(), edges_.end(), e) != edges_.end()) continue;
        edges_.push_back(e);
        auto& succ = adjacency_[index_of(e.src)];
        if (std::find(succ.begin(), succ.end(), e.dst) == succ.end()) succ.push_back(e.dst);
    }
}

std::size_t FlowGraph::index_of(ElementId id) const {
    auto it = std::lower_bound(nodes_.begin(), nodes_.end(), id);
    if (it == nodes_.end() || *it != id) throw UnknownElement("element " + std::to_string(id));
    return static_cast<std::size_t>(it - nodes_.begin());
}

bool FlowGraph::has_node(ElementId id) const {
    return std::binary_search(nodes_.begin(), nodes_.end(), id);
}

bool FlowGraph::has_edge(ElementId src, ElementId dst, std::optional<EdgeKind> kind) const {
    return std::any_of(edges_.begin(), edges_.end(), [&](const FlowEdge& e) {
        return e.src == src && e.dst == dst && (!kind || e.kind == *kind);
    });
}

const std::vector<ElementId>& FlowGraph::successors(ElementId id) const {
    return adjacency_[index_of(id)];
}

std::vector<ElementId> FlowGraph::successors(ElementId id, EdgeKind kind) const {
    index_of(id);
    std::vector<ElementId> out;
    for (const auto& e : edges_) {
        if (e.src == id && e.kind == kind) out.push_back(e.dst);
    }
    return out;
}

std::vector<ElementId> FlowGraph::predecessors(ElementId id, EdgeKind kind) const {
    index_of(id);
    std::vector<ElementId> out;
    for (const auto& e : edges_) {
        if (e.dst == id && e.kind == kind) out.push_back(e.src);
    }
    return out;
}

std::optional<std::uint32_t> hop_distance(const FlowGraph& graph, ElementId src, ElementId dst) {
    if (!graph.has_node(src)) throw UnknownElement("element " + std::to_string(src));
    if (!graph.has_node(dst)) throw UnknownElement("element " + std::to_string(dst));
    return bfs(src, dst, [&](ElementId u) -> const std::vector<ElementId>& {
        return graph.successors(u);
    });
}

ImpactAnalyzer::ImpactAnalyzer(const FlowGraph& dfg, const FlowGraph& cfg) : dfg_(dfg), cfg_(cfg) {
    for (const auto& e : dfg.edges()) influence_[e.src].push_back(e.dst);
    for (const auto& e : cfg.edges()) {
        if (e.kind == EdgeKind::ControlGuard) influence_[e.src].push_back(e.dst);
    }
}

std::optional<std::uint32_t> ImpactAnalyzer::influence_distance(ElementId src, ElementId dst) const {
    static const std::vector<ElementId> kNone;
    return bfs(src, dst, [&](ElementId u) -> const std::vector<ElementId>& {
        auto it = influence_.find(u);
        return it == influence_.end() ? kNone : it->second;
    });
}

std::vector<ElementId> ImpactAnalyzer::guards_of(ElementId dst) const {
    return cfg_.predecessors(dst, EdgeKind::ControlGuard);
}

ImpactRelation ImpactAnalyzer::classify(ElementId src, ElementId dst) const {
    for (auto id : {src, dst}) {
        if (!dfg_.has_node(id) || !cfg_.has_node(id)) {
            throw UnknownElement("element " + std::to_string(id));
        }
    }
    ImpactRelation r;
    r.data_hops = hop_distance(dfg_, src, dst);
    auto influence = influence_distance(src, dst);
    if (r.data_hops) {
        bool guarded = false;
        for (auto g : guards_of(dst)) {
            if (influence_distance(src, g)) {
                guarded = true;
                break;
            }
        }
        if (guarded) {
            r.category = ImpactCategory::Both;
            r.control_hops = influence;
        } else {
            r.category = ImpactCategory::DirectData;
        }
    } else if (influence) {
        r.category = ImpactCategory::IndirectControl;
        r.control_hops = influence;
    }
    return r;
}

ImpactRelation classify_impact(const FlowGraph& dfg, const FlowGraph& cfg, ElementId src,
                               ElementId dst) {
    return ImpactAnalyzer(dfg, cfg).classify(src, dst);
}

std::string_view impact_category_name(ImpactCategory category) {
    switch (category) {
    case ImpactCategory::DirectData: return "DirectData";
    case ImpactCategory::NoConnection: return "NoConnection";
    case ImpactCategory::IndirectControl: return "IndirectControl";
    case ImpactCategory::Both: return "Both";
    }
    return "?";
}

std::string_view edge_kind_name(EdgeKind kind) {
    switch (kind) {
    case EdgeKind::DataDep: return "DataDep";
    case EdgeKind::ControlSucc: return "ControlSucc";
    case EdgeKind::ControlGuard: return "ControlGuard";
    }
    return "?";
}

std::string graph_to_jsonl(const SourceUnit& unit, const FlowGraph& graph) {
    std::string out;
    for (auto id : graph.nodes()) {
        const auto& e = unit.element(id);
        nlohmann::json j{{"type", "node"},
                         {"id", id},
                         {"kind", element_kind_name(e.kind)},
                         {"name", e.name},
                         {"line", e.span.line_start},
                         {"function", e.enclosing_function ? *e.enclosing_function : ""}};
        out += j.dump() + "\n";
    }
    for (const auto& e : graph.edges()) {
        nlohmann::json j{{"type", "edge"},
                         {"src", e.src},
                         {"dst", e.dst},
                         {"kind", edge_kind_name(e.kind)}};
        out += j.dump() + "\n";
    }
    return out;
}

}  // namespace vrbench::flow
