#include <algorithm>
#include <cctype>
#include <random>
#include <regex>
#include <set>

#include "vrbench/question.hpp"

namespace vrbench::question {

using flow::ElementId;
using flow::ElementKind;
using variant::Behavior;

struct GraphCacheEntry {
    flow::FlowGraph dfg;
    flow::FlowGraph cfg;
    flow::ImpactAnalyzer analyzer;

    explicit GraphCacheEntry(const flow::SourceUnit& unit)
        : dfg(flow::build_dfg(unit)), cfg(flow::build_cfg(unit)), analyzer(dfg, cfg) {}
};

namespace {

// Hop caps only move difficulty, never the answer.
constexpr std::uint32_t kMaxHops = 4;

std::string render(std::string_view tpl, const std::map<std::string, std::string>& vars) {
    std::string out;
    std::size_t i = 0;
    while (i < tpl.size()) {
        if (tpl[i] == '{') {
            auto close = tpl.find('}', i);
            if (close != std::string_view::npos) {
                auto it = vars.find(std::string(tpl.substr(i + 1, close - i - 1)));
                if (it != vars.end()) {
                    out += it->second;
                    i = close + 1;
                    continue;
                }
            }
        }
        out.push_back(tpl[i++]);
    }
    return out;
}

std::string capitalized(std::string text) {
    if (!text.empty()) text[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(text[0])));
    return text;
}

std::string option_text(const FamilyTemplate& t, std::string_view key,
                        const std::map<std::string, std::string>& vars) {
    auto it = t.options.find(key);
    if (it == t.options.end()) throw ConfigError("template has no option " + std::string(key));
    return capitalized(render(it->second, vars));
}

std::string cwe_display(std::string_view cwe) {
    if (cwe.empty()) return "the target weakness";
    auto title = cwe_title(cwe);
    return title.empty() ? std::string(cwe) : std::string(cwe) + " (" + title + ")";
}

std::string numbered(std::string_view code) {
    std::string out;
    auto lines = split_lines(code);
    while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
    auto width = std::to_string(lines.size()).size();
    for (std::size_t i = 0; i < lines.size(); ++i) {
        auto n = std::to_string(i + 1);
        out += std::string(width - n.size(), ' ') + n + " | " + lines[i] + "\n";
    }
    return out;
}

std::string make_prompt(std::string_view code, std::string_view question, bool with_lines) {
    std::string body = with_lines ? numbered(code) : trim(code) + "\n";
    return "```c\n" + body + "```\n\n" + std::string(question);
}

std::string make_id(Family family, const Provenance& p, std::uint64_t seed) {
    std::string key(family_name(family));
    key += "|" + p.base_path + "|" + p.function_name;
    for (const auto& v : p.variant_ids) key += "|" + v;
    key += "|" + (p.src_element ? std::to_string(*p.src_element) : "-");
    key += "|" + (p.dst_element ? std::to_string(*p.dst_element) : "-");
    key += "|" + std::to_string(seed);
    return hex_id(fnv1a(key));
}

// Rewrites words with the renames used for the shown code; escapes are
// skipped the same way the masker skips them.
std::string mask_words(std::string_view text, const variant::MaskResult& mask) {
    std::string out;
    std::size_t i = 0;
    while (i < text.size()) {
        char c = text[i];
        if (c == '\\' && i + 1 < text.size()) {
            out.append(text.substr(i, 2));
            i += 2;
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            auto j = i;
            while (j < text.size() &&
                   (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_')) {
                ++j;
            }
            out += mask.renamed(std::string(text.substr(i, j - i)));
            i = j;
            continue;
        }
        out.push_back(c);
        ++i;
    }
    return out;
}

struct Shown {
    std::string code;
    std::uint32_t function_line = 1;
    std::uint32_t source_line = 1;
    variant::MaskResult mask;
    std::string function_name;
};

Shown show_function(const flow::SourceUnit& unit, const std::string& fn, const Policy& policy) {
    auto view = variant::function_view(unit.source, fn);
    Shown s;
    s.mask = variant::mask_labels_detailed(view.text, policy.deny, policy.pool,
                                           derive_seed(policy.seed, "mask|" + unit.path));
    s.code = s.mask.text;
    s.function_line = view.function_line;
    s.source_line = unit.element(*unit.function_named(fn)).span.line_start;
    s.function_name = s.mask.renamed(fn);
    return s;
}

struct Reference {
    std::string text;
    std::string quoted;
};

Reference describe(const Shown& shown, const flow::CodeElement& e) {
    auto name = mask_words(e.name, shown.mask);
    auto line = shown.function_line + (e.span.line_start - shown.source_line);
    std::string what;
    switch (e.kind) {
    case ElementKind::Variable: what = "the variable `" + name + "`"; break;
    case ElementKind::Literal: what = "the literal `" + name + "`"; break;
    case ElementKind::FunctionCall: what = "the call to `" + name + "`"; break;
    case ElementKind::ControlStatement: what = "the `" + name + "` statement"; break;
    default: what = "`" + name + "`"; break;
    }
    return {what + " on line " + std::to_string(line), name};
}

// Drops elements whose description is shared with another one.
std::vector<std::pair<ElementId, Reference>> unambiguous(const Shown& shown,
                                                         const flow::SourceUnit& unit,
                                                         const std::vector<ElementId>& ids) {
    std::map<std::string, int> seen;
    std::vector<std::pair<ElementId, Reference>> refs;
    for (auto id : ids) {
        auto r = describe(shown, unit.element(id));
        ++seen[r.text];
        refs.emplace_back(id, std::move(r));
    }
    std::erase_if(refs, [&](const auto& r) { return seen[r.second.text] > 1; });
    return refs;
}

struct Verdict {
    std::vector<std::string_view> categories;
    std::optional<int> difficulty;
};

int capped(std::uint32_t hops, std::uint32_t max_hops) {
    return static_cast<int>(std::min(hops, max_hops));
}

Verdict dataflow_verdict(const flow::ImpactAnalyzer& analyzer, ElementId src, ElementId dst,
                         std::uint32_t max_hops) {
    auto rel = analyzer.classify(src, dst);
    switch (rel.category) {
    case flow::ImpactCategory::DirectData:
        return {{category::kDirect}, capped(*rel.data_hops, max_hops)};
    case flow::ImpactCategory::Both:
        return {{category::kDirect, category::kIndirect}, capped(*rel.data_hops, max_hops)};
    case flow::ImpactCategory::IndirectControl:
        return {{category::kIndirect}, capped(*rel.control_hops, max_hops)};
    case flow::ImpactCategory::NoConnection:
        break;
    }
    return {{category::kNone}, std::nullopt};
}

Verdict controlflow_verdict(const flow::FlowGraph& cfg, const flow::ImpactAnalyzer& analyzer,
                            ElementId src, ElementId dst, std::uint32_t max_hops) {
    auto cfg_hops = flow::hop_distance(cfg, src, dst);
    if (cfg.has_edge(src, dst, flow::EdgeKind::ControlGuard)) {
        return {{category::kDirect}, capped(cfg_hops.value_or(1), max_hops)};
    }
    if (auto reach = analyzer.influence_distance(src, dst)) {
        return {{category::kIndirect}, capped(cfg_hops.value_or(*reach), max_hops)};
    }
    return {{category::kNone}, std::nullopt};
}

std::vector<std::string> labels_for(const Question& q, const std::vector<std::string_view>& cats) {
    std::vector<std::string> out;
    for (const auto& c : q.choices) {
        if (std::find(cats.begin(), cats.end(), c.category) != cats.end()) out.push_back(c.label);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<Choice> fixed_choices(const FamilyTemplate& t,
                                  const std::vector<std::string_view>& order,
                                  const std::map<std::string, std::string>& vars) {
    std::vector<Choice> out;
    for (std::size_t i = 0; i < order.size(); ++i) {
        out.push_back({std::string(1, static_cast<char>('A' + i)), option_text(t, order[i], vars),
                       std::string(order[i]), {}});
    }
    return out;
}

std::vector<Question> structure_questions(Family family, const flow::SourceUnit& unit,
                                          const flow::FlowGraph& cfg,
                                          const flow::ImpactAnalyzer& analyzer,
                                          const Policy& policy) {
    const auto& tpl = policy.templates.of(family);
    std::vector<Question> out;
    for (const auto& fn : {unit.safe_fn, unit.unsafe_fn}) {
        if (fn.empty() || !unit.function_named(fn)) continue;
        auto shown = show_function(unit, fn, policy);
        std::vector<ElementId> sources;
        std::vector<ElementId> targets;
        for (auto id : unit.elements_in(fn)) {
            const auto& e = unit.element(id);
            bool is_source = family == Family::DFL
                                 ? (e.kind == ElementKind::Variable || e.kind == ElementKind::Literal)
                                 : e.kind == ElementKind::ControlStatement;
            if (is_source) sources.push_back(id);
            if (flow::is_target(unit, e, policy.targets)) targets.push_back(id);
        }
        auto srcs = unambiguous(shown, unit, sources);
        auto dsts = unambiguous(shown, unit, targets);
        for (const auto& [s, sref] : srcs) {
            for (const auto& [d, dref] : dsts) {
                if (s == d) continue;
                Question q;
                q.family = family;
                q.provenance.base_path = unit.path;
                q.provenance.src_element = s;
                q.provenance.dst_element = d;
                q.provenance.function_name = fn;
                q.provenance.cwe_id = unit.cwe_id;
                std::map<std::string, std::string> vars{{"src", sref.text}, {"dst", dref.text}};
                q.code = shown.code;
                q.prompt = make_prompt(shown.code, render(tpl.question, vars), true);
                q.choices = fixed_choices(tpl,
                                          {category::kDirect, category::kNone, category::kIndirect,
                                           category::kUnknown},
                                          vars);
                auto verdict = family == Family::DFL
                                   ? dataflow_verdict(analyzer, s, d, policy.max_hops)
                                   : controlflow_verdict(cfg, analyzer, s, d, policy.max_hops);
                // A call inside the statement's own condition reads as a
                // trick question; leave it out.
                if (family == Family::CFL && !verdict.difficulty &&
                    unit.element(s).span.contains(unit.element(d).span)) {
                    continue;
                }
                q.answer_labels = labels_for(q, verdict.categories);
                q.difficulty = verdict.difficulty;
                q.code_refs = {sref.quoted, dref.quoted};
                q.id = make_id(family, q.provenance, policy.seed);
                out.push_back(std::move(q));
            }
        }
    }
    return out;
}

std::string_view behavior_category(Behavior b) {
    switch (b) {
    case Behavior::Safe: return category::kSafe;
    case Behavior::Impaired: return category::kBypass;
    case Behavior::Unsafe: return category::kUnsafe;
    }
    return category::kUnknown;
}

std::string render_masks(std::string code) {
    static const std::regex slot(R"(__mask_(\d+)__)");
    return std::regex_replace(code, slot, "<MASK_$1>");
}

void fill_variant_provenance(Question& q, const variant::Variant& v) {
    q.provenance.base_path = v.base_path;
    q.provenance.variant_ids = {v.id()};
    q.provenance.function_name = v.function_name;
    q.provenance.cwe_id = v.cwe_id;
    q.provenance.structure = std::string(variant::structure_name(v.spec.structure));
    q.provenance.injection_count = v.spec.injection_count;
    q.difficulty = variant_tier(v.spec.structure, v.spec.injection_count);
}

std::optional<Behavior> fill_route(const variant::Variant& masked,
                                   const std::vector<std::string>& fill,
                                   const std::vector<variant::MaskCatalogEntry>& catalog) {
    if (fill.size() != masked.mask_slots.size()) return std::nullopt;
    std::vector<bool> truths;
    for (const auto& c : fill) truths.push_back(variant::condition_truth(c, catalog));
    return variant::route_of(masked, truths);
}

std::string fill_text(const std::vector<std::string>& fill) {
    std::string out;
    for (std::size_t i = 0; i < fill.size(); ++i) {
        if (i) out += "; ";
        out += "<MASK_" + std::to_string(i + 1) + "> = `" + fill[i] + "`";
    }
    return out;
}

const GraphCacheEntry& graphs_for(const RecomputeContext& ctx, const std::string& base) {
    auto it = ctx.graphs.find(base);
    if (it != ctx.graphs.end()) return *it->second;
    auto u = ctx.units.find(base);
    if (u == ctx.units.end()) throw UnknownElement("no source unit for " + base);
    auto entry = std::make_shared<GraphCacheEntry>(*u->second);
    ctx.graphs.emplace(base, entry);
    return *entry;
}

const variant::Variant& variant_for(const RecomputeContext& ctx, const Question& q) {
    if (q.provenance.variant_ids.empty()) throw UnknownElement("question " + q.id + " has no variant");
    auto it = ctx.variants.find(q.provenance.variant_ids.front());
    if (it == ctx.variants.end()) {
        throw UnknownElement("unknown variant " + q.provenance.variant_ids.front());
    }
    return *it->second;
}

}  // namespace

std::vector<Question> gen_dataflow_questions(const flow::SourceUnit& unit, const flow::FlowGraph& dfg,
                                             const flow::FlowGraph& cfg, const Policy& policy) {
    flow::ImpactAnalyzer analyzer(dfg, cfg);
    return structure_questions(Family::DFL, unit, cfg, analyzer, policy);
}

std::vector<Question> gen_controlflow_questions(const flow::SourceUnit& unit,
                                                const flow::FlowGraph& dfg,
                                                const flow::FlowGraph& cfg, const Policy& policy) {
    flow::ImpactAnalyzer analyzer(dfg, cfg);
    return structure_questions(Family::CFL, unit, cfg, analyzer, policy);
}

std::vector<Question> gen_base_questions(const flow::SourceUnit& unit, const Policy& policy) {
    const auto& tpl = policy.templates.of(Family::Base);
    std::vector<Question> out;
    for (const auto& fn : {unit.safe_fn, unit.unsafe_fn}) {
        if (fn.empty() || !unit.function_named(fn)) continue;
        auto shown = show_function(unit, fn, policy);
        std::map<std::string, std::string> vars{{"cwe", cwe_display(unit.cwe_id)}};
        Question q;
        q.family = Family::Base;
        q.provenance.base_path = unit.path;
        q.provenance.function_name = fn;
        q.provenance.cwe_id = unit.cwe_id;
        q.code = shown.code;
        q.prompt = make_prompt(shown.code, render(tpl.question, vars), false);
        q.choices = fixed_choices(
            tpl, {category::kSafe, category::kBypass, category::kUnsafe, category::kUnknown}, vars);
        q.answer_labels =
            labels_for(q, {fn == unit.safe_fn ? category::kSafe : category::kUnsafe});
        q.id = make_id(Family::Base, q.provenance, policy.seed);
        out.push_back(std::move(q));
    }
    return out;
}

std::vector<Question> gen_counterfactual_questions(const std::vector<VariantTriple>& triples,
                                                   const Policy& policy) {
    const auto& tpl = policy.templates.of(Family::CTF);
    std::vector<Question> out;
    for (const auto& t : triples) {
        if (!t.safe || !t.impaired || !t.unsafe) throw IncompleteTriple("variant triple has a gap");
        const variant::Variant* members[] = {t.safe, t.impaired, t.unsafe};
        const Behavior expected[] = {Behavior::Safe, Behavior::Impaired, Behavior::Unsafe};
        for (int i = 0; i < 3; ++i) {
            const auto& v = *members[i];
            if (v.spec.behavior != expected[i] || v.base_path != t.safe->base_path ||
                v.spec.structure != t.safe->spec.structure ||
                v.spec.injection_count != t.safe->spec.injection_count ||
                v.spec.seed != t.safe->spec.seed) {
                throw IncompleteTriple("variant triple for " + t.safe->base_path +
                                       " differs in more than behavior");
            }
        }
        for (const auto* v : members) {
            Question q;
            q.family = Family::CTF;
            fill_variant_provenance(q, *v);
            std::map<std::string, std::string> vars{{"cwe", cwe_display(v->cwe_id)}};
            q.code = variant::function_code(v->source, v->function_name);
            q.prompt = make_prompt(q.code, render(tpl.question, vars), false);
            q.choices = fixed_choices(
                tpl, {category::kSafe, category::kBypass, category::kUnsafe, category::kUnknown},
                vars);
            q.answer_labels = labels_for(q, {behavior_category(v->spec.behavior)});
            q.id = make_id(Family::CTF, q.provenance, policy.seed);
            out.push_back(std::move(q));
        }
    }
    return out;
}

std::vector<std::vector<std::string>> goal_fills(const variant::Variant& masked,
                                                 const std::vector<variant::MaskCatalogEntry>& catalog,
                                                 std::uint64_t seed) {
    std::vector<std::vector<std::string>> out;
    for (auto b : {Behavior::Impaired, Behavior::Safe, Behavior::Unsafe}) {
        out.push_back(variant::route_conditions(
            masked, b, catalog, derive_seed(seed, "goal|" + std::string(variant::behavior_name(b)))));
    }
    return out;
}

Question gen_goaldriven_question(const variant::Variant& masked,
                                 const std::vector<std::vector<std::string>>& fills,
                                 const std::vector<variant::MaskCatalogEntry>& catalog,
                                 const Policy& policy) {
    if (!masked.masked()) throw ConfigError("goal-driven questions need an unfilled skeleton");
    std::set<Behavior> reached;
    std::vector<Behavior> routes;
    for (const auto& f : fills) {
        auto b = fill_route(masked, f, catalog);
        if (!b || !reached.insert(*b).second) {
            throw FillBehaviorClash("two fills lead to the same block of " + masked.base_path);
        }
        routes.push_back(*b);
    }
    if (fills.size() != 3 || !reached.count(Behavior::Safe)) {
        throw FillBehaviorClash("fills must reach the impaired, safe and unsafe blocks");
    }
    const auto& tpl = policy.templates.of(Family::GDV);
    Question q;
    q.family = Family::GDV;
    fill_variant_provenance(q, masked);
    q.provenance.structure = std::string(variant::structure_name(masked.spec.structure));
    std::map<std::string, std::string> vars{{"cwe", cwe_display(masked.cwe_id)}};
    q.code = render_masks(variant::function_code(masked.source, masked.function_name));
    std::map<std::string, std::string> helpers;
    for (const auto& f : fills) {
        for (const auto& cond : f) {
            for (const auto& e : catalog) {
                if (!e.helper.empty() && e.condition() == trim(cond) &&
                    q.code.find(e.helper) == std::string::npos) {
                    helpers.emplace(e.helper_name, e.helper);
                }
            }
        }
    }
    std::string prelude;
    for (const auto& [name, text] : helpers) prelude += text + "\n\n";
    q.code = prelude + q.code;
    q.prompt = make_prompt(q.code, render(tpl.question, vars), false);
    for (std::size_t i = 0; i < fills.size(); ++i) {
        auto v = vars;
        v["fills"] = fill_text(fills[i]);
        q.choices.push_back({std::string(1, static_cast<char>('A' + i)), option_text(tpl, "Fill", v),
                             std::string(behavior_category(routes[i])), fills[i]});
    }
    q.choices.push_back({"D", option_text(tpl, category::kUnknown, vars),
                         std::string(category::kUnknown), {}});
    q.answer_labels = labels_for(q, {category::kSafe});
    q.id = make_id(Family::GDV, q.provenance, policy.seed);
    return shuffle_options(q, derive_seed(policy.seed, "shuffle|" + q.id), policy.pin_unknown);
}

Question gen_predictive_question(const variant::Variant& v,
                                 const std::vector<std::string>& cwe_universe,
                                 const Policy& policy) {
    if (v.cwe_id.empty()) throw EmptyUniverse("variant of " + v.base_path + " has no CWE id");
    auto family = cwe_family(v.cwe_id);
    std::set<std::string> eligible;
    for (const auto& c : cwe_universe) {
        if (c != v.cwe_id && cwe_family(c) != family) eligible.insert(c);
    }
    if (eligible.empty()) throw EmptyUniverse("no CWE outside the family of " + v.cwe_id);
    std::vector<std::string> pool(eligible.begin(), eligible.end());
    std::mt19937_64 rng(derive_seed(policy.seed, "distractor|" + v.id()));
    const auto& other = pool[rng() % pool.size()];

    const auto& tpl = policy.templates.of(Family::PRD);
    Question q;
    q.family = Family::PRD;
    fill_variant_provenance(q, v);
    std::map<std::string, std::string> vars{{"cwe", cwe_display(v.cwe_id)},
                                            {"other_cwe", cwe_display(other)}};
    q.code = variant::function_code(v.source, v.function_name);
    q.prompt = make_prompt(q.code, render(tpl.question, vars), false);
    bool safe = v.spec.behavior == Behavior::Safe;
    q.choices = {
        {"A", option_text(tpl, category::kBypass, vars), std::string(category::kBypass), {}},
        {"B", option_text(tpl, safe ? "TargetSafe" : "Target", vars), std::string(category::kTarget),
         {}},
        {"C", option_text(tpl, category::kOthers, vars), std::string(category::kOthers), {}},
        {"D", option_text(tpl, category::kUnknown, vars), std::string(category::kUnknown), {}},
    };
    q.answer_labels = labels_for(
        q, {v.spec.behavior == Behavior::Impaired ? category::kBypass : category::kTarget});
    q.id = make_id(Family::PRD, q.provenance, policy.seed);
    return shuffle_options(q, derive_seed(policy.seed, "shuffle|" + q.id), policy.pin_unknown);
}

std::vector<std::string> recompute_answer(const Question& q, const RecomputeContext& ctx) {
    const auto& p = q.provenance;
    switch (q.family) {
    case Family::DFL:
    case Family::CFL: {
        if (!p.src_element || !p.dst_element) throw UnknownElement("question " + q.id + " has no elements");
        const auto& g = graphs_for(ctx, p.base_path);
        auto verdict = q.family == Family::DFL
                           ? dataflow_verdict(g.analyzer, *p.src_element, *p.dst_element, kMaxHops)
                           : controlflow_verdict(g.cfg, g.analyzer, *p.src_element,
                                                 *p.dst_element, kMaxHops);
        return labels_for(q, verdict.categories);
    }
    case Family::Base: {
        auto u = ctx.units.find(p.base_path);
        if (u == ctx.units.end()) throw UnknownElement("no source unit for " + p.base_path);
        const auto& unit = *u->second;
        if (p.function_name == unit.safe_fn) return labels_for(q, {category::kSafe});
        if (p.function_name == unit.unsafe_fn) return labels_for(q, {category::kUnsafe});
        throw UnknownElement("function " + p.function_name + " is not part of the pair");
    }
    case Family::CTF:
        return labels_for(q, {behavior_category(variant_for(ctx, q).spec.behavior)});
    case Family::PRD: {
        auto b = variant_for(ctx, q).spec.behavior;
        return labels_for(q, {b == Behavior::Impaired ? category::kBypass : category::kTarget});
    }
    case Family::GDV: {
        const auto& masked = variant_for(ctx, q);
        std::vector<std::string> out;
        for (const auto& c : q.choices) {
            if (c.fills.empty()) continue;
            if (fill_route(masked, c.fills, ctx.catalog) == Behavior::Safe) out.push_back(c.label);
        }
        return out;
    }
    }
    return {};
}

}  // namespace vrbench::question
