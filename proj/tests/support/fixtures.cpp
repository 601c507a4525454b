#include "support/fixtures.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>

#include <cstdlib>

#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;

using namespace vrbench;
using flow::ElementId;
using flow::ElementKind;

namespace vrtest {

std::string fixture_path(const std::string& rel) { return std::string(VRBENCH_TEST_DIR) + "/fixtures/" + rel; }
std::string juliet_dir() { return fixture_path("juliet"); }
std::string support_dir() { return fixture_path("support"); }
std::string sanitizer_dir() { return fixture_path("sanitizer"); }

std::vector<std::string> c_files(const std::string& dir) {
    std::vector<std::string> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().extension() == ".c") out.push_back(e.path().string());
    }
    std::sort(out.begin(), out.end());
    return out;
}

flow::SourceUnit load_unit(const std::string& path) {
    return flow::parse_source(read_file(path), fs::path(path).filename().string());
}

std::string temp_dir(const std::string& tag) {
    static std::atomic<int> counter{0};
    auto dir = fs::temp_directory_path() /
               ("vrtest_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir.string();
}

// ---------------------------------------------------------------------------

namespace {

class ToyWriter {
public:
    explicit ToyWriter(std::mt19937_64& rng) : rng_(rng) {}

    std::string program() {
        scopes_ = {{"p0", "p1"}};
        std::string body = block(0, 1 + pick(5));
        return "int helper(int v)\n{\n    return v + 1;\n}\n\nvoid toy(int p0, int p1)\n{\n" + body + "}\n";
    }

private:
    std::size_t pick(std::size_t n) { return static_cast<std::size_t>(rng_() % n); }

    std::vector<std::string> visible() const {
        std::vector<std::string> out;
        for (const auto& s : scopes_) out.insert(out.end(), s.begin(), s.end());
        return out;
    }

    std::string var() {
        auto v = visible();
        return v[pick(v.size())];
    }

    std::string expr() {
        switch (pick(5)) {
        case 0: return var();
        case 1: return std::to_string(pick(9));
        case 2: return var() + " + " + std::to_string(1 + pick(5));
        case 3: return var() + " * " + var();
        default: return "helper(" + var() + ")";
        }
    }

    std::string block(int depth, std::size_t count) {
        scopes_.emplace_back();
        std::string out;
        for (std::size_t i = 0; i < count; ++i) out += stmt(depth);
        scopes_.pop_back();
        return out;
    }

    std::string braces(int depth, std::size_t count, bool early_return = false) {
        std::string pad(4 * (depth + 1), ' ');
        auto inner = block(depth + 1, count);
        if (early_return) inner += pad + "    return;\n";
        return pad + "{\n" + inner + pad + "}\n";
    }

    std::string stmt(int depth) {
        std::string pad(4 * (depth + 1), ' ');
        auto kind = pick(depth >= 2 ? 4 : 8);
        switch (kind) {
        case 0: {
            auto name = "v" + std::to_string(next_var_++);
            auto line = pad + "int " + name + " = " + expr() + ";\n";
            scopes_.back().push_back(name);
            return line;
        }
        case 1: return pad + var() + " = " + expr() + ";\n";
        case 2: return pad + "printIntLine(" + expr() + ");\n";
        case 3: return pad + "helper(" + expr() + ");\n";
        case 4: {
            auto out = pad + "if (" + expr() + " > " + std::to_string(pick(9)) + ")\n" +
                       braces(depth, 1 + pick(2), pick(4) == 0);
            if (pick(2)) out += pad + "else\n" + braces(depth, 1 + pick(2));
            return out;
        }
        case 5: {
            auto v = var();
            return pad + "while (" + v + " < " + std::to_string(pick(9)) + ")\n" + pad + "{\n" +
                   block(depth + 1, 1 + pick(2)) + pad + "    " + v + " = " + v + " + 1;\n" +
                   (pick(3) == 0 ? pad + "    break;\n" : std::string()) + pad + "}\n";
        }
        case 6: {
            auto v = var();
            return pad + "for (" + v + " = 0; " + v + " < " + std::to_string(1 + pick(5)) + "; " + v +
                   "++)\n" + braces(depth, 1 + pick(2));
        }
        default: {
            return pad + "switch (" + var() + ")\n" + pad + "{\n" + pad + "case 1:\n" + pad + "    " +
                   var() + " = " + expr() + ";\n" + pad + "    break;\n" + pad + "default:\n" + pad +
                   "    printIntLine(" + expr() + ");\n" + pad + "    break;\n" + pad + "}\n";
        }
        }
    }

    std::mt19937_64& rng_;
    std::vector<std::vector<std::string>> scopes_;
    int next_var_ = 0;
};

constexpr std::uint32_t kInf = 1u << 28;

using Matrix = std::vector<std::vector<std::uint32_t>>;

Matrix closure(std::size_t n, const std::vector<std::pair<ElementId, ElementId>>& edges) {
    Matrix d(n, std::vector<std::uint32_t>(n, kInf));
    for (std::size_t i = 0; i < n; ++i) d[i][i] = 0;
    for (auto [a, b] : edges) {
        if (a != b) d[a][b] = 1;
    }
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t i = 0; i < n; ++i) {
            if (d[i][k] == kInf) continue;
            for (std::size_t j = 0; j < n; ++j) {
                if (d[i][k] + d[k][j] < d[i][j]) d[i][j] = d[i][k] + d[k][j];
            }
        }
    }
    return d;
}

std::optional<std::uint32_t> finite(std::uint32_t x) {
    return x >= kInf ? std::nullopt : std::optional<std::uint32_t>(x);
}

std::string show(const std::optional<std::uint32_t>& x) { return x ? std::to_string(*x) : "-"; }

// Statements whose execution depends on control statement `node`.
std::vector<Span> guarded_regions(const csyntax::Ast& ast, csyntax::NodeId node) {
    const auto& n = ast.node(node);
    std::vector<Span> out;
    auto add = [&](std::size_t i) {
        if (i < n.children.size()) out.push_back(ast.node(n.children[i]).span);
    };
    switch (n.kind) {
    case csyntax::NodeKind::If: add(1); add(2); break;
    case csyntax::NodeKind::While: add(1); break;
    case csyntax::NodeKind::Switch: add(1); break;
    case csyntax::NodeKind::DoWhile: add(0); break;
    case csyntax::NodeKind::For: add(2); add(3); break;
    default: break;
    }
    return out;
}

bool is_jump(csyntax::NodeKind k) {
    return k == csyntax::NodeKind::Return || k == csyntax::NodeKind::Break ||
           k == csyntax::NodeKind::Continue || k == csyntax::NodeKind::Goto;
}

}  // namespace

std::string random_toy_program(std::mt19937_64& rng) { return ToyWriter(rng).program(); }

OracleReport check_graph_oracle(const flow::SourceUnit& unit, const std::string& function) {
    OracleReport report;
    auto dfg = flow::build_dfg(unit);
    auto cfg = flow::build_cfg(unit);
    auto n = unit.elements.size();
    auto in_fn = unit.elements_in(function);
    std::set<ElementId> members(in_fn.begin(), in_fn.end());

    // program points: anything the control graph orders
    std::set<ElementId> points;
    std::vector<std::pair<ElementId, ElementId>> data_edges, control_edges, actual_guards;
    for (const auto& e : dfg.edges()) data_edges.emplace_back(e.src, e.dst);
    for (const auto& e : cfg.edges()) {
        control_edges.emplace_back(e.src, e.dst);
        if (e.kind == flow::EdgeKind::ControlSucc) {
            for (auto id : {e.src, e.dst}) {
                if (members.count(id) && unit.element(id).kind != ElementKind::FunctionDef) points.insert(id);
            }
        }
        if (e.kind == flow::EdgeKind::ControlGuard && members.count(e.dst)) {
            actual_guards.emplace_back(e.src, e.dst);
        }
    }

    // guard edges from the syntax tree
    std::set<std::pair<ElementId, ElementId>> guards;
    std::vector<std::pair<ElementId, std::vector<Span>>> controls;
    for (auto id : in_fn) {
        const auto& el = unit.element(id);
        if (el.kind != ElementKind::ControlStatement || el.node == csyntax::kNoNode) continue;
        auto regions = guarded_regions(unit.ast, el.node);
        if (!regions.empty()) controls.emplace_back(id, regions);
    }
    for (const auto& [c, regions] : controls) {
        for (auto p : points) {
            for (const auto& r : regions) {
                if (r.contains(unit.element(p).span)) guards.insert({c, p});
            }
        }
    }
    for (auto j : in_fn) {
        const auto& el = unit.element(j);
        if (el.node == csyntax::kNoNode || !is_jump(unit.ast.node(el.node).kind)) continue;
        std::optional<ElementId> innermost;
        std::uint32_t best = ~0u;
        for (const auto& [c, regions] : controls) {
            for (const auto& r : regions) {
                if (r.contains(el.span) && r.length() < best) {
                    best = r.length();
                    innermost = c;
                }
            }
        }
        if (!innermost) continue;
        for (auto p : points) {
            if (unit.element(p).span.byte_start >= el.span.byte_end) guards.insert({*innermost, p});
        }
    }
    std::set<std::pair<ElementId, ElementId>> actual(actual_guards.begin(), actual_guards.end());
    for (const auto& g : guards) {
        if (!actual.count(g)) {
            report.mismatches.push_back("missing guard edge " + std::to_string(g.first) + "->" +
                                        std::to_string(g.second));
        }
    }
    for (const auto& g : actual) {
        if (!guards.count(g)) {
            report.mismatches.push_back("unexpected guard edge " + std::to_string(g.first) + "->" +
                                        std::to_string(g.second));
        }
    }

    auto dd = closure(n, data_edges);
    auto cd = closure(n, control_edges);
    std::vector<std::pair<ElementId, ElementId>> influence_edges = data_edges;
    influence_edges.insert(influence_edges.end(), guards.begin(), guards.end());
    auto id = closure(n, influence_edges);

    std::map<ElementId, std::vector<ElementId>> guards_of;
    for (const auto& [g, p] : guards) guards_of[p].push_back(g);

    flow::TargetPolicy policy;
    for (auto dst : in_fn) {
        const auto& target = unit.element(dst);
        if (target.kind != ElementKind::FunctionCall || !flow::is_target(unit, target, policy)) continue;
        for (auto src : in_fn) {
            ++report.pairs;
            flow::ImpactRelation want;
            want.data_hops = finite(dd[src][dst]);
            if (want.data_hops) {
                bool guarded = std::any_of(guards_of[dst].begin(), guards_of[dst].end(),
                                           [&](ElementId g) { return id[src][g] < kInf; });
                want.category = guarded ? flow::ImpactCategory::Both : flow::ImpactCategory::DirectData;
                if (guarded) want.control_hops = finite(id[src][dst]);
            } else if (id[src][dst] < kInf) {
                want.category = flow::ImpactCategory::IndirectControl;
                want.control_hops = finite(id[src][dst]);
            }
            auto got = flow::classify_impact(dfg, cfg, src, dst);
            if (got.category != want.category || got.data_hops != want.data_hops ||
                got.control_hops != want.control_hops) {
                report.mismatches.push_back(
                    "classify " + std::to_string(src) + "->" + std::to_string(dst) + ": got " +
                    std::string(flow::impact_category_name(got.category)) + " " + show(got.data_hops) + "/" +
                    show(got.control_hops) + ", want " +
                    std::string(flow::impact_category_name(want.category)) + " " + show(want.data_hops) +
                    "/" + show(want.control_hops));
            }
        }
    }
    for (auto a : in_fn) {
        for (auto b : in_fn) {
            report.hop_checks += 2;
            if (flow::hop_distance(dfg, a, b) != finite(dd[a][b])) {
                report.mismatches.push_back("dfg hop " + std::to_string(a) + "->" + std::to_string(b));
            }
            if (flow::hop_distance(cfg, a, b) != finite(cd[a][b])) {
                report.mismatches.push_back("cfg hop " + std::to_string(a) + "->" + std::to_string(b));
            }
        }
    }
    return report;
}

// ---------------------------------------------------------------------------

bool RunResult::flagged() const {
    return exit_code != 0 || err.find("runtime error") != std::string::npos ||
           err.find("AddressSanitizer") != std::string::npos;
}

namespace {

int shell(const std::string& cmd) {
    int status = std::system(cmd.c_str());
    if (status == -1) return -1;
    return WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
}

}  // namespace

RunResult run_with_sanitizers(const variant::Variant& v, const std::string& work_dir) {
    RunResult r;
    auto stem = (fs::path(work_dir) / v.id()).string();
    write_file(stem + ".c", v.source + "\n\nint main(void)\n{\n    " + v.function_name + "();\n    return 0;\n}\n");
    auto compile = "cc -std=gnu11 -g -O0 -w -fsanitize=address,undefined -fno-sanitize-recover=all "
                   "-fno-omit-frame-pointer -I'" +
                   support_dir() + "' -o '" + stem + ".bin' '" + stem + ".c' >'" + stem +
                   ".log' 2>&1";
    r.compiled = shell(compile) == 0;
    if (!r.compiled) {
        r.err = read_file(stem + ".log");
        return r;
    }
    r.exit_code = shell("ASAN_OPTIONS=detect_leaks=0 '" + stem + ".bin' >'" + stem + ".out' 2>'" + stem +
                        ".err' </dev/null");
    r.out = read_file(stem + ".out");
    r.err = read_file(stem + ".err");
    return r;
}

bool sanitizers_available() {
    static const bool ok = [] {
        auto dir = temp_dir("sancheck");
        write_file(dir + "/t.c", "int main(void) { return 0; }\n");
        bool built = shell("cc -fsanitize=address,undefined -o '" + dir + "/t' '" + dir + "/t.c' >/dev/null 2>&1") == 0;
        bool ran = built && shell("ASAN_OPTIONS=detect_leaks=0 '" + dir + "/t' >/dev/null 2>&1") == 0;
        fs::remove_all(dir);
        return ran;
    }();
    return ok;
}

std::vector<SanitizerPair> sanitizer_pairs() {
    return {
        {"CWE121_Stack_Based_Buffer_Overflow__char_memcpy_hand_01.c", "AAAAAAAAAAAAAAA"},
        {"CWE121_Stack_Based_Buffer_Overflow__int_index_hand_02.c", "out-of-bounds"},
        {"CWE190_Integer_Overflow__int_add_hand_03.c", "too large"},
        {"CWE190_Integer_Overflow__int_multiply_hand_04.c", "too large"},
        {"CWE369_Divide_by_Zero__int_divide_hand_05.c", "divide by zero"},
        {"CWE369_Divide_by_Zero__int_modulo_hand_06.c", "modulo by zero"},
    };
}

// ---------------------------------------------------------------------------

namespace {

std::vector<question::Choice> choices_for(question::Family f) {
    namespace cat = question::category;
    auto make = [](std::initializer_list<std::string_view> cats) {
        std::vector<question::Choice> out;
        char label = 'A';
        for (auto c : cats) {
            out.push_back({std::string(1, label++), std::string(c), std::string(c), {}});
        }
        return out;
    };
    switch (f) {
    case question::Family::DFL:
    case question::Family::CFL: return make({cat::kDirect, cat::kNone, cat::kIndirect, cat::kUnknown});
    case question::Family::GDV: return make({cat::kBypass, cat::kSafe, cat::kUnsafe, cat::kUnknown});
    case question::Family::PRD: return make({cat::kBypass, cat::kTarget, cat::kOthers, cat::kUnknown});
    default: return make({cat::kSafe, cat::kBypass, cat::kUnsafe, cat::kUnknown});
    }
}

}  // namespace

question::Question base_question(const std::string& id, const std::string& base, bool safe) {
    question::Question q;
    q.id = id;
    q.family = question::Family::Base;
    q.choices = choices_for(q.family);
    q.answer_labels = {safe ? "A" : "C"};
    q.provenance.base_path = base;
    q.provenance.cwe_id = "CWE-121";
    return q;
}

question::Question family_question(const std::string& id, question::Family family, const std::string& base,
                                   std::optional<int> difficulty) {
    question::Question q;
    q.id = id;
    q.family = family;
    q.choices = choices_for(family);
    q.answer_labels = {family == question::Family::GDV || family == question::Family::PRD ? "B" : "A"};
    q.provenance.base_path = base;
    q.provenance.cwe_id = "CWE-121";
    q.difficulty = difficulty;
    return q;
}

harness::EvalRecord record_for(const question::Question& q, bool correct, const std::string& model) {
    harness::EvalRecord r;
    r.question_id = q.id;
    r.model = model;
    if (correct) {
        r.extracted = q.answer_labels.front();
    } else {
        for (const auto& c : q.choices) {
            if (std::find(q.answer_labels.begin(), q.answer_labels.end(), c.label) == q.answer_labels.end() &&
                c.label != q.unknown_label()) {
                r.extracted = c.label;
                break;
            }
        }
    }
    r.correct = correct;
    return r;
}

}  // namespace vrtest

namespace vrtest {

question::RecomputeContext Corpus::context() const {
    question::RecomputeContext ctx;
    for (const auto& u : units) ctx.units[u.path] = &u;
    for (const auto& v : variants) ctx.variants[v.id()] = &v;
    for (const auto& v : skeletons) ctx.variants[v.id()] = &v;
    return ctx;
}

std::string syntax_check_command() {
    return "cc -fsyntax-only -w -x c -I '" + support_dir() + "' {src}";
}

Corpus build_corpus(const std::string& dir, std::uint64_t seed, const std::string& compiler) {
    Corpus c;
    pipeline::PipelineConfig cfg;
    cfg.seed = seed;
    cfg.compiler = compiler;
    auto catalog = variant::default_catalog();
    auto policy = pipeline::make_policy(cfg);
    for (const auto& path : c_files(dir)) c.units.push_back(load_unit(path));
    std::vector<std::string> universe = question::known_cwes();
    for (const auto& u : c.units) universe.push_back(u.cwe_id);
    std::sort(universe.begin(), universe.end());
    universe.erase(std::unique(universe.begin(), universe.end()), universe.end());
    for (const auto& u : c.units) {
        auto bv = pipeline::generate_base_variants(u, cfg, catalog);
        c.problems.insert(c.problems.end(), bv.problems.begin(), bv.problems.end());
        if (!compiler.empty()) {
            for (auto& v : bv.variants) v = variant::validate_compile(v, compiler);
        }
        auto qs = pipeline::generate_base_questions(u, bv.variants, bv.skeletons, universe, catalog, policy,
                                                    &c.problems);
        c.questions.insert(c.questions.end(), qs.begin(), qs.end());
        c.variants.insert(c.variants.end(), bv.variants.begin(), bv.variants.end());
        c.skeletons.insert(c.skeletons.end(), bv.skeletons.begin(), bv.skeletons.end());
    }
    return c;
}

double chi_square_uniform_p(const std::vector<std::size_t>& counts) {
    double total = 0;
    for (auto n : counts) total += static_cast<double>(n);
    double expected = total / static_cast<double>(counts.size());
    double x = 0;
    for (auto n : counts) x += (static_cast<double>(n) - expected) * (static_cast<double>(n) - expected) / expected;
    switch (counts.size() - 1) {
    case 1: return std::erfc(std::sqrt(x / 2));
    case 2: return std::exp(-x / 2);
    case 3: return std::erfc(std::sqrt(x / 2)) + std::sqrt(2 * x / M_PI) * std::exp(-x / 2);
    default: throw std::invalid_argument("chi_square_uniform_p: 2 to 4 cells");
    }
}

}  // namespace vrtest

namespace vrtest {

namespace {

using question::Family;

harness::EvalRecord paired(const question::Question& q, bool correct, const std::string& pair, std::uint32_t slot) {
    auto r = record_for(q, correct);
    r.pair_id = pair;
    r.pair_slot = slot;
    return r;
}

}  // namespace

std::vector<MetricsFixture> metrics_fixtures() {
    std::vector<MetricsFixture> out;
    {
        // Four goal-driven items against the safe half of their bases.
        MetricsFixture f{"goal-driven", {}, {}, {}, {}};
        const bool item[] = {true, true, false, true};
        const bool safe[] = {true, false, true, true};
        for (int i = 0; i < 4; ++i) {
            auto base = "g" + std::to_string(i) + ".c";
            f.questions.push_back(base_question("bs" + std::to_string(i), base, true));
            f.questions.push_back(family_question("gdv" + std::to_string(i), Family::GDV, base, 2));
            f.records.push_back(record_for(f.questions[f.questions.size() - 2], safe[i]));
            f.records.push_back(record_for(f.questions.back(), item[i]));
        }
        f.cons[Family::GDV] = {2, 4};
        out.push_back(std::move(f));
    }
    {
        // Structure and predictive items: DFL needs both base halves, PRD the
        // unsafe half only.
        MetricsFixture f{"structure-predictive", {}, {}, {}, {}};
        const bool safe[] = {true, true, false};
        const bool unsafe[] = {true, false, true};
        for (int i = 0; i < 3; ++i) {
            auto base = "s" + std::to_string(i) + ".c";
            auto n = std::to_string(i);
            f.questions.push_back(base_question("bs" + n, base, true));
            f.questions.push_back(base_question("bu" + n, base, false));
            f.questions.push_back(family_question("dfl" + n, Family::DFL, base, 1));
            f.questions.push_back(family_question("prd" + n, Family::PRD, base, 1));
            auto at = f.questions.size() - 4;
            f.records.push_back(record_for(f.questions[at], safe[i]));
            f.records.push_back(record_for(f.questions[at + 1], unsafe[i]));
            f.records.push_back(record_for(f.questions[at + 2], true));
            f.records.push_back(record_for(f.questions[at + 3], true));
        }
        f.questions.push_back(family_question("dfl-extra", Family::DFL, "s0.c", 3));
        f.records.push_back(record_for(f.questions.back(), false));
        f.cons[Family::DFL] = {1, 4};
        f.cons[Family::PRD] = {2, 3};
        out.push_back(std::move(f));
    }
    {
        // Pairwise: base pairs (1,1,0) and counterfactual pairs (1,0,1) per
        // base, plus single records for the consistency of CTF.
        MetricsFixture f{"pairwise", {}, {}, {}, {}};
        const bool base_pair[] = {true, true, false};
        const bool ctf_pair[] = {true, false, true};
        for (int i = 0; i < 3; ++i) {
            auto base = "p" + std::to_string(i) + ".c";
            auto n = std::to_string(i);
            f.questions.push_back(base_question("bs" + n, base, true));
            f.questions.push_back(base_question("bu" + n, base, false));
            f.questions.push_back(family_question("ctf-s" + n, Family::CTF, base, 1));
            f.questions.push_back(family_question("ctf-u" + n, Family::CTF, base, 1));
            auto at = f.questions.size() - 4;
            const auto& bs = f.questions[at];
            const auto& bu = f.questions[at + 1];
            const auto& cs = f.questions[at + 2];
            const auto& cu = f.questions[at + 3];
            // (1,1) pairs are right on both members; the others miss one.
            f.records.push_back(paired(bs, true, "base" + n, 1));
            f.records.push_back(paired(bu, base_pair[i], "base" + n, 2));
            f.records.push_back(paired(cs, ctf_pair[i], "ctf" + n, 1));
            f.records.push_back(paired(cu, true, "ctf" + n, 2));
            f.records.push_back(record_for(bs, true));
            f.records.push_back(record_for(bu, i != 1));
            f.records.push_back(record_for(cs, true));
        }
        f.cons[Family::CTF] = {2, 3};
        metrics::PairwiseScores p;
        p.base_pair = {2, 3};
        p.ctf_pair = {2, 3};
        p.cons_ctf = {1, 3};
        f.pairwise = p;
        out.push_back(std::move(f));
    }
    return out;
}

MetricsFixture random_records(std::mt19937_64& rng) {
    MetricsFixture f{"random", {}, {}, {}, {}};
    auto coin = [&] { return (rng() & 1) == 1; };
    auto bases = 1 + rng() % 6;
    const char* models[] = {"m1", "m2"};
    for (std::size_t b = 0; b < bases; ++b) {
        auto base = "r" + std::to_string(b) + ".c";
        auto n = std::to_string(b);
        f.questions.push_back(base_question("bs" + n, base, true));
        f.questions.push_back(base_question("bu" + n, base, false));
        auto items = rng() % 8;
        for (std::size_t k = 0; k < items; ++k) {
            auto fam = question::kAllFamilies[rng() % 5];
            f.questions.push_back(family_question("q" + n + "_" + std::to_string(k), fam, base,
                                                  static_cast<int>(1 + rng() % 4)));
        }
    }
    for (const auto* m : models) {
        for (const auto& q : f.questions) {
            auto r = record_for(q, coin(), m);
            if (!r.correct && rng() % 4 == 0) r.extracted = q.unknown_label();
            if (!r.correct && rng() % 6 == 0) r.extracted = std::string(harness::kParseFail);
            f.records.push_back(std::move(r));
        }
    }
    std::shuffle(f.records.begin(), f.records.end(), rng);
    return f;
}

}  // namespace vrtest
