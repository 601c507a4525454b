// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <random>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "support/fixtures.hpp"
#include "support/stub_server.hpp"
#include "vrbench/c_syntax.hpp"
#include "vrbench/metrics.hpp"
#include "vrbench/pipeline.hpp"

namespace fs = std::filesystem;
using namespace vrbench;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
    std::vector<std::string> failures;

    void check(bool ok, const std::string& what) {
        if (ok) return;
        pass = false;
        if (failures.size() < 5) failures.push_back(what);
    }
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double x, int digits = 2) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}

const vrtest::Corpus& local_corpus() {
    static const auto c = [] {
        auto a = vrtest::build_corpus(vrtest::juliet_dir(), 2024);
        auto b = vrtest::build_corpus(vrtest::sanitizer_dir(), 2024);
        for (auto& u : b.units) a.units.push_back(std::move(u));
        a.variants.insert(a.variants.end(), b.variants.begin(), b.variants.end());
        a.skeletons.insert(a.skeletons.end(), b.skeletons.begin(), b.skeletons.end());
        a.questions.insert(a.questions.end(), b.questions.begin(), b.questions.end());
        a.problems.insert(a.problems.end(), b.problems.begin(), b.problems.end());
        return a;
    }();
    return c;
}

// ---------------------------------------------------------------------------

Outcome graph_oracle() {
    Outcome o;
    auto t0 = Clock::now();
    std::mt19937_64 rng(7);
    std::size_t programs = 0, drawn = 0, pairs = 0, hops = 0;
    flow::PairOptions opts;
    opts.require_pair = false;
    while (programs < 200 && drawn < 20000) {
        ++drawn;
        auto src = vrtest::random_toy_program(rng);
        auto unit = flow::parse_source(src, "toy.c", opts);
        if (unit.elements_in("toy").size() > 30) continue;
        ++programs;
        auto r = vrtest::check_graph_oracle(unit, "toy");
        pairs += r.pairs;
        hops += r.hop_checks;
        for (const auto& m : r.mismatches) o.check(false, m);
    }
    auto secs = seconds_since(t0);
    o.check(programs >= 200, "only " + std::to_string(programs) + " programs");
    o.check(secs < 60, "took " + fmt(secs) + "s");
    o.detail = std::to_string(programs) + " programs, " + std::to_string(pairs) + " impact pairs, " +
               std::to_string(hops) + " hop checks, " + fmt(secs) + "s";
    return o;
}

Outcome behavior_oracle() {
    Outcome o;
    if (!vrtest::sanitizers_available()) {
        o.pass = false;
        o.detail = "no sanitizer-enabled C compiler";
        return o;
    }
    auto t0 = Clock::now();
    pipeline::PipelineConfig cfg;
    cfg.seed = 11;
    auto catalog = variant::default_catalog();
    struct Job {
        variant::Variant v;
        std::string token;
    };
    std::vector<Job> jobs;
    std::size_t pairs = 0;
    for (const auto& p : vrtest::sanitizer_pairs()) {
        auto unit = vrtest::load_unit(vrtest::sanitizer_dir() + "/" + p.file);
        auto bv = pipeline::generate_base_variants(unit, cfg, catalog);
        for (const auto& prob : bv.problems) o.check(false, prob);
        std::set<std::string> combos;
        for (const auto& v : bv.variants) {
            combos.insert(std::string(variant::structure_name(v.spec.structure)) + "/" +
                          std::string(variant::behavior_name(v.spec.behavior)) + "/" +
                          std::to_string(v.spec.injection_count));
            jobs.push_back({v, p.functional_token});
        }
        o.check(combos.size() == 18, p.file + ": " + std::to_string(combos.size()) + " combinations");
        ++pairs;
    }
    auto dir = vrtest::temp_dir("behavior");
    std::vector<vrtest::RunResult> results(jobs.size());
    std::atomic<std::size_t> next{0};
    auto workers = std::max(2u, std::thread::hardware_concurrency());
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (auto i = next++; i < jobs.size(); i = next++) results[i] = vrtest::run_with_sanitizers(jobs[i].v, dir);
        });
    }
    for (auto& t : pool) t.join();
    std::map<variant::Behavior, std::size_t> ok;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        const auto& v = jobs[i].v;
        const auto& r = results[i];
        auto tag = v.base_path + " " + std::string(variant::structure_name(v.spec.structure)) + "/" +
                   std::string(variant::behavior_name(v.spec.behavior)) + "/k=" +
                   std::to_string(v.spec.injection_count);
        if (!r.compiled) {
            o.check(false, tag + " does not compile: " + r.err.substr(0, 200));
            continue;
        }
        bool good = false;
        switch (v.spec.behavior) {
        case variant::Behavior::Unsafe: good = r.flagged(); break;
        case variant::Behavior::Safe: good = !r.flagged() && r.out.find(jobs[i].token) != std::string::npos; break;
        case variant::Behavior::Impaired:
            good = !r.flagged() && r.out.find(std::string(variant::kImpairedMarker)) != std::string::npos &&
                   r.out.find(jobs[i].token) == std::string::npos;
            break;
        }
        o.check(good, tag + " exit " + std::to_string(r.exit_code) + " out '" + r.out.substr(0, 80) + "'");
        if (good) ++ok[v.spec.behavior];
    }
    fs::remove_all(dir);
    auto secs = seconds_since(t0);
    o.check(pairs >= 5, "fewer than 5 pairs");
    o.check(secs < 120, "took " + fmt(secs) + "s");
    o.detail = std::to_string(pairs) + " pairs, " + std::to_string(jobs.size()) + " variants (unsafe flagged " +
               std::to_string(ok[variant::Behavior::Unsafe]) + ", safe clean " +
               std::to_string(ok[variant::Behavior::Safe]) + ", impaired clean " +
               std::to_string(ok[variant::Behavior::Impaired]) + "), " + fmt(secs) + "s";
    return o;
}

Outcome variant_matrix() {
    Outcome o;
    pipeline::PipelineConfig cfg;
    cfg.seed = 3;
    auto catalog = variant::default_catalog();
    auto one = vrtest::load_unit(vrtest::juliet_dir() + "/CWE369_Divide_by_Zero__int_zero_divide_01.c");
    auto bv = pipeline::generate_base_variants(one, cfg, catalog);
    o.check(bv.variants.size() == 18, "one base gave " + std::to_string(bv.variants.size()) + " variants");

    std::size_t total = 0, compiled = 0, safe = 0, unsafe = 0;
    auto cmd = vrtest::syntax_check_command();
    for (const auto& dir : {vrtest::juliet_dir(), vrtest::sanitizer_dir()}) {
        for (const auto& path : vrtest::c_files(dir)) {
            auto unit = vrtest::load_unit(path);
            for (const auto& v : pipeline::generate_base_variants(unit, cfg, catalog).variants) {
                ++total;
                if (variant::validate_compile(v, cmd).compile_status != variant::CompileStatus::Ok) continue;
                ++compiled;
                if (v.spec.behavior == variant::Behavior::Safe) ++safe;
                if (v.spec.behavior == variant::Behavior::Unsafe) ++unsafe;
            }
        }
    }
    double ratio = total ? static_cast<double>(compiled) / static_cast<double>(total) : 0.0;
    o.check(ratio >= 0.9, "compilable ratio " + fmt(ratio, 3));
    o.detail = "one base: " + std::to_string(bv.variants.size()) + " variants; local corpus: " +
               std::to_string(unsafe) + " unsafe + " + std::to_string(safe) + " safe compilable, " +
               std::to_string(compiled) + "/" + std::to_string(total) + " = " + fmt(100 * ratio, 1) +
               "% (reference corpus not available offline)";
    return o;
}

Outcome recomputability() {
    Outcome o;
    const auto& c = local_corpus();
    auto ctx = c.context();
    std::size_t mismatches = 0;
    for (const auto& q : c.questions) {
        auto want = q.answer_labels;
        std::sort(want.begin(), want.end());
        try {
            if (question::recompute_answer(q, ctx) != want) {
                ++mismatches;
                o.check(false, q.id);
            }
        } catch (const Error& ex) {
            ++mismatches;
            o.check(false, q.id + ": " + ex.what());
        }
    }
    o.check(!c.questions.empty(), "no questions");
    o.detail = std::to_string(c.questions.size()) + " questions, " + std::to_string(mismatches) + " mismatches";
    return o;
}

// Prompt text with any "NN | " line gutter removed.
std::string without_gutter(const std::string& text) {
    static const std::regex gutter(R"(^ *\d+ \| )", std::regex::multiline);
    return std::regex_replace(text, gutter, "");
}

Outcome masking() {
    Outcome o;
    const auto& c = local_corpus();
    auto deny = variant::default_deny_list();
    std::size_t scanned = 0, hits = 0, shapes = 0;
    for (const auto& q : c.questions) {
        auto prompt = harness::build_prompt(q, harness::Mode::Zero);
        o.check(without_gutter(prompt.user).find(q.code) != std::string::npos,
                std::string(question::family_name(q.family)) + " " + q.id + ": code block missing from prompt");
        for (const auto& t : question::code_derived_text(q)) {
            ++scanned;
            if (variant::contains_deny_token(t, deny)) {
                ++hits;
                o.check(false, q.id + " leaks a label");
            }
        }
    }
    for (const auto* vs : {&c.variants, &c.skeletons}) {
        for (const auto& v : *vs) {
            ++scanned;
            if (variant::contains_deny_token(csyntax::strip_comments(v.source), deny) &&
                variant::contains_deny_token(variant::function_code(v.source, v.function_name), deny)) {
                ++hits;
                o.check(false, v.id() + " leaks a label");
            }
        }
    }
    // masking keeps the tree shape
    auto catalog = variant::default_catalog();
    for (const auto& u : c.units) {
        auto base = csyntax::parse(u.source);
        auto masked_src = variant::mask_labels(u.source, deny, variant::default_neutral_pool(), 5);
        auto masked = csyntax::parse(masked_src);
        o.check(csyntax::shape_signature(base, base.root()) == csyntax::shape_signature(masked, masked.root()),
                u.path + " base shape changed");
        ++shapes;
        for (auto s : {variant::Structure::Outer, variant::Structure::Inner, variant::Structure::OuterInner}) {
            auto v = variant::fill_mask(variant::wrap_structure(u, {s, variant::Behavior::Safe, 0, 5}),
                                        variant::Behavior::Safe, catalog, 5);
            auto m = variant::mask_variant(v, deny, variant::default_neutral_pool(), 5);
            auto a = csyntax::parse(v.source), b = csyntax::parse(m.source);
            o.check(csyntax::shape_signature(a, a.root()) == csyntax::shape_signature(b, b.root()),
                    u.path + " variant shape changed");
            o.check(!variant::contains_deny_token(variant::function_code(m.source, m.function_name), deny),
                    u.path + " masked variant leaks");
            ++shapes;
        }
    }
    o.detail = std::to_string(scanned) + " code texts scanned, " + std::to_string(hits) + " deny hits, " +
               std::to_string(shapes) + " shape comparisons";
    return o;
}

Outcome shuffle_fairness() {
    Outcome o;
    const auto& c = local_corpus();
    auto catalog = variant::default_catalog();
    std::vector<std::string> universe = question::known_cwes();
    std::vector<std::size_t> gdv(3), prd(3), all(3);
    std::size_t n = 0;
    for (std::uint64_t s = 0; n < 3000; ++s) {
        question::Policy p;
        p.seed = s;
        const auto& sk = c.skeletons[s % c.skeletons.size()];
        auto g = question::gen_goaldriven_question(sk, question::goal_fills(sk, catalog, s), catalog, p);
        const auto& v = c.variants[s % c.variants.size()];
        auto q = question::gen_predictive_question(v, universe, p);
        for (auto* x : {&g, &q}) {
            auto pos = static_cast<std::size_t>(x->answer_labels.front()[0] - 'A');
            if (pos >= 3) {
                o.check(false, x->id + " answer on the unknown slot");
                continue;
            }
            ++(x->family == question::Family::GDV ? gdv : prd)[pos];
            ++all[pos];
            ++n;
        }
    }
    auto pg = vrtest::chi_square_uniform_p(gdv), pp = vrtest::chi_square_uniform_p(prd),
         pa = vrtest::chi_square_uniform_p(all);
    o.check(pg > 0.01, "GDV p=" + fmt(pg, 4));
    o.check(pp > 0.01, "PRD p=" + fmt(pp, 4));
    o.check(pa > 0.01, "combined p=" + fmt(pa, 4));
    o.detail = std::to_string(n) + " generations; p(GDV)=" + fmt(pg, 3) + " p(PRD)=" + fmt(pp, 3) +
               " p(all)=" + fmt(pa, 3);
    return o;
}

Outcome metrics_definitions() {
    Outcome o;
    std::size_t fixtures = 0;
    for (const auto& f : vrtest::metrics_fixtures()) {
        auto idx = metrics::index_questions(f.questions);
        std::vector<harness::EvalRecord> single, base;
        for (const auto& r : f.records) {
            if (!r.pair_id.empty()) continue;
            single.push_back(r);
            if (idx.at(r.question_id)->family == question::Family::Base) base.push_back(r);
        }
        o.check(metrics::consistency_scores(base, single, idx) == f.cons, f.name + " consistency");
        if (f.pairwise) {
            auto p = metrics::pairwise_scores(f.records, idx);
            o.check(p.base_pair == f.pairwise->base_pair && p.ctf_pair == f.pairwise->ctf_pair &&
                        p.cons_ctf == f.pairwise->cons_ctf,
                    f.name + " pairwise");
        }
        ++fixtures;
    }
    std::mt19937_64 rng(1234);
    std::size_t checks = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        auto f = vrtest::random_records(rng);
        auto idx = metrics::index_questions(f.questions);
        for (const auto& rep : metrics::build_reports(f.records, idx)) {
            for (const auto& [fam, cell] : rep.cons) {
                const auto& acc = rep.accuracy.at(std::string(question::family_name(fam))).at("all");
                o.check(cell.rate() <= acc.rate(), "trial " + std::to_string(trial) + " " +
                                                       std::string(question::family_name(fam)));
                ++checks;
            }
        }
    }
    o.detail = std::to_string(fixtures) + " fixtures exact, 1000 fuzz trials, " + std::to_string(checks) +
               " Cons <= accuracy checks";
    return o;
}

question::Question synthetic(int i) {
    auto q = vrtest::family_question("item" + std::to_string(i), question::kAllFamilies[i % 5],
                                     "base" + std::to_string(i % 10) + ".c");
    q.prompt = "Synthetic item " + std::to_string(i) + " #";
    q.answer_labels = {std::string(1, static_cast<char>('A' + i % 3))};
    return q;
}

Outcome harness_isolation() {
    Outcome o;
    std::vector<question::Question> qs;
    for (int i = 0; i < 100; ++i) qs.push_back(synthetic(i));
    const std::set<int> faulted{7, 23, 58, 91};
    auto count_items = [&](const std::string& body) {
        auto msg = vrtest::user_message(body);
        std::vector<int> found;
        for (int i = 0; i < 100; ++i) {
            if (msg.find(qs[i].prompt) != std::string::npos) found.push_back(i);
        }
        return found;
    };
    vrtest::StubServer stub([&](const std::string& body) {
        auto items = count_items(body);
        if (items.size() == 1 && faulted.count(items[0])) return vrtest::StubReply{200, "A", 1.0};
        std::string reply;
        for (std::size_t k = 0; k < items.size(); ++k) {
            auto label = std::string(1, "ABCD"[(items[k] * 7) % 4]);
            reply += items.size() == 1 ? "Answer: " + label : "Answer " + std::to_string(k + 1) + ": " + label + "\n";
        }
        return vrtest::StubReply{200, reply, 0};
    });
    harness::ModelConfig cfg;
    cfg.name = "stub";
    cfg.endpoint_url = stub.url();
    cfg.request_timeout = 0.25;
    cfg.retry.max_retries = 0;
    cfg.max_parallel = 4;
    harness::HttpModelClient client;
    harness::RunOptions opts;
    opts.sleep = [](std::chrono::duration<double>) {};

    auto a = harness::run_suite(qs, cfg, client, opts);
    auto b = harness::run_suite(qs, cfg, client, opts);
    std::size_t identical = 0;
    for (std::size_t i = 0; i < qs.size(); ++i) {
        auto ja = harness::record_to_json(a[i], false), jb = harness::record_to_json(b[i], false);
        if (ja == jb) ++identical;
        else o.check(false, a[i].question_id + " differs: " + a[i].extracted + " then " + b[i].extracted);
        bool parse_fail = a[i].extracted == harness::kParseFail;
        o.check(parse_fail == (faulted.count(static_cast<int>(i)) > 0), "record " + std::to_string(i));
    }
    o.check(identical == qs.size(), std::to_string(identical) + " identical records");
    auto singles = stub.request_count();
    for (const auto& body : stub.requests()) o.check(count_items(body).size() == 1, "request with several items");
    o.check(singles == 2 * qs.size(), std::to_string(singles) + " requests for two runs");

    // pairwise: one request per pair, two items in it
    std::vector<harness::QuestionPair> pairs;
    for (int i = 0; i + 1 < 20; i += 2) pairs.emplace_back(qs[i], qs[i + 1]);
    for (auto& [x, y] : pairs) y.provenance.base_path = x.provenance.base_path;
    auto before = stub.request_count();
    auto pr = harness::run_pairwise(pairs, cfg, client, opts);
    auto bodies = stub.requests();
    o.check(bodies.size() - before == pairs.size(), "pairwise request count");
    for (std::size_t k = before; k < bodies.size(); ++k) o.check(count_items(bodies[k]).size() == 2, "pair body");
    o.detail = "100 questions x 2 runs, " + std::to_string(identical) + " identical, " + std::to_string(faulted.size()) +
               " faulted -> ParseFail, " + std::to_string(pairs.size()) + " pair requests";
    return o;
}

Outcome fpr_degenerate() {
    Outcome o;
    // The stub picks whichever option says the code triggers the weakness.
    vrtest::StubServer stub([](const std::string& body) {
        auto msg = vrtest::user_message(body);
        static const std::regex option(R"(([A-D])\. It triggers the vulnerability\.)");
        std::smatch m;
        return vrtest::StubReply{200, std::regex_search(msg, m, option) ? "Answer: " + m[1].str() : "vulnerable", 0};
    });
    auto work = vrtest::temp_dir("fpr");
    pipeline::PipelineConfig cfg;
    cfg.input_dir = vrtest::juliet_dir();
    cfg.output_dir = work;
    cfg.seed = 5;
    harness::ModelConfig m;
    m.name = "always-vulnerable";
    m.endpoint_url = stub.url();
    m.request_timeout = 10;
    cfg.models = {m};
    cfg.budgets = {{question::Family::DFL, 6}, {question::Family::CFL, 6}, {question::Family::CTF, 6},
                   {question::Family::GDV, 6}, {question::Family::PRD, 6}};
    pipeline::Log quiet = [](const std::string&) {};
    auto res = pipeline::cmd_all(cfg, quiet);
    o.check(res.status == pipeline::Status::Ok, "pipeline status " + std::to_string(static_cast<int>(res.status)));
    auto path = work + "/metrics/always-vulnerable_zero_t0.json";
    if (!fs::exists(path)) {
        o.pass = false;
        o.detail = "no metrics file " + path;
        return o;
    }
    auto j = nlohmann::json::parse(read_file(path));
    double fpr = j["fpr_safe"].get<double>();
    double safe = j["base"]["safe"]["value"].get<double>();
    o.check(fpr == 1.0, "fpr_safe " + fmt(fpr));
    o.check(safe == 0.0, "base safe accuracy " + fmt(safe));
    auto table = read_file(work + "/metrics/table2.csv");
    o.check(table.find(",100.00") != std::string::npos, "table2 lacks 100.00");
    o.detail = "fpr_safe=" + fmt(fpr) + " base safe accuracy=" + fmt(safe) + " over " +
               std::to_string(j["base"]["safe"]["total"].get<int>()) + " safe items";
    fs::remove_all(work);
    return o;
}

}  // namespace

int main() {
    const std::pair<const char*, std::function<Outcome()>> criteria[] = {
        {"graph oracle equivalence", graph_oracle},
        {"behavior execution oracle", behavior_oracle},
        {"variant matrix shape", variant_matrix},
        {"ground-truth recomputability", recomputability},
        {"masking soundness", masking},
        {"shuffle fairness", shuffle_fairness},
        {"metric definitions", metrics_definitions},
        {"harness isolation and determinism", harness_isolation},
        {"FPR_safe of an always-vulnerable model", fpr_degenerate},
    };
    int failed = 0;
    for (const auto& [name, run] : criteria) {
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& ex) {
            o.pass = false;
            o.detail = std::string("exception: ") + ex.what();
        }
        std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
        for (const auto& f : o.failures) std::printf("    %s\n", f.c_str());
        std::fflush(stdout);
        if (!o.pass) ++failed;
    }
    return failed ? 1 : 0;
}
