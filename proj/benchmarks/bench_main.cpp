#include <benchmark/benchmark.h>

#include "vrbench/harness.hpp"
#include "vrbench/metrics.hpp"
#include "vrbench/question.hpp"

using namespace vrbench;

namespace {

const std::string& fixture() {
    static const std::string text =
        read_file(VRBENCH_FIXTURE_DIR "/CWE190_Integer_Overflow__int_fgets_add_01.c");
    return text;
}

const flow::SourceUnit& unit() {
    static const auto u = flow::parse_source(fixture(), "CWE190_Integer_Overflow__int_fgets_add_01.c");
    return u;
}

void BM_ParseSource(benchmark::State& state) {
    for (auto _ : state) {
        auto u = flow::parse_source(fixture(), "CWE190_Integer_Overflow__int_fgets_add_01.c");
        benchmark::DoNotOptimize(u.elements.size());
    }
}
BENCHMARK(BM_ParseSource);

void BM_BuildGraphs(benchmark::State& state) {
    for (auto _ : state) {
        auto dfg = flow::build_dfg(unit());
        auto cfg = flow::build_cfg(unit());
        benchmark::DoNotOptimize(dfg.edges().size() + cfg.edges().size());
    }
}
BENCHMARK(BM_BuildGraphs);

void BM_ClassifyAllPairs(benchmark::State& state) {
    auto dfg = flow::build_dfg(unit());
    auto cfg = flow::build_cfg(unit());
    auto ids = unit().elements_in(unit().unsafe_fn);
    for (auto _ : state) {
        flow::ImpactAnalyzer analyzer(dfg, cfg);
        std::size_t n = 0;
        for (auto a : ids) {
            for (auto b : ids) n += static_cast<std::size_t>(analyzer.classify(a, b).category);
        }
        benchmark::DoNotOptimize(n);
    }
}
BENCHMARK(BM_ClassifyAllPairs);

void BM_VariantPipeline(benchmark::State& state) {
    auto catalog = variant::default_catalog();
    auto deny = variant::default_deny_list();
    auto pool = variant::default_neutral_pool();
    for (auto _ : state) {
        variant::VariantSpec spec{variant::Structure::OuterInner, variant::Behavior::Unsafe, 0, 7};
        auto v = variant::wrap_structure(unit(), spec);
        v = variant::inject_control_flow(v, 1, catalog, 3);
        auto m = variant::mask_variant(v, deny, pool, 5);
        auto f = variant::fill_mask(m, variant::Behavior::Unsafe, catalog, 11);
        benchmark::DoNotOptimize(f.source.size());
    }
}
BENCHMARK(BM_VariantPipeline);

void BM_StructureQuestions(benchmark::State& state) {
    auto dfg = flow::build_dfg(unit());
    auto cfg = flow::build_cfg(unit());
    question::Policy policy;
    for (auto _ : state) {
        auto qs = question::gen_dataflow_questions(unit(), dfg, cfg, policy);
        benchmark::DoNotOptimize(qs.size());
    }
}
BENCHMARK(BM_StructureQuestions);

void BM_ExtractChoice(benchmark::State& state) {
    std::vector<std::string> labels{"A", "B", "C", "D"};
    const char* answers[] = {"B", "Answer: C because the guard holds", "I don't know", "maybe",
                             "(a) the variable flows directly"};
    for (auto _ : state) {
        for (const char* a : answers) benchmark::DoNotOptimize(harness::extract_choice(a, labels, "D"));
    }
}
BENCHMARK(BM_ExtractChoice);

void BM_ConsistencyScores(benchmark::State& state) {
    std::vector<question::Question> qs;
    std::vector<harness::EvalRecord> records;
    auto n = static_cast<std::size_t>(state.range(0));
    for (std::size_t i = 0; i < n; ++i) {
        auto base = "f" + std::to_string(i % 64) + ".c";
        question::Question q;
        q.id = "q" + std::to_string(i);
        q.family = i % 64 == i ? question::Family::Base : question::Family::CTF;
        q.choices = {{"A", "", "Safe", {}}, {"B", "", "Unsafe", {}}};
        q.answer_labels = {i % 2 ? "A" : "B"};
        q.provenance.base_path = base;
        qs.push_back(q);
        if (i < 64) {
            auto extra = q;
            extra.id += "u";
            extra.answer_labels = {i % 2 ? "B" : "A"};
            qs.push_back(extra);
        }
    }
    for (const auto& q : qs) {
        harness::EvalRecord r;
        r.question_id = q.id;
        r.model = "m";
        r.extracted = "A";
        r.correct = q.answer_labels.front() == "A";
        records.push_back(r);
    }
    auto index = metrics::index_questions(qs);
    for (auto _ : state) {
        auto cons = metrics::consistency_scores(records, records, index);
        benchmark::DoNotOptimize(cons.size());
    }
}
BENCHMARK(BM_ConsistencyScores)->Arg(1 << 10)->Arg(1 << 14);

}  // namespace

BENCHMARK_MAIN();
