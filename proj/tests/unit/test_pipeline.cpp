#include <gtest/gtest.h>

#include <filesystem>
#include <regex>
#include <set>

#include <json.hpp>

#include "support/fixtures.hpp"
#include "support/stub_server.hpp"
#include "vrbench/pipeline.hpp"

using namespace vrbench;
using namespace vrbench::pipeline;
namespace fs = std::filesystem;

namespace {

const Log quiet = [](const std::string&) {};

PipelineConfig juliet_config(const std::string& tag, std::uint64_t seed = 9) {
    PipelineConfig c;
    c.input_dir = vrtest::juliet_dir();
    c.output_dir = vrtest::temp_dir(tag);
    c.seed = seed;
    return c;
}

std::vector<std::string> lines_of(const PipelineConfig& c, const char* file) {
    return read_lines((fs::path(c.output_dir) / file).string());
}

std::unique_ptr<vrtest::StubServer> answering_a() {
    return std::make_unique<vrtest::StubServer>([](const std::string&) { return vrtest::StubReply{200, "A", 0}; });
}

harness::ModelConfig stub_model(const vrtest::StubServer& s, const std::string& name = "stub") {
    harness::ModelConfig m;
    m.name = name;
    m.endpoint_url = s.url();
    m.request_timeout = 10;
    return m;
}

void small_budgets(PipelineConfig& c, std::size_t n) {
    for (auto f : question::kAllFamilies) {
        if (f != question::Family::Base) c.budgets[f] = n;
    }
}

}  // namespace

TEST(Ingest, EmptyDirectoryGivesEmptyManifest) {
    PipelineConfig c;
    c.input_dir = vrtest::temp_dir("empty_in");
    c.output_dir = vrtest::temp_dir("empty_out");
    auto res = cmd_ingest(c, quiet);
    EXPECT_EQ(res.status, Status::Ok);
    EXPECT_TRUE(lines_of(c, kManifestFile).empty());
}

TEST(Ingest, JulietPairsResolved) {
    auto c = juliet_config("ingest");
    EXPECT_EQ(cmd_ingest(c, quiet).status, Status::Ok);
    auto lines = lines_of(c, kManifestFile);
    ASSERT_EQ(lines.size(), vrtest::c_files(vrtest::juliet_dir()).size());
    std::set<std::string> cwes;
    for (const auto& l : lines) {
        auto e = manifest_from_jsonl(l);
        EXPECT_FALSE(e.safe_fn.empty());
        EXPECT_FALSE(e.unsafe_fn.empty());
        cwes.insert(e.cwe_id);
    }
    EXPECT_EQ(cwes, (std::set<std::string>{"CWE-121", "CWE-190", "CWE-369"}));
}

TEST(Ingest, UnpairedFilesSkipped) {
    PipelineConfig c;
    c.input_dir = vrtest::temp_dir("unpaired");
    c.output_dir = vrtest::temp_dir("unpaired_out");
    write_file(c.input_dir + "/plain.c", "int main(void) { return 0; }\n");
    EXPECT_EQ(cmd_ingest(c, quiet).status, Status::Ok);
    EXPECT_TRUE(lines_of(c, kManifestFile).empty());
}

TEST(Ingest, LinkedDuplicateRejected) {
    PipelineConfig c;
    c.input_dir = vrtest::temp_dir("dup_in");
    c.output_dir = vrtest::temp_dir("dup_out");
    auto src = vrtest::juliet_dir() + "/CWE369_Divide_by_Zero__int_zero_divide_01.c";
    fs::copy_file(src, c.input_dir + "/CWE369_a_01.c");
    fs::create_symlink(c.input_dir + "/CWE369_a_01.c", c.input_dir + "/CWE369_b_01.c");
    EXPECT_THROW(cmd_ingest(c, quiet), ConfigError);
}

TEST(Ingest, DuplicateManifestEntryRejected) {
    auto c = juliet_config("dup_manifest");
    cmd_ingest(c, quiet);
    auto lines = lines_of(c, kManifestFile);
    lines.push_back(lines.front());
    write_lines((fs::path(c.output_dir) / kManifestFile).string(), lines);
    EXPECT_THROW(cmd_generate(c, quiet), ConfigError);
}

TEST(Ingest, DuplicateMetadataPathRejected) {
    auto c = juliet_config("meta_dup");
    c.metadata_path = c.output_dir + "/meta.json";
    write_file(c.metadata_path, R"({"x.c": {"safe": "g", "unsafe": "b"}, "./x.c": {"safe": "g", "unsafe": "b"}})");
    EXPECT_THROW(cmd_ingest(c, quiet), ConfigError);
}

TEST(Ingest, MissingMetadataTargetIsPartial) {
    auto c = juliet_config("meta");
    c.metadata_path = c.output_dir + "/meta.json";
    write_file(c.metadata_path, R"({"nowhere.c": {"safe": "g", "unsafe": "b", "cwe": "CWE-121"}})");
    EXPECT_EQ(cmd_ingest(c, quiet).status, Status::Partial);
}

TEST(Stages, MissingPredecessorIsConfigError) {
    auto c = juliet_config("order");
    EXPECT_THROW(cmd_generate(c, quiet), ConfigError);
    EXPECT_THROW(cmd_questions(c, quiet), ConfigError);
    EXPECT_THROW(cmd_score(c, quiet), ConfigError);
}

TEST(Generate, EighteenVariantsPerBaseUnchecked) {
    auto c = juliet_config("gen");
    cmd_ingest(c, quiet);
    EXPECT_EQ(cmd_generate(c, quiet).status, Status::Ok);
    auto lines = lines_of(c, kVariantsFile);
    EXPECT_EQ(lines.size(), 18u * vrtest::c_files(vrtest::juliet_dir()).size());
    std::map<std::string, std::size_t> per_base;
    for (const auto& l : lines) {
        auto v = variant::variant_from_jsonl(l);
        ++per_base[v.base_path];
        EXPECT_EQ(v.compile_status, variant::CompileStatus::Unchecked);
        EXPECT_FALSE(v.masked());
    }
    for (const auto& [base, n] : per_base) EXPECT_EQ(n, 18u) << base;
}

TEST(Generate, CompilerCheckMarksVariants) {
    auto c = juliet_config("gen_cc");
    c.compiler = "cc -fsyntax-only -w -x c {src}";
    c.include_dirs = {vrtest::support_dir()};
    cmd_ingest(c, quiet);
    cmd_generate(c, quiet);
    for (const auto& l : lines_of(c, kVariantsFile)) {
        EXPECT_EQ(variant::variant_from_jsonl(l).compile_status, variant::CompileStatus::Ok);
    }
}

TEST(Generate, MissingCompilerFallsBackToUnchecked) {
    auto c = juliet_config("gen_nocc");
    c.compiler = "no-such-compiler-here {src}";
    cmd_ingest(c, quiet);
    EXPECT_EQ(cmd_generate(c, quiet).status, Status::Ok);
    auto lines = lines_of(c, kVariantsFile);
    ASSERT_FALSE(lines.empty());
    for (const auto& l : lines) {
        EXPECT_EQ(variant::variant_from_jsonl(l).compile_status, variant::CompileStatus::Unchecked);
    }
}

TEST(Pipeline, SeededRerunsAreByteIdentical) {
    auto stub = answering_a();
    auto run = [&](const std::string& tag, std::uint64_t seed) {
        auto c = juliet_config(tag, seed);
        c.models = {stub_model(*stub)};
        c.jobs = 3;
        small_budgets(c, 8);
        EXPECT_EQ(cmd_all(c, quiet).status, Status::Ok);
        return c.output_dir;
    };
    auto a = run("rerun_a", 31), b = run("rerun_b", 31), other = run("rerun_c", 32);
    for (const char* f : {kVariantsFile, kSkeletonsFile, kQuestionsFile, "metrics/stub_zero_t0.json",
                          "metrics/table2.csv"}) {
        EXPECT_EQ(read_file(a + "/" + f), read_file(b + "/" + f)) << f;
    }
    // responses match apart from the measured latency
    auto responses = [](const std::string& dir) {
        std::vector<std::string> out;
        for (const auto& l : read_lines(dir + "/responses/stub_zero_t0.jsonl")) {
            auto j = nlohmann::json::parse(l);
            j.erase("latency");
            out.push_back(j.dump());
        }
        return out;
    };
    EXPECT_EQ(responses(a), responses(b));
    EXPECT_NE(read_file(a + "/" + kQuestionsFile), read_file(other + "/" + kQuestionsFile));
}

TEST(Questions, AllFamiliesCleanAndWithinBudget) {
    auto c = juliet_config("questions");
    small_budgets(c, 5);
    cmd_ingest(c, quiet);
    cmd_generate(c, quiet);
    EXPECT_EQ(cmd_questions(c, quiet).status, Status::Ok);
    std::map<question::Family, std::size_t> counts;
    std::set<std::string> ids;
    for (const auto& l : lines_of(c, kQuestionsFile)) {
        auto q = question::question_from_json(l);
        ++counts[q.family];
        EXPECT_TRUE(ids.insert(q.id).second) << q.id;
        for (const auto& t : question::code_derived_text(q)) {
            EXPECT_FALSE(variant::contains_deny_token(t, c.deny)) << q.id;
        }
    }
    for (auto f : question::kAllFamilies) {
        EXPECT_GT(counts[f], 0u) << question::family_name(f);
        if (f != question::Family::Base) EXPECT_LE(counts[f], 5u) << question::family_name(f);
    }
    EXPECT_EQ(counts[question::Family::Base], 2 * vrtest::c_files(vrtest::juliet_dir()).size());
}

TEST(Pipeline, StubEndToEnd) {
    auto stub = answering_a();
    auto c = juliet_config("e2e");
    c.models = {stub_model(*stub, "model/one"), stub_model(*stub, "two")};
    small_budgets(c, 4);
    auto res = cmd_all(c, quiet);
    EXPECT_EQ(res.status, Status::Ok);
    auto questions = lines_of(c, kQuestionsFile).size();
    EXPECT_EQ(stub.get()->request_count(), 2 * questions);

    auto mdir = c.output_dir + "/metrics/";
    ASSERT_TRUE(fs::exists(mdir + "model_one_zero_t0.json"));
    ASSERT_TRUE(fs::exists(mdir + "two_zero_t0.json"));
    auto report = nlohmann::json::parse(read_file(mdir + "two_zero_t0.json"));
    for (const char* key : {"accuracy", "base", "fpr_safe", "cons", "choice_distribution", "model", "mode", "temperature"}) {
        EXPECT_TRUE(report.contains(key)) << key;
    }
    auto matrix = nlohmann::json::parse(read_file(mdir + "matrix.json"));
    EXPECT_EQ(matrix["reports"].size(), 2u);

    auto table = read_lines(mdir + "table2.csv");
    ASSERT_EQ(table.size(), 3u);
    auto columns = [](const std::string& row) { return std::count(row.begin(), row.end(), ',') + 1; };
    for (const auto& row : table) EXPECT_EQ(columns(row), 14);
}

TEST(Pipeline, TemperatureSweepWritesOneFileEach) {
    auto stub = answering_a();
    auto c = juliet_config("sweep");
    c.models = {stub_model(*stub)};
    c.temperatures = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
    small_budgets(c, 2);
    EXPECT_EQ(cmd_all(c, quiet).status, Status::Ok);
    for (const char* t : {"0", "0.2", "0.4", "0.6", "0.8", "1"}) {
        EXPECT_TRUE(fs::exists(c.output_dir + "/metrics/stub_zero_t" + t + ".json")) << t;
    }
    std::set<double> seen;
    for (const auto& body : stub->requests()) seen.insert(nlohmann::json::parse(body)["temperature"].get<double>());
    EXPECT_EQ(seen.size(), 6u);
}

TEST(Pipeline, PairwiseSendsTwoCodesPerRequest) {
    vrtest::StubServer stub([](const std::string&) { return vrtest::StubReply{200, "Answer 1: A\nAnswer 2: C", 0}; });
    auto c = juliet_config("pairwise");
    c.models = {stub_model(stub)};
    c.pairwise = true;
    small_budgets(c, 3);
    EXPECT_EQ(cmd_all(c, quiet).status, Status::Ok);
    EXPECT_TRUE(fs::exists(c.output_dir + "/responses/stub_zero_t0_pairwise.jsonl"));
    auto report = nlohmann::json::parse(read_file(c.output_dir + "/metrics/stub_zero_t0.json"));
    EXPECT_TRUE(report.contains("pairwise"));
    for (const auto& body : stub.requests()) {
        auto msg = vrtest::user_message(body);
        EXPECT_NE(msg.find("Answer 1"), std::string::npos);
        EXPECT_NE(msg.find("Answer 2"), std::string::npos);
    }
}

TEST(Pipeline, FailingModelIsPartial) {
    vrtest::StubServer stub([](const std::string&) { return vrtest::StubReply{400, "bad request", 0}; });
    auto c = juliet_config("failing");
    c.models = {stub_model(stub)};
    small_budgets(c, 1);
    EXPECT_EQ(cmd_all(c, quiet).status, Status::Partial);
    auto report = nlohmann::json::parse(read_file(c.output_dir + "/metrics/stub_zero_t0.json"));
    EXPECT_DOUBLE_EQ(report["base"]["avg"].get<double>(), 0.0);
}

TEST(Evaluate, IclNeedsDemos) {
    auto stub = answering_a();
    auto c = juliet_config("icl");
    c.models = {stub_model(*stub)};
    c.mode = harness::Mode::ICL;
    small_budgets(c, 1);
    cmd_ingest(c, quiet);
    cmd_generate(c, quiet);
    cmd_questions(c, quiet);
    EXPECT_THROW(cmd_evaluate(c, quiet), ConfigError);
    c.demos_path = std::string(VRBENCH_DATA_DIR) + "/demos.json";
    EXPECT_EQ(cmd_evaluate(c, quiet).status, Status::Ok);
    EXPECT_EQ(stub->request_count(), lines_of(c, kQuestionsFile).size());
}

TEST(Evaluate, UnknownModelFilter) {
    auto stub = answering_a();
    auto c = juliet_config("filter");
    c.models = {stub_model(*stub)};
    c.model_filter = {"other"};
    small_budgets(c, 1);
    cmd_ingest(c, quiet);
    cmd_generate(c, quiet);
    cmd_questions(c, quiet);
    EXPECT_THROW(cmd_evaluate(c, quiet), ConfigError);
}

TEST(Config, ParsesAndResolvesPaths) {
    auto c = config_from_json(R"({
        "input_dir": "in", "output_dir": "/abs/out", "seed": 12,
        "budgets": {"DFL": 3, "PRD": 4}, "injection_levels": [0, 2],
        "models": [{"name": "m", "endpoint_url": "http://localhost:1/v1/chat/completions", "model": "x"}],
        "temperatures": [0.0, 0.5], "mode": "icl", "demos": "d.json"})",
                              "/base");
    EXPECT_EQ(c.input_dir, "/base/in");
    EXPECT_EQ(c.output_dir, "/abs/out");
    EXPECT_EQ(c.seed, 12u);
    EXPECT_EQ(c.budgets.at(question::Family::PRD), 4u);
    EXPECT_EQ(c.injection_levels, (std::vector<std::uint32_t>{0, 2}));
    ASSERT_EQ(c.models.size(), 1u);
    EXPECT_EQ(c.mode, harness::Mode::ICL);
    EXPECT_EQ(c.demos_path, "/base/d.json");
}

TEST(Config, Rejections) {
    EXPECT_THROW(config_from_json("[1]"), ConfigError);
    EXPECT_THROW(config_from_json("{not json"), ConfigError);
    EXPECT_THROW(config_from_json(R"({"budgets": {"XYZ": 1}})"), ConfigError);
    EXPECT_THROW(config_from_json(R"({"mode": "few"})"), ConfigError);
    EXPECT_THROW(config_from_json(R"({"deny": []})"), ConfigError);
    EXPECT_THROW(config_from_json(R"({"seed": "abc"})"), ConfigError);
    EXPECT_THROW(load_config("/no/such/config.json"), ConfigError);
}

TEST(Config, ShippedExampleLoads) {
    auto c = load_config(std::string(VRBENCH_DATA_DIR) + "/example_config.json");
    EXPECT_FALSE(c.models.empty());
    EXPECT_FALSE(c.input_dir.empty());
}
