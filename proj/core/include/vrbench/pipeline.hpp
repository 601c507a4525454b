#pragma once

// End-to-end stages. Each stage reads the files written by the one before it
// under `output_dir` and writes line-delimited records of its own.

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "vrbench/harness.hpp"
#include "vrbench/metrics.hpp"
#include "vrbench/question.hpp"
#include "vrbench/variant.hpp"

namespace vrbench::pipeline {

struct PipelineConfig {
    std::string input_dir;
    // Optional JSON object: relative path -> {"safe", "unsafe", "cwe"}. Files
    // not listed fall back to the Juliet naming convention.
    std::string metadata_path;
    std::string output_dir = "out";
    std::uint64_t seed = 0;
    // Compiler command with a `{src}` placeholder; empty skips the check.
    std::string compiler;
    std::vector<std::string> include_dirs;
    std::vector<std::string> deny = variant::default_deny_list();
    std::vector<std::string> pool = variant::default_neutral_pool();
    std::string catalog_path;
    std::string templates_path;
    std::vector<std::uint32_t> injection_levels{0, 1};
    std::map<question::Family, std::size_t> budgets;
    std::size_t per_base_cap = 0;
    std::vector<harness::ModelConfig> models;
    // Names to evaluate; empty for all.
    std::vector<std::string> model_filter;
    harness::Mode mode = harness::Mode::Zero;
    std::string demos_path;
    bool pairwise = false;
    bool strict = false;
    std::vector<double> temperatures;
    // Worker threads for per-base work; 0 picks the hardware concurrency.
    std::uint32_t jobs = 0;
};

/// Relative paths in the file resolve against `base_dir`. Throws ConfigError.
PipelineConfig config_from_json(std::string_view text, const std::string& base_dir = ".");
PipelineConfig load_config(const std::string& path);

// Stage files under output_dir.
inline constexpr const char* kManifestFile = "manifest.jsonl";
inline constexpr const char* kVariantsFile = "variants.jsonl";
inline constexpr const char* kSkeletonsFile = "skeletons.jsonl";
inline constexpr const char* kQuestionsFile = "questions.jsonl";
inline constexpr const char* kResponsesDir = "responses";
inline constexpr const char* kMetricsDir = "metrics";

struct ManifestEntry {
    std::string base_path;
    std::string safe_fn;
    std::string unsafe_fn;
    std::string cwe_id;
    std::string source;
};

std::string manifest_to_jsonl(const ManifestEntry& e);
ManifestEntry manifest_from_jsonl(std::string_view line);

enum class Status : int { Ok = 0, Partial = 1, ConfigFailure = 2 };

struct StageResult {
    Status status = Status::Ok;
    std::vector<std::string> problems;
    std::vector<std::string> files;

    void fail(std::string message) {
        problems.push_back(std::move(message));
        if (status == Status::Ok) status = Status::Partial;
    }
    void merge(const StageResult& other);
};

/// Log sink for warnings and summaries; defaults to stderr.
using Log = std::function<void(const std::string&)>;

/// Files without a resolvable pair are skipped; parse failures are listed.
/// Throws ConfigError when two input paths or two metadata keys name the
/// same base.
StageResult cmd_ingest(const PipelineConfig& cfg, const Log& log = {});
StageResult cmd_generate(const PipelineConfig& cfg, const Log& log = {});
StageResult cmd_questions(const PipelineConfig& cfg, const Log& log = {});
/// One response file per model, temperature and runner. `client` defaults
/// to HTTP.
StageResult cmd_evaluate(const PipelineConfig& cfg, const Log& log = {},
                         harness::ModelClient* client = nullptr);
StageResult cmd_score(const PipelineConfig& cfg, const Log& log = {});
StageResult cmd_all(const PipelineConfig& cfg, const Log& log = {},
                    harness::ModelClient* client = nullptr);

/// Variants of one base: structures x behaviors x injection levels, each
/// masked and filled. Skeletons are the masked OuterInner layouts used by
/// goal-driven questions.
struct BaseVariants {
    std::vector<variant::Variant> variants;
    std::vector<variant::Variant> skeletons;
    std::vector<std::string> problems;
};

BaseVariants generate_base_variants(const flow::SourceUnit& unit, const PipelineConfig& cfg,
                                    const std::vector<variant::MaskCatalogEntry>& catalog);

/// All five families plus base questions for one base, before balancing.
std::vector<question::Question> generate_base_questions(
    const flow::SourceUnit& unit, const std::vector<variant::Variant>& variants,
    const std::vector<variant::Variant>& skeletons, const std::vector<std::string>& cwe_universe,
    const std::vector<variant::MaskCatalogEntry>& catalog, const question::Policy& policy,
    std::vector<std::string>* problems = nullptr);

question::Policy make_policy(const PipelineConfig& cfg);
std::vector<variant::MaskCatalogEntry> load_catalog_for(const PipelineConfig& cfg);

/// Family x difficulty count table.
std::string summary_table(const question::QuestionSet& set);

std::vector<std::string> read_lines(const std::string& path);
void write_lines(const std::string& path, const std::vector<std::string>& lines);

}  // namespace vrbench::pipeline
