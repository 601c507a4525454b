#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "vrbench/flow.hpp"
#include "vrbench/harness.hpp"
#include "vrbench/metrics.hpp"
#include "vrbench/pipeline.hpp"
#include "vrbench/question.hpp"
#include "vrbench/variant.hpp"

namespace vrtest {

std::string fixture_path(const std::string& rel);
std::string juliet_dir();
std::string support_dir();
std::string sanitizer_dir();
/// All .c files directly under `dir`, sorted.
std::vector<std::string> c_files(const std::string& dir);

vrbench::flow::SourceUnit load_unit(const std::string& path);

/// Fresh directory under the system temp dir.
std::string temp_dir(const std::string& tag);

// ---- toy programs and the brute-force graph oracle ----

/// A helper plus a function `toy` of random assignments, calls, branches,
/// loops and early returns.
std::string random_toy_program(std::mt19937_64& rng);

struct OracleReport {
    std::size_t pairs = 0;
    std::size_t hop_checks = 0;
    std::vector<std::string> mismatches;
};

/// Compares guard edges, classify_impact over every (element, target) pair
/// of `function`, and hop_distance over every element pair, against
/// Floyd-Warshall closures and guard regions read off the syntax tree.
OracleReport check_graph_oracle(const vrbench::flow::SourceUnit& unit, const std::string& function);

// ---- sanitizer execution ----

struct RunResult {
    bool compiled = false;
    int exit_code = -1;
    std::string out;
    std::string err;
    bool flagged() const;
};

/// Compiles the variant with a `main` calling its function under
/// address/undefined sanitizers and runs it.
RunResult run_with_sanitizers(const vrbench::variant::Variant& v, const std::string& work_dir);
bool sanitizers_available();

struct SanitizerPair {
    std::string file;
    // Printed only by the behavior blocks of the pair.
    std::string functional_token;
};
std::vector<SanitizerPair> sanitizer_pairs();

// ---- generated corpora ----

/// Everything generated from the .c files of one directory, kept in memory.
struct Corpus {
    std::vector<vrbench::flow::SourceUnit> units;
    std::vector<vrbench::variant::Variant> variants;
    std::vector<vrbench::variant::Variant> skeletons;
    std::vector<vrbench::question::Question> questions;
    std::vector<std::string> problems;

    /// Lookup tables for recompute_answer; valid while the corpus lives.
    vrbench::question::RecomputeContext context() const;
};

/// `compiler` empty leaves variants unchecked.
Corpus build_corpus(const std::string& dir, std::uint64_t seed, const std::string& compiler = {});
/// Syntax-only compile command against the test support headers.
std::string syntax_check_command();

/// Upper tail of the chi-square statistic of `counts` against a uniform
/// expectation. Supports 2 to 4 cells.
double chi_square_uniform_p(const std::vector<std::size_t>& counts);

// ---- records and questions for metrics ----

vrbench::question::Question base_question(const std::string& id, const std::string& base, bool safe);
vrbench::question::Question family_question(const std::string& id, vrbench::question::Family family,
                                            const std::string& base, std::optional<int> difficulty = 1);
vrbench::harness::EvalRecord record_for(const vrbench::question::Question& q, bool correct,
                                        const std::string& model = "m");


/// Records with hand-computed consistency and pairwise scores.
struct MetricsFixture {
    std::string name;
    std::vector<vrbench::question::Question> questions;
    std::vector<vrbench::harness::EvalRecord> records;
    std::map<vrbench::question::Family, vrbench::metrics::Cell> cons;
    std::optional<vrbench::metrics::PairwiseScores> pairwise;
};
std::vector<MetricsFixture> metrics_fixtures();

/// Random single-question records over a few bases; every base has both
/// base records so consistency is always defined.
MetricsFixture random_records(std::mt19937_64& rng);

}  // namespace vrtest
