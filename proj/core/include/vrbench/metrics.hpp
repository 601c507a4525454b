#pragma once

// Scores evaluation records against their questions. Every function here is
// pure and ignores record order.

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vrbench/harness.hpp"
#include "vrbench/question.hpp"

namespace vrbench::metrics {

struct Cell {
    std::size_t correct = 0;
    std::size_t total = 0;

    double rate() const { return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0; }
    friend bool operator==(const Cell&, const Cell&) = default;
};

using QuestionIndex = std::map<std::string, const question::Question*, std::less<>>;

/// Throws ConfigError on duplicate ids.
QuestionIndex index_questions(const std::vector<question::Question>& questions);

enum class Key : std::uint8_t { Model, Mode, Temperature, Family, Difficulty, Cwe, CweFamily, Structure };

using Table = std::map<std::vector<std::string>, Cell>;

/// correct/total per group. Throws JoinError for records of unknown questions.
Table accuracy_by(const std::vector<harness::EvalRecord>& records, const QuestionIndex& questions,
                  const std::vector<Key>& keys);

/// Share of safe base items answered unsafe, unknown or not at all. Throws
/// NoSafeItems.
double fpr_safe(const std::vector<harness::EvalRecord>& base_records, const QuestionIndex& questions);

/// Per family, items that are correct and whose base indicator holds. DFL,
/// CFL and CTF need both base halves, GDV the safe half, PRD the unsafe half.
/// Throws JoinError when a needed base record is missing.
std::map<question::Family, Cell> consistency_scores(
    const std::vector<harness::EvalRecord>& base_records,
    const std::vector<harness::EvalRecord>& family_records, const QuestionIndex& questions);

struct PairwiseScores {
    Cell base_pair;
    Cell ctf_pair;
    // CTF pairs that are correct together with their base pair.
    Cell cons_ctf;
};

/// Pairs are grouped by pair_id. Throws IncompletePair when a pair misses a
/// slot or a CTF pair has no base pair.
PairwiseScores pairwise_scores(const std::vector<harness::EvalRecord>& pair_records,
                               const QuestionIndex& questions);

struct ChoiceCount {
    std::size_t predicted = 0;
    std::size_t truth = 0;

    long excess() const { return static_cast<long>(predicted) - static_cast<long>(truth); }
    friend bool operator==(const ChoiceCount&, const ChoiceCount&) = default;
};

inline constexpr std::string_view kParseFailCategory = "ParseFail";

/// family -> category -> counts. Truth counts the first answer label of each
/// item; ParseFail answers get their own row.
std::map<std::string, std::map<std::string, ChoiceCount>> choice_distribution(
    const std::vector<harness::EvalRecord>& records, const QuestionIndex& questions);

struct MetricsReport {
    std::string model;
    harness::Mode mode = harness::Mode::Zero;
    double temperature = 0.0;
    // family -> difficulty ("all" for the whole family) -> cell
    std::map<std::string, std::map<std::string, Cell>> accuracy;
    Cell base_safe;
    Cell base_unsafe;
    std::optional<double> fpr_safe;
    // Numerator of fpr_safe.
    std::size_t safe_flagged = 0;
    std::map<question::Family, Cell> cons;
    std::optional<PairwiseScores> pairwise;
    std::map<std::string, std::map<std::string, ChoiceCount>> choices;
    // CWE family -> question family -> cell
    std::map<std::string, std::map<std::string, Cell>> by_cwe;
    std::size_t parse_fail = 0;
    std::size_t errors = 0;

    double base_avg() const { return (base_safe.rate() + base_unsafe.rate()) / 2.0; }
    double family_rate(question::Family f) const;
    double structure_avg() const;
    double semantic_avg() const;
};

/// One report per (model, mode, temperature). Pairwise records carry a
/// pair_id and only feed the pairwise scores. Consistency is left empty when
/// the base records needed for it are absent.
std::vector<MetricsReport> build_reports(const std::vector<harness::EvalRecord>& records,
                                         const QuestionIndex& questions);

std::string report_to_json(const MetricsReport& report);
/// Every report in one document: {"reports": [...], "models": [...], ...}.
std::string matrix_to_json(const std::vector<MetricsReport>& reports);
/// Long format: model,mode,temperature,metric,family,difficulty,correct,total,value.
std::string reports_to_csv(const std::vector<MetricsReport>& reports);
/// One row per report: per-family, grouped and base accuracies in percent.
std::string table2_csv(const std::vector<MetricsReport>& reports);

}  // namespace vrbench::metrics
