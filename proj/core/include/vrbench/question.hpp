#pragma once

// Multiple-choice questions over base functions and their variants, with
// answers derived from the flow graphs or from the generator's own labels.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vrbench/flow.hpp"
#include "vrbench/variant.hpp"

namespace vrbench::question {

/// `Base` asks whether an unmodified safe or unsafe function is vulnerable;
/// the consistency scores join every other family against it.
enum class Family : std::uint8_t { DFL, CFL, CTF, GDV, PRD, Base };

std::string_view family_name(Family f);
Family parse_family(std::string_view text);
inline constexpr Family kAllFamilies[] = {Family::DFL, Family::CFL, Family::CTF,
                                          Family::GDV, Family::PRD, Family::Base};

// Answer categories used by the choice distribution.
namespace category {
inline constexpr std::string_view kDirect = "Direct C.";
inline constexpr std::string_view kNone = "Not C.";
inline constexpr std::string_view kIndirect = "Indirect C.";
inline constexpr std::string_view kUnknown = "Unknown";
inline constexpr std::string_view kSafe = "Safe";
inline constexpr std::string_view kBypass = "Bypass";
inline constexpr std::string_view kUnsafe = "Unsafe";
inline constexpr std::string_view kTarget = "Target";
inline constexpr std::string_view kOthers = "Others";
}  // namespace category

inline constexpr std::string_view kUnknownText = "I don't know.";

struct Choice {
    std::string label;
    std::string text;
    std::string category;
    // Goal-driven options: one condition per mask slot.
    std::vector<std::string> fills;
};

struct Provenance {
    std::string base_path;
    std::vector<std::string> variant_ids;
    std::optional<flow::ElementId> src_element;
    std::optional<flow::ElementId> dst_element;
    // Function the question shows.
    std::string function_name;
    std::string cwe_id;
    // Variant families only.
    std::string structure;
    std::uint32_t injection_count = 0;
};

struct Question {
    std::string id;
    Family family = Family::DFL;
    std::string prompt;
    // The masked code embedded in the prompt.
    std::string code;
    std::vector<Choice> choices;
    std::vector<std::string> answer_labels;
    // nullopt is the "None" level of unconnected structure questions.
    std::optional<int> difficulty;
    Provenance provenance;
    std::uint64_t shuffle_seed = 0;
    // Masked names and conditions quoted in the question text.
    std::vector<std::string> code_refs;

    /// Label of the "I don't know." option.
    std::string unknown_label() const;
    std::vector<std::string> labels() const;
    const Choice* choice(std::string_view label) const;
    /// `strict` requires every answer label for multi-answer items.
    bool is_correct(const std::vector<std::string>& given, bool strict = false) const;
};

std::string difficulty_name(const std::optional<int>& difficulty);

/// Text pieces per family; `{name}` placeholders are filled per question.
struct FamilyTemplate {
    std::string question;
    // Keyed by category; the safe-variant predictive target uses "TargetSafe".
    std::map<std::string, std::string, std::less<>> options;
};

struct Templates {
    std::map<Family, FamilyTemplate> families;

    static Templates builtin();
    /// JSON object keyed by family name. Missing families fall back to the
    /// built-in text. Throws ConfigError.
    static Templates from_json(std::string_view text);
    std::string to_json() const;
    const FamilyTemplate& of(Family f) const;
};

struct Policy {
    std::uint64_t seed = 0;
    bool pin_unknown = true;
    std::uint32_t max_hops = 4;
    flow::TargetPolicy targets;
    Templates templates = Templates::builtin();
    std::vector<std::string> deny = variant::default_deny_list();
    std::vector<std::string> pool = variant::default_neutral_pool();
    // Total questions kept per family across all bases; 0 keeps everything.
    std::map<Family, std::size_t> budgets;
    // Upper bound per base file and family; 0 for none.
    std::size_t per_base_cap = 0;
};

std::vector<Question> gen_dataflow_questions(const flow::SourceUnit& unit, const flow::FlowGraph& dfg,
                                             const flow::FlowGraph& cfg, const Policy& policy);
std::vector<Question> gen_controlflow_questions(const flow::SourceUnit& unit,
                                                const flow::FlowGraph& dfg,
                                                const flow::FlowGraph& cfg, const Policy& policy);
/// One question per function of the pair.
std::vector<Question> gen_base_questions(const flow::SourceUnit& unit, const Policy& policy);

struct VariantTriple {
    const variant::Variant* safe = nullptr;
    const variant::Variant* impaired = nullptr;
    const variant::Variant* unsafe = nullptr;
};

/// Three questions per triple. Throws IncompleteTriple.
std::vector<Question> gen_counterfactual_questions(const std::vector<VariantTriple>& triples,
                                                   const Policy& policy);

/// Condition sets that route the skeleton to the impaired, safe and unsafe
/// blocks, in that order.
std::vector<std::vector<std::string>> goal_fills(const variant::Variant& masked,
                                                 const std::vector<variant::MaskCatalogEntry>& catalog,
                                                 std::uint64_t seed);

/// Throws FillBehaviorClash when two fills reach the same block or none
/// reaches the safe one.
Question gen_goaldriven_question(const variant::Variant& masked,
                                 const std::vector<std::vector<std::string>>& fills,
                                 const std::vector<variant::MaskCatalogEntry>& catalog,
                                 const Policy& policy);

/// Class-level family of a CWE id, e.g. "CWE-121" -> "CWE-119".
std::string cwe_family(std::string_view cwe_id);
std::string cwe_title(std::string_view cwe_id);
/// CWE ids with a known family.
std::vector<std::string> known_cwes();

/// Throws EmptyUniverse when no CWE of another family is available.
Question gen_predictive_question(const variant::Variant& variant,
                                 const std::vector<std::string>& cwe_universe,
                                 const Policy& policy);

/// Permutes the options. With `pin_unknown` the unknown option stays last.
Question shuffle_options(const Question& q, std::uint64_t seed, bool pin_unknown = true);

struct QuestionSet {
    std::vector<Question> questions;
    std::map<std::string, std::size_t> family_counts;
    std::map<std::string, std::map<std::string, std::size_t>> difficulty_counts;
    std::uint64_t seed = 0;
};

QuestionSet make_question_set(std::vector<Question> questions, std::uint64_t seed);

/// Per family, spreads the budget evenly over base files, taking the most
/// difficult questions of each base first.
QuestionSet balance_distribution(const std::vector<Question>& questions, const Policy& policy);

/// Difficulty tier of variant questions.
int variant_tier(variant::Structure structure, std::uint32_t injection_count);

struct GraphCacheEntry;

struct RecomputeContext {
    std::map<std::string, const flow::SourceUnit*, std::less<>> units;
    std::map<std::string, const variant::Variant*, std::less<>> variants;
    std::vector<variant::MaskCatalogEntry> catalog = variant::default_catalog();
    // Graphs built on first use, per base path.
    mutable std::map<std::string, std::shared_ptr<GraphCacheEntry>, std::less<>> graphs;
};

/// Answer labels rebuilt from the provenance alone. Throws UnknownElement
/// when a referenced unit or variant is missing.
std::vector<std::string> recompute_answer(const Question& q, const RecomputeContext& ctx);

/// The code block, quoted code references and fill conditions; all of them
/// must pass the deny scan.
std::vector<std::string> code_derived_text(const Question& q);

std::string question_to_json(const Question& q);
Question question_from_json(std::string_view line);

}  // namespace vrbench::question
