#pragma once

// Behavior-controlled code variants built from a safe/unsafe function pair:
// structural wrapping with masked guards, guard filling, control-flow
// injection, label masking and compile validation.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vrbench/common.hpp"
#include "vrbench/flow.hpp"

namespace vrbench::variant {

enum class Structure : std::uint8_t { Outer, Inner, OuterInner };
enum class Behavior : std::uint8_t { Safe, Unsafe, Impaired };
enum class CompileStatus : std::uint8_t { Unchecked, Ok, Failed };
enum class TruthValue : std::uint8_t { AlwaysTrue, AlwaysFalse };
enum class MaskStyle : std::uint8_t {
    GlobalConstFlag,
    ConstExpr,
    IdentityFunctionCall,
    SingleIterationLoop,
};

std::string_view structure_name(Structure s);
std::string_view behavior_name(Behavior b);
std::string_view compile_status_name(CompileStatus s);
std::string_view mask_style_name(MaskStyle s);
Structure parse_structure(std::string_view text);
Behavior parse_behavior(std::string_view text);
CompileStatus parse_compile_status(std::string_view text);

inline constexpr std::uint32_t kDefaultMaxInjections = 3;

struct VariantSpec {
    Structure structure = Structure::Outer;
    Behavior behavior = Behavior::Safe;
    std::uint32_t injection_count = 0;
    std::uint64_t seed = 0;
};

/// Which guard values lead to a block. Empty optional = either value.
struct Route {
    Behavior behavior = Behavior::Safe;
    std::vector<std::optional<bool>> slot_values;
};

struct Variant {
    VariantSpec spec;
    std::string source;
    std::string base_path;
    std::string cwe_id;
    // Function whose body carries the variant.
    std::string function_name;
    // Spans of the unfilled guard placeholders, in slot order.
    std::vector<Span> mask_slots;
    CompileStatus compile_status = CompileStatus::Unchecked;
    std::vector<Route> routes;
    // Condition text per slot once filled.
    std::vector<std::string> fills;

    std::string id() const;
    bool masked() const { return !mask_slots.empty(); }
};

struct MaskCatalogEntry {
    std::string id;
    // `@` marks the hole: the guarded statements.
    std::string condition_template;
    TruthValue truth_value = TruthValue::AlwaysTrue;
    MaskStyle style = MaskStyle::ConstExpr;
    // File-scope definitions the condition needs; empty when none.
    std::string helper;
    std::string helper_name;

    /// Guard expression for `if` styles; empty for loop styles.
    std::string condition() const;
};

std::vector<MaskCatalogEntry> default_catalog();
/// JSON array of {id, condition_template, truth_value, style, helper?,
/// helper_name?}. Throws ConfigError.
std::vector<MaskCatalogEntry> load_catalog(std::string_view json_text);

/// Indented text of one statement, dedented to column 0.
struct Piece {
    std::string text;
    int depth = 0;
};

/// Shared skeleton and unique parts of the pair's bodies.
struct BlockExtraction {
    std::vector<Piece> prefix;
    std::vector<Piece> suffix;
    std::vector<std::string> safe_block;
    std::vector<std::string> unsafe_block;
    int hole_depth = 0;
    std::string return_type;
};

/// Throws ExtractionError when the unique parts are both empty or both
/// consist of declarations only.
BlockExtraction extract_blocks(const flow::SourceUnit& unit);

/// The unit's file with the unsafe function's body replaced by a masked
/// layout. Throws ExtractionError.
Variant wrap_structure(const flow::SourceUnit& unit, const VariantSpec& spec);

/// Prints the neutral completion marker and returns the zero value of the
/// unsafe function's return type.
std::string make_impaired_block(const flow::SourceUnit& unit);
std::string impaired_block_for(std::string_view return_type);
inline constexpr std::string_view kImpairedMarker = "operation completed";

/// Conditions, one per slot, that route execution to `behavior`. Throws
/// CatalogEmpty or BehaviorUnavailable.
std::vector<std::string> route_conditions(const Variant& masked, Behavior behavior,
                                          const std::vector<MaskCatalogEntry>& catalog,
                                          std::uint64_t seed);

/// Behavior reached when the slots hold these truth values.
std::optional<Behavior> route_of(const Variant& masked, const std::vector<bool>& slot_truths);

/// Truth value of a catalog condition. Throws ConfigError for conditions
/// outside the catalog.
bool condition_truth(std::string_view condition, const std::vector<MaskCatalogEntry>& catalog);

/// Replaces the placeholders with the given conditions and adds helper
/// definitions.
Variant fill_slots(const Variant& masked, const std::vector<std::string>& conditions,
                   const std::vector<MaskCatalogEntry>& catalog);

Variant fill_mask(const Variant& masked, Behavior behavior,
                  const std::vector<MaskCatalogEntry>& catalog, std::uint64_t seed);

/// Wraps `count` disjoint statements of the variant function in always-true
/// guards or single-iteration loops. `count` is clamped to the number of
/// eligible statements; 0 returns the variant unchanged.
Variant inject_control_flow(const Variant& variant, std::uint32_t count,
                            const std::vector<MaskCatalogEntry>& catalog, std::uint64_t seed);

std::vector<std::string> default_deny_list();
std::vector<std::string> default_neutral_pool();

struct MaskResult {
    std::string text;
    // original -> replacement, in order of first occurrence
    std::vector<std::pair<std::string, std::string>> renames;

    std::string renamed(const std::string& name) const;
};

/// Strips comments and renames identifiers containing a deny-list
/// substring (case-insensitive) to neutral pool words. Words in string
/// literals and macro directives are rewritten as well; include paths are
/// kept. Throws RenameCollision when no fresh name can be found.
MaskResult mask_labels_detailed(std::string_view source, const std::vector<std::string>& deny,
                                const std::vector<std::string>& pool, std::uint64_t seed);
std::string mask_labels(std::string_view source, const std::vector<std::string>& deny,
                        const std::vector<std::string>& pool, std::uint64_t seed);

/// Case-insensitive scan for any deny-list substring.
bool contains_deny_token(std::string_view text, const std::vector<std::string>& deny);

/// Applies label masking to a variant, keeping function_name in sync. Runs
/// of blank lines left by comment removal are collapsed.
Variant mask_variant(const Variant& variant, const std::vector<std::string>& deny,
                     const std::vector<std::string>& pool, std::uint64_t seed);

/// Runs `command` with `{src}` replaced by a temporary copy of the source.
/// Throws CompilerUnavailable for an empty command or exit status 127.
Variant validate_compile(const Variant& variant, const std::string& command);

/// Top-level definitions the named function refers to, followed by the
/// function itself, in file order. Throws UnknownElement.
struct FunctionView {
    std::string text;
    // 1-based line of the function's first line within `text`.
    std::uint32_t function_line = 1;
};
FunctionView function_view(std::string_view source, std::string_view function_name,
                           bool with_helpers = true);
std::string function_code(std::string_view source, std::string_view function_name,
                          bool with_helpers = true);

std::string variant_to_jsonl(const Variant& variant);
Variant variant_from_jsonl(std::string_view line);

}  // namespace vrbench::variant
