#pragma once

#include "vrbench/variant.hpp"

namespace vrbench::variant {

std::vector<Span> mask_slots_of(std::string_view source);

/// Column of `span` when only whitespace precedes it on its line.
std::optional<std::size_t> statement_indent(std::string_view source, const Span& span);

/// Statement text with continuation lines shifted left by its indentation.
std::string statement_text(std::string_view source, const Span& span);

/// Inserts the helper definitions of `entries` that the source lacks just
/// before `function_name`.
std::string insert_helpers(std::string source, std::string_view function_name,
                           const std::vector<const MaskCatalogEntry*>& entries);

}  // namespace vrbench::variant
