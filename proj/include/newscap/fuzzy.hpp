#pragma once

#include <cstddef>
#include <string_view>

// Indel-based fuzzy ratios on a 0-100 scale, computed over Unicode code
// points of whitespace-tokenized, already-normalized strings.
namespace newscap::fidelity {

// Insert/delete-only edit distance: |a| + |b| - 2 * LCS(a, b).
std::size_t indel_distance(std::u32string_view a, std::u32string_view b);

// 100 * (1 - indel / (|a| + |b|)); two empty strings score 100.
double ratio(std::string_view a, std::string_view b);

double token_sort_ratio(std::string_view a, std::string_view b);

// Best ratio among (intersection, intersection + diff_a),
// (intersection, intersection + diff_b) and the two augmented strings, all
// built from sorted, deduplicated tokens. Zero when either side has no tokens.
double token_set_ratio(std::string_view a, std::string_view b);

// max(token_sort_ratio, token_set_ratio).
double token_ratio(std::string_view a, std::string_view b);

}  // namespace newscap::fidelity
