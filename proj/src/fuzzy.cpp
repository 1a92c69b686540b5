#include "newscap/fuzzy.hpp"

#include <algorithm>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "newscap/lcs.hpp"
#include "newscap/text.hpp"

namespace newscap::fidelity {

std::size_t indel_distance(std::u32string_view a, std::u32string_view b) {
  std::size_t lcs = newscap::lcs_length<char32_t>(std::span<const char32_t>(a.data(), a.size()),
                                                  std::span<const char32_t>(b.data(), b.size()));
  return a.size() + b.size() - 2 * lcs;
}

namespace {

double normalized_similarity(std::size_t distance, std::size_t length_sum) {
  if (length_sum == 0) return 100.0;
  return 100.0 * (1.0 - static_cast<double>(distance) / static_cast<double>(length_sum));
}

double ratio_u32(std::u32string_view a, std::u32string_view b) {
  return normalized_similarity(indel_distance(a, b), a.size() + b.size());
}

std::vector<std::u32string> tokens_of(std::string_view s) {
  std::vector<std::u32string> out;
  for (const auto& piece : text::split_whitespace(s)) out.push_back(text::to_u32(piece));
  return out;
}

std::u32string join(const std::vector<std::u32string>& tokens) {
  std::u32string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out.push_back(U' ');
    out += t;
  }
  return out;
}

}  // namespace

double ratio(std::string_view a, std::string_view b) {
  return ratio_u32(text::to_u32(a), text::to_u32(b));
}

double token_sort_ratio(std::string_view a, std::string_view b) {
  auto ta = tokens_of(a);
  auto tb = tokens_of(b);
  std::sort(ta.begin(), ta.end());
  std::sort(tb.begin(), tb.end());
  return ratio_u32(join(ta), join(tb));
}

double token_set_ratio(std::string_view a, std::string_view b) {
  auto ta = tokens_of(a);
  auto tb = tokens_of(b);
  if (ta.empty() || tb.empty()) return 0.0;
  std::set<std::u32string> sa(ta.begin(), ta.end());
  std::set<std::u32string> sb(tb.begin(), tb.end());

  std::vector<std::u32string> common, diff_ab, diff_ba;
  std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(common));
  std::set_difference(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(diff_ab));
  std::set_difference(sb.begin(), sb.end(), sa.begin(), sa.end(), std::back_inserter(diff_ba));

  // One token set contains the other.
  if (!common.empty() && (diff_ab.empty() || diff_ba.empty())) return 100.0;

  const std::u32string ab = join(diff_ab);
  const std::u32string ba = join(diff_ba);
  const std::size_t sect_len = join(common).size();
  const std::size_t sep = sect_len > 0 ? 1 : 0;
  const std::size_t sect_ab_len = sect_len + sep + ab.size();
  const std::size_t sect_ba_len = sect_len + sep + ba.size();

  // The shared "intersection + space" prefix does not change the indel
  // distance between the two augmented strings.
  double best = normalized_similarity(indel_distance(ab, ba), sect_ab_len + sect_ba_len);
  if (sect_len == 0) return best;

  // Intersection vs. intersection + diff differ only by the appended suffix.
  best = std::max(best, normalized_similarity(sep + ab.size(), sect_len + sect_ab_len));
  best = std::max(best, normalized_similarity(sep + ba.size(), sect_len + sect_ba_len));
  return best;
}

double token_ratio(std::string_view a, std::string_view b) {
  return std::max(token_sort_ratio(a, b), token_set_ratio(a, b));
}

}  // namespace newscap::fidelity
