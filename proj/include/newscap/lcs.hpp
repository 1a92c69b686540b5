#pragma once

#include <bit>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

namespace newscap {

// Length of the longest common subsequence of `a` and `b`, computed with the
// bit-vector recurrence V' = (V + (V & M)) | (V & ~M) over 64-bit words,
// where M is the match mask of the current symbol of `b` against `a`.
// Runs in O(ceil(|a|/64) * |b|).
template <typename T>
std::size_t lcs_length(std::span<const T> a, std::span<const T> b) {
  if (a.size() > b.size()) std::swap(a, b);
  if (a.empty()) return 0;

  const std::size_t words = (a.size() + 63) / 64;
  std::unordered_map<T, std::vector<std::uint64_t>> masks;
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto& mask = masks[a[i]];
    if (mask.empty()) mask.assign(words, 0);
    mask[i / 64] |= std::uint64_t{1} << (i % 64);
  }

  std::vector<std::uint64_t> v(words, ~std::uint64_t{0});
  for (const T& symbol : b) {
    auto it = masks.find(symbol);
    if (it == masks.end()) continue;
    const auto& m = it->second;
    std::uint64_t carry = 0;
    for (std::size_t w = 0; w < words; ++w) {
      const std::uint64_t u = v[w] & m[w];
      const std::uint64_t sum = v[w] + u;
      const std::uint64_t with_carry = sum + carry;
      carry = (sum < v[w]) || (with_carry < sum) ? 1 : 0;
      v[w] = with_carry | (v[w] - u);
    }
  }

  std::size_t zeros = 0;
  for (std::size_t w = 0; w < words; ++w) {
    std::uint64_t word = v[w];
    if (w == words - 1 && a.size() % 64 != 0) {
      word |= ~std::uint64_t{0} << (a.size() % 64);
    }
    zeros += static_cast<std::size_t>(64 - std::popcount(word));
  }
  return zeros;
}

}  // namespace newscap
