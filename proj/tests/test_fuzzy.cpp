#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "newscap/fuzzy.hpp"
#include "test_support.hpp"

using namespace newscap::fidelity;
using Catch::Matchers::WithinAbs;

namespace {

// Short tokens over a tiny alphabet so that partial overlaps are common.
std::string random_phrase(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> n_tokens(0, 5), len(1, 6), ch(0, 4);
  std::vector<std::string> tokens(n_tokens(rng));
  for (auto& t : tokens) {
    int l = len(rng);
    for (int i = 0; i < l; ++i) t.push_back(static_cast<char>('a' + ch(rng)));
  }
  return testsupport::join(tokens);
}

}  // namespace

TEST_CASE("indel distance") {
  CHECK(indel_distance(U"", U"") == 0);
  CHECK(indel_distance(U"abc", U"") == 3);
  CHECK(indel_distance(U"abc", U"xyz") == 6);
  CHECK(indel_distance(U"kitten", U"sitting") == 5);
}

TEST_CASE("ratio hand cases") {
  CHECK(ratio("", "") == 100.0);
  CHECK(ratio("abc", "") == 0.0);
  CHECK(ratio("abc", "xyz") == 0.0);
  CHECK(ratio("abc", "abc") == 100.0);
  CHECK_THAT(ratio("kitten", "sitting"), WithinAbs(100.0 * (1.0 - 5.0 / 13.0), 1e-12));
  // code points, not bytes
  CHECK_THAT(ratio("pe\xC3\xB1" "a", "pena"), WithinAbs(75.0, 1e-12));
}

TEST_CASE("token ratios hand cases") {
  CHECK(token_ratio("boric", "gabriel boric") == 100.0);
  CHECK(token_set_ratio("boric", "gabriel boric") == 100.0);
  CHECK(token_sort_ratio("boric gabriel", "gabriel boric") == 100.0);
  CHECK(token_ratio("abc", "xyz") == 0.0);
  CHECK(token_ratio("malcolm metcalf", "malcolm metcalf") == 100.0);
  CHECK(token_set_ratio("", "boric") == 0.0);
  CHECK(token_ratio("", "boric") == 0.0);
  CHECK(token_ratio("", "") == 100.0);
}

TEST_CASE("token_ratio matches the quadratic oracle on random pairs") {
  std::mt19937_64 rng(20240611);
  for (int i = 0; i < 500; ++i) {
    auto a = random_phrase(rng), b = random_phrase(rng);
    INFO(a << " | " << b);
    CHECK_THAT(token_sort_ratio(a, b), WithinAbs(testsupport::naive_token_sort(a, b), 1e-9));
    CHECK_THAT(token_set_ratio(a, b), WithinAbs(testsupport::naive_token_set(a, b), 1e-9));
    CHECK_THAT(token_ratio(a, b), WithinAbs(testsupport::naive_token_ratio(a, b), 1e-9));
  }
}

TEST_CASE("token_ratio is symmetric, bounded and 100 on identity") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 300; ++i) {
    auto a = random_phrase(rng), b = random_phrase(rng);
    double ab = token_ratio(a, b);
    CHECK(ab == token_ratio(b, a));
    CHECK(ab >= 0.0);
    CHECK(ab <= 100.0);
    CHECK(token_ratio(a, a) == 100.0);
  }
}

TEST_CASE("removing a shared token never raises token_ratio") {
  std::mt19937_64 rng(77);
  int checked = 0;
  for (int i = 0; i < 2000; ++i) {
    auto a = random_phrase(rng), b = random_phrase(rng);
    auto ta = testsupport::split_ws(a), tb = testsupport::split_ws(b);
    for (const auto& shared : ta) {
      if (std::find(tb.begin(), tb.end(), shared) == tb.end()) continue;
      auto drop = [&](std::vector<std::string> t) {
        t.erase(std::remove(t.begin(), t.end(), shared), t.end());
        return testsupport::join(t);
      };
      auto a2 = drop(ta), b2 = drop(tb);
      if (a2.empty() || b2.empty()) continue;
      INFO(a << " | " << b << " without " << shared);
      CHECK(token_ratio(a2, b2) <= token_ratio(a, b) + 1e-9);
      ++checked;
    }
  }
  CHECK(checked > 50);
}
