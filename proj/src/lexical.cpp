#include "newscap/lexical.hpp"

#include <algorithm>
#include <functional>
#include <optional>
#include <span>
#include <unordered_map>

#include <json.hpp>

#include "newscap/corpus.hpp"
#include "newscap/error.hpp"
#include "newscap/lcs.hpp"
#include "newscap/porter_stemmer.hpp"
#include "newscap/text.hpp"

namespace newscap::lexical {

TokenSequence tokenize(std::string_view input) {
  TokenSequence seq;
  seq.source_text = std::string(input);
  std::string normalized = text::nfc(text::lowercase(text::nfc(input)));
  for (const auto& piece : text::split_whitespace(normalized)) {
    std::u32string cps = text::to_u32(piece);
    std::size_t begin = 0;
    std::size_t end = cps.size();
    while (begin < end && text::is_punct(cps[begin])) ++begin;
    while (end > begin && text::is_punct(cps[end - 1])) --end;
    if (begin == end) continue;
    seq.tokens.push_back(text::to_utf8(std::u32string_view(cps).substr(begin, end - begin)));
  }
  return seq;
}

std::size_t lcs_length(const TokenSequence& a, const TokenSequence& b) {
  std::unordered_map<std::string_view, int> ids;
  auto encode = [&ids](const TokenSequence& s) {
    std::vector<int> out;
    out.reserve(s.tokens.size());
    for (const auto& t : s.tokens) {
      auto [it, inserted] = ids.emplace(t, static_cast<int>(ids.size()));
      out.push_back(it->second);
    }
    return out;
  };
  std::vector<int> ea = encode(a);
  std::vector<int> eb = encode(b);
  return newscap::lcs_length<int>(std::span<const int>(ea), std::span<const int>(eb));
}

RougeLResult rouge_l(const TokenSequence& candidate, const TokenSequence& reference) {
  RougeLResult result;
  if (candidate.empty() || reference.empty()) return result;
  result.lcs_length = lcs_length(candidate, reference);
  if (result.lcs_length == 0) return result;
  const double lcs = static_cast<double>(result.lcs_length);
  result.precision = lcs / static_cast<double>(candidate.size());
  result.recall = lcs / static_cast<double>(reference.size());
  result.f1 = 2.0 * result.precision * result.recall / (result.precision + result.recall);
  return result;
}

void SynonymTable::add(const std::string& token, const std::string& synonym) {
  table_[text::lowercase(token)].insert(text::lowercase(synonym));
}

bool SynonymTable::related(const std::string& a, const std::string& b) const {
  auto lookup = [this](const std::string& x, const std::string& y) {
    auto it = table_.find(x);
    return it != table_.end() && it->second.contains(y);
  };
  return lookup(a, b) || lookup(b, a);
}

SynonymTable SynonymTable::parse_json(std::string_view content) {
  auto root = nlohmann::json::parse(content, nullptr, false);
  if (root.is_discarded() || !root.is_object()) {
    throw Error(ErrorKind::kMalformedFile, "synonym table must be a JSON object");
  }
  SynonymTable table;
  for (const auto& [token, synonyms] : root.items()) {
    if (!synonyms.is_array()) {
      throw Error(ErrorKind::kMalformedFile, "synonyms of '" + token + "' must be a list");
    }
    for (const auto& s : synonyms) {
      if (!s.is_string()) {
        throw Error(ErrorKind::kMalformedFile, "synonym of '" + token + "' is not a string");
      }
      table.add(token, s.get<std::string>());
    }
  }
  return table;
}

SynonymTable SynonymTable::load(const std::filesystem::path& path) {
  return parse_json(corpus::read_file(path));
}

std::size_t count_crossings(const std::vector<Alignment>& alignment) {
  std::size_t crossings = 0;
  for (std::size_t a = 0; a < alignment.size(); ++a) {
    for (std::size_t b = a + 1; b < alignment.size(); ++b) {
      const auto& x = alignment[a];
      const auto& y = alignment[b];
      if ((x.candidate_index < y.candidate_index) != (x.reference_index < y.reference_index)) {
        ++crossings;
      }
    }
  }
  return crossings;
}

std::size_t count_chunks(std::vector<Alignment> alignment) {
  if (alignment.empty()) return 0;
  std::sort(alignment.begin(), alignment.end(), [](const Alignment& a, const Alignment& b) {
    return a.candidate_index < b.candidate_index;
  });
  std::size_t chunks = 1;
  for (std::size_t k = 1; k < alignment.size(); ++k) {
    const auto& prev = alignment[k - 1];
    const auto& cur = alignment[k];
    if (cur.candidate_index != prev.candidate_index + 1 ||
        cur.reference_index != prev.reference_index + 1) {
      ++chunks;
    }
  }
  return chunks;
}

namespace {

using Edge = std::pair<std::size_t, std::size_t>;  // (candidate, reference)

bool crosses(const Edge& a, const Edge& b) {
  return (a.first < b.first) != (a.second < b.second) && a.first != b.first &&
         a.second != b.second;
}

// Solves one matching stage: a maximum matching over `eligible` with the
// fewest crossings against itself and against `fixed`.
class StageSolver {
 public:
  StageSolver(std::size_t n_cand, std::size_t n_ref,
              std::function<bool(std::size_t, std::size_t)> eligible,
              const std::vector<Edge>& fixed)
      : n_cand_(n_cand), n_ref_(n_ref), fixed_(fixed), adj_(n_cand) {
    std::vector<bool> cand_used(n_cand, false), ref_used(n_ref, false);
    for (const auto& [i, j] : fixed) {
      cand_used[i] = true;
      ref_used[j] = true;
    }
    for (std::size_t i = 0; i < n_cand; ++i) {
      if (cand_used[i]) continue;
      for (std::size_t j = 0; j < n_ref; ++j) {
        if (!ref_used[j] && eligible(i, j)) adj_[i].push_back(j);
      }
    }
  }

  std::vector<Edge> solve() {
    std::vector<Edge> best = maximum_matching();
    if (best.empty()) return best;
    improve_locally(best);
    std::size_t best_cost = cost(best);
    if (best_cost > 0) search_exact(best, best_cost);
    std::sort(best.begin(), best.end());
    return best;
  }

 private:
  static constexpr std::size_t kNodeBudget = 200000;

  std::vector<Edge> maximum_matching() {
    std::vector<long> ref_owner(n_ref_, -1);
    std::vector<long> cand_ref(n_cand_, -1);
    for (std::size_t i = 0; i < n_cand_; ++i) {
      if (adj_[i].empty()) continue;
      std::vector<bool> seen(n_ref_, false);
      augment(i, seen, ref_owner, cand_ref);
    }
    std::vector<Edge> matching;
    for (std::size_t i = 0; i < n_cand_; ++i) {
      if (cand_ref[i] >= 0) matching.emplace_back(i, static_cast<std::size_t>(cand_ref[i]));
    }
    return matching;
  }

  bool augment(std::size_t i, std::vector<bool>& seen, std::vector<long>& ref_owner,
               std::vector<long>& cand_ref) {
    for (std::size_t j : adj_[i]) {
      if (seen[j]) continue;
      seen[j] = true;
      if (ref_owner[j] < 0 ||
          augment(static_cast<std::size_t>(ref_owner[j]), seen, ref_owner, cand_ref)) {
        ref_owner[j] = static_cast<long>(i);
        cand_ref[i] = static_cast<long>(j);
        return true;
      }
    }
    return false;
  }

  bool is_eligible(std::size_t i, std::size_t j) const {
    return std::binary_search(adj_[i].begin(), adj_[i].end(), j);
  }

  std::size_t cost(const std::vector<Edge>& edges) const {
    std::size_t c = 0;
    for (std::size_t a = 0; a < edges.size(); ++a) {
      for (const auto& f : fixed_) c += crosses(edges[a], f) ? 1 : 0;
      for (std::size_t b = a + 1; b < edges.size(); ++b) c += crosses(edges[a], edges[b]) ? 1 : 0;
    }
    return c;
  }

  // Hill-climb with single-endpoint moves and pairwise swaps; every move
  // keeps the matching size.
  void improve_locally(std::vector<Edge>& edges) const {
    std::size_t current = cost(edges);
    bool improved = true;
    while (improved && current > 0) {
      improved = false;
      std::vector<bool> cand_used(n_cand_, false), ref_used(n_ref_, false);
      for (const auto& f : fixed_) {
        cand_used[f.first] = true;
        ref_used[f.second] = true;
      }
      for (const auto& e : edges) {
        cand_used[e.first] = true;
        ref_used[e.second] = true;
      }
      auto try_edges = [&](std::vector<Edge> trial) {
        std::size_t c = cost(trial);
        if (c < current) {
          edges = std::move(trial);
          current = c;
          return true;
        }
        return false;
      };
      for (std::size_t a = 0; a < edges.size() && !improved; ++a) {
        auto [i, j] = edges[a];
        for (std::size_t j2 : adj_[i]) {
          if (ref_used[j2]) continue;
          auto trial = edges;
          trial[a].second = j2;
          if (try_edges(std::move(trial))) {
            improved = true;
            break;
          }
        }
        if (improved) break;
        for (std::size_t i2 = 0; i2 < n_cand_ && !improved; ++i2) {
          if (cand_used[i2] || !is_eligible(i2, j)) continue;
          auto trial = edges;
          trial[a].first = i2;
          improved = try_edges(std::move(trial));
        }
        for (std::size_t b = a + 1; b < edges.size() && !improved; ++b) {
          auto [k, l] = edges[b];
          if (!is_eligible(i, l) || !is_eligible(k, j)) continue;
          auto trial = edges;
          trial[a].second = l;
          trial[b].second = j;
          improved = try_edges(std::move(trial));
        }
      }
    }
  }

  // Branch and bound over candidate positions in increasing order. Partial
  // crossing counts never decrease, so any branch at or above the incumbent
  // is cut. Gives up (keeping the incumbent) after kNodeBudget nodes.
  void search_exact(std::vector<Edge>& best, std::size_t& best_cost) {
    const std::size_t target = best.size();
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < n_cand_; ++i) {
      if (!adj_[i].empty()) order.push_back(i);
    }
    std::vector<bool> ref_used(n_ref_, false);
    std::vector<Edge> chosen;
    std::size_t nodes = 0;

    std::function<void(std::size_t, std::size_t)> dfs = [&](std::size_t pos, std::size_t partial) {
      if (++nodes > kNodeBudget) return;
      if (chosen.size() == target) {
        if (partial < best_cost) {
          best_cost = partial;
          best = chosen;
        }
        return;
      }
      if (pos == order.size() || chosen.size() + (order.size() - pos) < target) return;
      const std::size_t i = order[pos];
      for (std::size_t j : adj_[i]) {
        if (ref_used[j]) continue;
        Edge e{i, j};
        std::size_t added = 0;
        for (const auto& f : fixed_) added += crosses(e, f) ? 1 : 0;
        for (const auto& c : chosen) added += crosses(e, c) ? 1 : 0;
        if (partial + added >= best_cost) continue;
        ref_used[j] = true;
        chosen.push_back(e);
        dfs(pos + 1, partial + added);
        chosen.pop_back();
        ref_used[j] = false;
        if (best_cost == 0 || nodes > kNodeBudget) return;
      }
      dfs(pos + 1, partial);
    };
    dfs(0, 0);
  }

  std::size_t n_cand_;
  std::size_t n_ref_;
  const std::vector<Edge>& fixed_;
  std::vector<std::vector<std::size_t>> adj_;
};

bool is_english(const std::string& language) {
  std::string lowered = text::lowercase(language);
  return lowered == "en" || lowered.rfind("en-", 0) == 0 || lowered.rfind("en_", 0) == 0;
}

}  // namespace

MeteorResult meteor(const TokenSequence& candidate, const TokenSequence& reference,
                    const MatchResources& resources) {
  if (resources.synonyms && !resources.synonym_table) {
    throw Error(ErrorKind::kMissingResource, "synonym stage enabled without a synonym table");
  }
  MeteorResult result;
  const auto& c = candidate.tokens;
  const auto& r = reference.tokens;
  if (c.empty() || r.empty()) return result;

  std::vector<Edge> fixed;
  auto run_stage = [&](MatchStage stage, std::function<bool(std::size_t, std::size_t)> eligible) {
    StageSolver solver(c.size(), r.size(), std::move(eligible), fixed);
    for (const auto& [i, j] : solver.solve()) {
      fixed.emplace_back(i, j);
      result.alignment.push_back({i, j, stage});
    }
  };

  run_stage(MatchStage::kExact, [&](std::size_t i, std::size_t j) { return c[i] == r[j]; });
  if (resources.stem && is_english(resources.language)) {
    std::vector<std::string> cs, rs;
    for (const auto& t : c) cs.push_back(porter_stem(t));
    for (const auto& t : r) rs.push_back(porter_stem(t));
    run_stage(MatchStage::kStem, [&](std::size_t i, std::size_t j) { return cs[i] == rs[j]; });
  }
  if (resources.synonyms) {
    const auto& table = *resources.synonym_table;
    run_stage(MatchStage::kSynonym,
              [&](std::size_t i, std::size_t j) { return table.related(c[i], r[j]); });
  }

  std::sort(result.alignment.begin(), result.alignment.end(),
            [](const Alignment& a, const Alignment& b) {
              return a.candidate_index < b.candidate_index;
            });
  result.matches = result.alignment.size();
  if (result.matches == 0) return result;

  const double m = static_cast<double>(result.matches);
  result.chunks = count_chunks(result.alignment);
  result.precision = m / static_cast<double>(c.size());
  result.recall = m / static_cast<double>(r.size());
  result.fmean = 10.0 * result.precision * result.recall / (result.recall + 9.0 * result.precision);
  const double frag = static_cast<double>(result.chunks) / m;
  result.penalty = 0.5 * frag * frag * frag;
  result.score = result.fmean * (1.0 - result.penalty);
  return result;
}

}  // namespace newscap::lexical
