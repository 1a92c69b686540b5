#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace newscap::lexical {

struct TokenSequence {
  std::vector<std::string> tokens;
  std::string source_text;

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
};

// NFC, lowercase, split on Unicode whitespace, strip leading/trailing
// punctuation from each piece, drop pieces that end up empty.
TokenSequence tokenize(std::string_view text);

std::size_t lcs_length(const TokenSequence& a, const TokenSequence& b);

struct RougeLResult {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t lcs_length = 0;
};

// Sentence-level ROUGE-L with beta = 1. Either side empty scores zero.
RougeLResult rouge_l(const TokenSequence& candidate, const TokenSequence& reference);

// token -> synonyms; lookups are symmetric (a~b if either lists the other).
class SynonymTable {
 public:
  void add(const std::string& token, const std::string& synonym);
  bool related(const std::string& a, const std::string& b) const;
  std::size_t size() const { return table_.size(); }

  static SynonymTable parse_json(std::string_view content);
  static SynonymTable load(const std::filesystem::path& path);

 private:
  std::map<std::string, std::set<std::string>> table_;
};

struct MatchResources {
  bool stem = true;
  bool synonyms = false;
  std::shared_ptr<const SynonymTable> synonym_table;
  // The stem stage only runs for English; other languages pass straight
  // through to the synonym stage.
  std::string language = "en";
};

enum class MatchStage { kExact, kStem, kSynonym };

struct Alignment {
  std::size_t candidate_index = 0;
  std::size_t reference_index = 0;
  MatchStage stage = MatchStage::kExact;
};

struct MeteorResult {
  double score = 0.0;
  std::size_t matches = 0;
  std::size_t chunks = 0;
  double precision = 0.0;
  double recall = 0.0;
  double fmean = 0.0;
  double penalty = 0.0;
  std::vector<Alignment> alignment;  // sorted by candidate_index
};

// METEOR with the original parameters: fmean = 10PR / (R + 9P) and
// penalty = 0.5 * (chunks / matches)^3. Unigrams are aligned stage by stage
// (exact, Porter stem, synonym); each stage picks a maximum-size matching
// over still-unaligned tokens with the fewest crossings against everything
// aligned so far. Throws Error{kMissingResource} if synonyms are requested
// without a table.
MeteorResult meteor(const TokenSequence& candidate, const TokenSequence& reference,
                    const MatchResources& resources = {});

// Number of crossing pairs in an alignment.
std::size_t count_crossings(const std::vector<Alignment>& alignment);

// Number of maximal runs that are contiguous and in the same order on both
// sides.
std::size_t count_chunks(std::vector<Alignment> alignment);

}  // namespace newscap::lexical
