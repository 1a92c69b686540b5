#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "newscap/backends.hpp"
#include "newscap/corpus.hpp"
#include "newscap/embedding_vector.hpp"

namespace newscap::embedding {

// dot(u, v) / (|u| |v|) clamped to [-1, 1].
// Throws Error{kDimensionMismatch} or Error{kZeroVector}.
double cosine(const EmbeddingVector& u, const EmbeddingVector& v);

double text_similarity(std::string_view candidate, std::string_view reference,
                       const backends::SentenceEmbedder& embedder);

struct BertScoreResult {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Greedy max-cosine alignment, no IDF weighting and no baseline rescaling.
BertScoreResult bert_score(std::span<const EmbeddingVector> candidate,
                           std::span<const EmbeddingVector> reference);
BertScoreResult bert_score(std::string_view candidate, std::string_view reference,
                           const backends::TokenEmbedder& embedder);

inline constexpr std::size_t kDefaultFrameBudget = 8;

// floor(i * (n - 1) / (budget - 1)) for i in [0, budget); identity when
// n <= budget. Always keeps the first and last frame when budget >= 2.
std::vector<std::size_t> select_frame_indices(std::size_t n, std::size_t budget);

// Mean cosine between the caption's text embedding and the (subsampled) frames.
double clip_score(const EmbeddingVector& text_embedding, std::span<const EmbeddingVector> frames,
                  std::size_t frame_budget = kDefaultFrameBudget);
double clip_score(std::string_view caption, std::span<const EmbeddingVector> frames,
                  const backends::VisualTextEmbedder& embedder,
                  std::size_t frame_budget = kDefaultFrameBudget);

using ClipModelKey = std::pair<std::string, std::string>;  // (clip_id, model_id)

struct MrrTable {
  std::map<std::string, double> per_model_mrr;
  std::map<ClipModelKey, int> per_clip_ranks;
};

// Per clip, models are ordered by similarity (descending, ties by ascending
// model_id) and each model scores 1/rank. Throws Error{kIncompleteMatrix}
// if any (clip, model) combination is missing.
MrrTable mrr(const std::map<ClipModelKey, double>& similarities);

// Uniformly random permutation of [0, n) with no fixed points, by rejection.
std::vector<std::size_t> random_derangement(std::size_t n, std::uint64_t seed);

struct ShuffleTestResult {
  std::string model_id;
  std::vector<std::string> clip_ids;          // sorted
  std::vector<std::string> paired_clip_ids;   // reference used in the shuffled pairing
  std::vector<double> original_similarities;
  std::vector<double> shuffled_similarities;
  double mean_gap = 0.0;
  // Gap over the pooled standard deviation; empty when both lists are constant.
  std::optional<double> effect_size;
  std::uint64_t seed = 0;

  bool operator==(const ShuffleTestResult&) const = default;
};

// Compares caption/reference similarities against a deranged pairing.
// `captions` must all come from one model; clips without a caption are
// skipped. Throws Error{kTooFewClips} when fewer than two pairs remain.
ShuffleTestResult shuffled_pairs_test(const std::vector<corpus::ClipRecord>& clips,
                                      const std::vector<corpus::CaptionRecord>& captions,
                                      const backends::SentenceEmbedder& embedder,
                                      std::uint64_t seed);

}  // namespace newscap::embedding
