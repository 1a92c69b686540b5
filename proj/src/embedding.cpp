#include "newscap/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "newscap/error.hpp"

namespace newscap::embedding {

double cosine(const EmbeddingVector& u, const EmbeddingVector& v) {
  if (u.dim() != v.dim()) {
    throw Error(ErrorKind::kDimensionMismatch,
                "dims " + std::to_string(u.dim()) + " and " + std::to_string(v.dim()));
  }
  double dot = 0.0;
  double uu = 0.0;
  double vv = 0.0;
  for (std::size_t i = 0; i < u.dim(); ++i) {
    dot += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  if (uu == 0.0 || vv == 0.0) throw Error(ErrorKind::kZeroVector, "cosine of a zero vector");
  return std::clamp(dot / (std::sqrt(uu) * std::sqrt(vv)), -1.0, 1.0);
}

double text_similarity(std::string_view candidate, std::string_view reference,
                       const backends::SentenceEmbedder& embedder) {
  return cosine(embedder.embed(candidate), embedder.embed(reference));
}

BertScoreResult bert_score(std::span<const EmbeddingVector> candidate,
                           std::span<const EmbeddingVector> reference) {
  if (candidate.empty() || reference.empty()) {
    throw Error(ErrorKind::kEmptyTokenization, "BERTScore needs at least one token per side");
  }
  std::vector<double> best_for_ref(reference.size(), -1.0);
  double precision_sum = 0.0;
  for (const auto& c : candidate) {
    double best = -1.0;
    for (std::size_t j = 0; j < reference.size(); ++j) {
      double s = cosine(c, reference[j]);
      best = std::max(best, s);
      best_for_ref[j] = std::max(best_for_ref[j], s);
    }
    precision_sum += best;
  }
  double recall_sum = 0.0;
  for (double s : best_for_ref) recall_sum += s;

  BertScoreResult result;
  result.precision = precision_sum / static_cast<double>(candidate.size());
  result.recall = recall_sum / static_cast<double>(reference.size());
  double denom = result.precision + result.recall;
  result.f1 = denom > 0.0 ? 2.0 * result.precision * result.recall / denom : 0.0;
  return result;
}

BertScoreResult bert_score(std::string_view candidate, std::string_view reference,
                           const backends::TokenEmbedder& embedder) {
  auto c = embedder.embed_tokens(candidate);
  auto r = embedder.embed_tokens(reference);
  return bert_score(std::span<const EmbeddingVector>(c), std::span<const EmbeddingVector>(r));
}

std::vector<std::size_t> select_frame_indices(std::size_t n, std::size_t budget) {
  if (budget == 0) throw Error(ErrorKind::kInvalidConfig, "frame budget must be positive");
  std::vector<std::size_t> indices;
  if (n <= budget) {
    for (std::size_t i = 0; i < n; ++i) indices.push_back(i);
    return indices;
  }
  if (budget == 1) return {0};
  for (std::size_t i = 0; i < budget; ++i) indices.push_back(i * (n - 1) / (budget - 1));
  return indices;
}

double clip_score(const EmbeddingVector& text_embedding, std::span<const EmbeddingVector> frames,
                  std::size_t frame_budget) {
  if (frames.empty()) throw Error(ErrorKind::kNoFrames, "clip has no frame embeddings");
  double sum = 0.0;
  auto indices = select_frame_indices(frames.size(), frame_budget);
  for (std::size_t i : indices) sum += cosine(frames[i], text_embedding);
  return sum / static_cast<double>(indices.size());
}

double clip_score(std::string_view caption, std::span<const EmbeddingVector> frames,
                  const backends::VisualTextEmbedder& embedder, std::size_t frame_budget) {
  if (frames.empty()) throw Error(ErrorKind::kNoFrames, "clip has no frame embeddings");
  return clip_score(embedder.embed_text(caption), frames, frame_budget);
}

MrrTable mrr(const std::map<ClipModelKey, double>& similarities) {
  std::set<std::string> clips;
  std::set<std::string> models;
  for (const auto& [key, sim] : similarities) {
    clips.insert(key.first);
    models.insert(key.second);
  }
  std::vector<std::string> missing;
  for (const auto& clip : clips) {
    for (const auto& model : models) {
      if (!similarities.contains({clip, model})) missing.push_back("(" + clip + ", " + model + ")");
    }
  }
  if (!missing.empty()) {
    std::string message = "missing similarities:";
    for (const auto& m : missing) message += " " + m;
    throw Error(ErrorKind::kIncompleteMatrix, message);
  }

  MrrTable table;
  std::map<std::string, double> rr_sum;
  for (const auto& clip : clips) {
    std::vector<std::pair<double, std::string>> row;
    for (const auto& model : models) row.emplace_back(similarities.at({clip, model}), model);
    std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    for (std::size_t r = 0; r < row.size(); ++r) {
      table.per_clip_ranks[{clip, row[r].second}] = static_cast<int>(r + 1);
    }
  }
  // Accumulate in sorted clip order for every model.
  for (const auto& model : models) {
    double sum = 0.0;
    for (const auto& clip : clips) sum += 1.0 / table.per_clip_ranks.at({clip, model});
    table.per_model_mrr[model] = sum / static_cast<double>(clips.size());
  }
  return table;
}

std::vector<std::size_t> random_derangement(std::size_t n, std::uint64_t seed) {
  if (n < 2) throw Error(ErrorKind::kTooFewClips, "a derangement needs at least two elements");
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> perm(n);
  while (true) {
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    for (std::size_t i = n - 1; i > 0; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i);
      std::swap(perm[i], perm[pick(rng)]);
    }
    bool fixed_point = false;
    for (std::size_t i = 0; i < n && !fixed_point; ++i) fixed_point = perm[i] == i;
    if (!fixed_point) return perm;
  }
}

namespace {

double mean(const std::vector<double>& xs) {
  double sum = 0.0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

double sample_variance(const std::vector<double>& xs, double mu) {
  if (xs.size() < 2) return 0.0;
  double sum = 0.0;
  for (double x : xs) sum += (x - mu) * (x - mu);
  return sum / static_cast<double>(xs.size() - 1);
}

}  // namespace

ShuffleTestResult shuffled_pairs_test(const std::vector<corpus::ClipRecord>& clips,
                                      const std::vector<corpus::CaptionRecord>& captions,
                                      const backends::SentenceEmbedder& embedder,
                                      std::uint64_t seed) {
  std::map<std::string, const corpus::ClipRecord*> by_id;
  for (const auto& clip : clips) by_id[clip.clip_id] = &clip;

  ShuffleTestResult result;
  result.seed = seed;
  std::map<std::string, const corpus::CaptionRecord*> caption_by_clip;
  for (const auto& c : captions) {
    if (result.model_id.empty()) result.model_id = c.model_id;
    if (c.model_id != result.model_id) {
      throw Error(ErrorKind::kInvalidConfig, "shuffle test expects captions from one model");
    }
    if (by_id.contains(c.clip_id)) caption_by_clip[c.clip_id] = &c;
  }
  if (caption_by_clip.size() < 2) {
    throw Error(ErrorKind::kTooFewClips, "shuffle test needs at least two captioned clips");
  }

  std::vector<EmbeddingVector> caption_vecs;
  std::vector<EmbeddingVector> reference_vecs;
  for (const auto& [clip_id, caption] : caption_by_clip) {
    result.clip_ids.push_back(clip_id);
    caption_vecs.push_back(embedder.embed(caption->caption_text));
    reference_vecs.push_back(embedder.embed(by_id.at(clip_id)->reference_description));
  }

  const std::size_t n = result.clip_ids.size();
  auto perm = random_derangement(n, seed);
  for (std::size_t i = 0; i < n; ++i) {
    result.paired_clip_ids.push_back(result.clip_ids[perm[i]]);
    result.original_similarities.push_back(cosine(caption_vecs[i], reference_vecs[i]));
    result.shuffled_similarities.push_back(cosine(caption_vecs[i], reference_vecs[perm[i]]));
  }

  double mu_orig = mean(result.original_similarities);
  double mu_shuf = mean(result.shuffled_similarities);
  result.mean_gap = mu_orig - mu_shuf;
  double pooled = std::sqrt((sample_variance(result.original_similarities, mu_orig) +
                             sample_variance(result.shuffled_similarities, mu_shuf)) /
                            2.0);
  if (pooled > 0.0) result.effect_size = result.mean_gap / pooled;
  return result;
}

}  // namespace newscap::embedding
