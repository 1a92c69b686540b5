#include "newscap/backends.hpp"

#include <cmath>

#include "newscap/error.hpp"

namespace newscap {

EmbeddingVector::EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw Error(ErrorKind::kDimensionMismatch, "embedding has zero dimensions");
  for (double v : values_) {
    if (!std::isfinite(v)) throw Error(ErrorKind::kBackendError, "embedding has a non-finite value");
  }
}

double EmbeddingVector::norm() const {
  double sum = 0.0;
  for (double v : values_) sum += v * v;
  return std::sqrt(sum);
}

namespace backends {

std::string_view to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::kSentenceEmbedder: return "sentence-embedder";
    case BackendKind::kTokenEmbedder: return "token-embedder";
    case BackendKind::kVisualTextEmbedder: return "visual-text-embedder";
    case BackendKind::kNliScorer: return "nli-scorer";
    case BackendKind::kEntityExtractor: return "entity-extractor";
  }
  return "unknown";
}

BackendKind parse_backend_kind(std::string_view name) {
  if (name == "sentence" || name == "sentence-embedder") return BackendKind::kSentenceEmbedder;
  if (name == "tokens" || name == "token-embedder") return BackendKind::kTokenEmbedder;
  if (name == "visual-text" || name == "visual-text-embedder") {
    return BackendKind::kVisualTextEmbedder;
  }
  if (name == "nli" || name == "nli-scorer") return BackendKind::kNliScorer;
  if (name == "ner" || name == "entity-extractor") return BackendKind::kEntityExtractor;
  throw Error(ErrorKind::kInvalidConfig, "unknown backend kind '" + std::string(name) + "'");
}

bool is_embedder(BackendKind kind) {
  return kind == BackendKind::kSentenceEmbedder || kind == BackendKind::kTokenEmbedder ||
         kind == BackendKind::kVisualTextEmbedder;
}

void BackendDescriptor::validate() const {
  if (identity.empty()) throw Error(ErrorKind::kInvalidConfig, "backend identity is empty");
  if (is_embedder(kind) && dim == 0) {
    throw Error(ErrorKind::kInvalidConfig, identity + ": embedder declares dim 0");
  }
}

std::vector<EmbeddingVector> SentenceEmbedder::embed_batch(
    std::span<const std::string> texts) const {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed(t));
  return out;
}

std::vector<std::vector<EmbeddingVector>> TokenEmbedder::embed_tokens_batch(
    std::span<const std::string> texts) const {
  std::vector<std::vector<EmbeddingVector>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed_tokens(t));
  return out;
}

std::vector<EmbeddingVector> VisualTextEmbedder::embed_text_batch(
    std::span<const std::string> texts) const {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed_text(t));
  return out;
}

std::vector<double> NliScorer::entailment_batch(std::span<const NliPair> pairs) const {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(entailment(p.premise, p.hypothesis));
  return out;
}

std::vector<std::vector<RawEntity>> EntityExtractor::extract_batch(
    std::span<const std::string> texts) const {
  std::vector<std::vector<RawEntity>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(extract(t));
  return out;
}

}  // namespace backends
}  // namespace newscap
