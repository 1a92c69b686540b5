#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "newscap/embedding_vector.hpp"

// Contracts for every model-dependent primitive. Implementations must be
// safe to call from several evaluation workers at once and deterministic for
// a fixed identity and input.
namespace newscap::backends {

enum class BackendKind {
  kSentenceEmbedder,
  kTokenEmbedder,
  kVisualTextEmbedder,
  kNliScorer,
  kEntityExtractor,
};

std::string_view to_string(BackendKind kind);
BackendKind parse_backend_kind(std::string_view name);  // accepts CLI short names too
bool is_embedder(BackendKind kind);

struct BackendDescriptor {
  BackendKind kind = BackendKind::kSentenceEmbedder;
  std::string identity;
  std::size_t dim = 0;  // embedders only

  // Throws Error{kInvalidConfig} on an empty identity or a zero embedder dim.
  void validate() const;
};

struct RawEntity {
  std::string surface;
  std::string type;  // backend label, e.g. PERSON, GPE, DATE

  bool operator==(const RawEntity&) const = default;
};

struct NliPair {
  std::string premise;
  std::string hypothesis;
};

class SentenceEmbedder {
 public:
  virtual ~SentenceEmbedder() = default;
  virtual BackendDescriptor descriptor() const = 0;
  virtual EmbeddingVector embed(std::string_view text) const = 0;
  virtual std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const;
};

class TokenEmbedder {
 public:
  virtual ~TokenEmbedder() = default;
  virtual BackendDescriptor descriptor() const = 0;
  virtual std::vector<EmbeddingVector> embed_tokens(std::string_view text) const = 0;
  virtual std::vector<std::vector<EmbeddingVector>> embed_tokens_batch(
      std::span<const std::string> texts) const;
};

class VisualTextEmbedder {
 public:
  virtual ~VisualTextEmbedder() = default;
  virtual BackendDescriptor descriptor() const = 0;
  virtual EmbeddingVector embed_text(std::string_view text) const = 0;
  virtual std::vector<EmbeddingVector> embed_text_batch(std::span<const std::string> texts) const;
};

class NliScorer {
 public:
  virtual ~NliScorer() = default;
  virtual BackendDescriptor descriptor() const = 0;
  // Entailment probability in [0, 1].
  virtual double entailment(std::string_view premise, std::string_view hypothesis) const = 0;
  virtual std::vector<double> entailment_batch(std::span<const NliPair> pairs) const;
};

class EntityExtractor {
 public:
  virtual ~EntityExtractor() = default;
  virtual BackendDescriptor descriptor() const = 0;
  virtual std::vector<RawEntity> extract(std::string_view text) const = 0;
  virtual std::vector<std::vector<RawEntity>> extract_batch(
      std::span<const std::string> texts) const;
};

// One binding per contract; unset members mean the contract is unbound.
struct BackendSet {
  std::shared_ptr<const SentenceEmbedder> sentence;
  std::shared_ptr<const TokenEmbedder> tokens;
  std::shared_ptr<const VisualTextEmbedder> visual_text;
  std::shared_ptr<const NliScorer> nli;
  std::shared_ptr<const EntityExtractor> ner;
};

}  // namespace newscap::backends
