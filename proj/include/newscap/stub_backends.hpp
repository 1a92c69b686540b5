#pragma once

#include <cstdint>
#include <filesystem>
#include <regex>
#include <string>
#include <vector>

#include "newscap/backends.hpp"

// Model-free backends for tests and dry runs. Outputs depend only on the
// NFC text, the seed and the dimension.
namespace newscap::backends {

// Seeded pseudo-random unit vectors keyed by text hash.
class HashEmbedder final : public SentenceEmbedder, public VisualTextEmbedder {
 public:
  HashEmbedder(std::size_t dim, std::uint64_t seed, BackendKind kind = BackendKind::kSentenceEmbedder);

  BackendDescriptor descriptor() const override;
  EmbeddingVector embed(std::string_view text) const override;
  EmbeddingVector embed_text(std::string_view text) const override { return embed(text); }

 private:
  std::size_t dim_;
  std::uint64_t seed_;
  BackendKind kind_;
};

// One hash vector per token of lexical::tokenize(text).
class HashTokenEmbedder final : public TokenEmbedder {
 public:
  HashTokenEmbedder(std::size_t dim, std::uint64_t seed);
  BackendDescriptor descriptor() const override;
  std::vector<EmbeddingVector> embed_tokens(std::string_view text) const override;

 private:
  HashEmbedder token_embedder_;
  std::size_t dim_;
  std::uint64_t seed_;
};

// Same unit vector for every input.
class ConstantEmbedder final : public SentenceEmbedder, public VisualTextEmbedder {
 public:
  explicit ConstantEmbedder(std::size_t dim, BackendKind kind = BackendKind::kSentenceEmbedder);
  BackendDescriptor descriptor() const override;
  EmbeddingVector embed(std::string_view text) const override;
  EmbeddingVector embed_text(std::string_view text) const override { return embed(text); }

 private:
  std::size_t dim_;
  BackendKind kind_;
};

// Uniform [0, 1) entailment keyed by the (premise, hypothesis) hash.
class HashNliScorer final : public NliScorer {
 public:
  explicit HashNliScorer(std::uint64_t seed);
  BackendDescriptor descriptor() const override;
  double entailment(std::string_view premise, std::string_view hypothesis) const override;

 private:
  std::uint64_t seed_;
};

// Regex gazetteer: each line is "TYPE<TAB>pattern" (ECMAScript,
// case-insensitive). Every match becomes an entity with the matched text as
// its surface, ordered by position then by gazetteer line.
class GazetteerEntityExtractor final : public EntityExtractor {
 public:
  struct Rule {
    std::string type;
    std::string pattern;
  };

  explicit GazetteerEntityExtractor(std::vector<Rule> rules, std::string identity = "gazetteer");
  static GazetteerEntityExtractor parse(std::string_view content, std::string identity = "gazetteer");
  static GazetteerEntityExtractor load(const std::filesystem::path& path);

  BackendDescriptor descriptor() const override;
  std::vector<RawEntity> extract(std::string_view text) const override;

 private:
  std::vector<Rule> rules_;
  std::vector<std::regex> compiled_;
  std::string identity_;
};

// Unit vector for a seed: what HashEmbedder produces for a hashed key.
std::vector<double> seeded_unit_vector(std::uint64_t key, std::size_t dim);

}  // namespace newscap::backends
