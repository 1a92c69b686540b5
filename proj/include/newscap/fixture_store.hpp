#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "newscap/backends.hpp"

namespace newscap::backends {

// Pre-recorded backend responses keyed by text hash (FNV-1a 64 over the NFC
// text, see text::text_hash). NLI entries are keyed "<premise>:<hypothesis>"
// hashes. Serialized as JSON-lines, one record per (kind, key), in sorted
// order so identical stores produce identical files.
class FixtureStore {
 public:
  void put_sentence(std::string_view text, const EmbeddingVector& v);
  void put_visual_text(std::string_view text, const EmbeddingVector& v);
  void put_tokens(std::string_view text, const std::vector<EmbeddingVector>& vs);
  void put_nli(std::string_view premise, std::string_view hypothesis, double entailment);
  void put_entities(std::string_view text, std::vector<RawEntity> entities);

  std::optional<EmbeddingVector> sentence(std::string_view text) const;
  std::optional<EmbeddingVector> visual_text(std::string_view text) const;
  std::optional<std::vector<EmbeddingVector>> tokens(std::string_view text) const;
  std::optional<double> nli(std::string_view premise, std::string_view hypothesis) const;
  std::optional<std::vector<RawEntity>> entities(std::string_view text) const;

  // Shared dimension of stored vectors of a kind; 0 when none are stored.
  std::size_t dim(BackendKind kind) const;
  std::size_t size() const;

  // Identity recorded for a kind ("fixture" if unset).
  std::string identity(BackendKind kind) const;
  void set_identity(BackendKind kind, std::string identity);

  std::string dump() const;
  void save(const std::filesystem::path& path) const;
  static FixtureStore parse(std::string_view content);
  static FixtureStore load(const std::filesystem::path& path);

  static std::string nli_key(std::string_view premise, std::string_view hypothesis);

  bool operator==(const FixtureStore&) const = default;

 private:
  void check_dim(BackendKind kind, std::size_t dim);

  std::map<std::string, std::vector<double>> sentence_;
  std::map<std::string, std::vector<double>> visual_text_;
  std::map<std::string, std::vector<std::vector<double>>> tokens_;
  std::map<std::string, double> nli_;
  std::map<std::string, std::vector<RawEntity>> entities_;
  std::map<std::string, std::size_t> dims_;
  std::map<std::string, std::string> identities_;
};

class FixtureSentenceEmbedder final : public SentenceEmbedder {
 public:
  explicit FixtureSentenceEmbedder(std::shared_ptr<const FixtureStore> store);
  BackendDescriptor descriptor() const override;
  EmbeddingVector embed(std::string_view text) const override;

 private:
  std::shared_ptr<const FixtureStore> store_;
};

class FixtureTokenEmbedder final : public TokenEmbedder {
 public:
  explicit FixtureTokenEmbedder(std::shared_ptr<const FixtureStore> store);
  BackendDescriptor descriptor() const override;
  std::vector<EmbeddingVector> embed_tokens(std::string_view text) const override;

 private:
  std::shared_ptr<const FixtureStore> store_;
};

class FixtureVisualTextEmbedder final : public VisualTextEmbedder {
 public:
  explicit FixtureVisualTextEmbedder(std::shared_ptr<const FixtureStore> store);
  BackendDescriptor descriptor() const override;
  EmbeddingVector embed_text(std::string_view text) const override;

 private:
  std::shared_ptr<const FixtureStore> store_;
};

class FixtureNliScorer final : public NliScorer {
 public:
  explicit FixtureNliScorer(std::shared_ptr<const FixtureStore> store);
  BackendDescriptor descriptor() const override;
  double entailment(std::string_view premise, std::string_view hypothesis) const override;

 private:
  std::shared_ptr<const FixtureStore> store_;
};

class FixtureEntityExtractor final : public EntityExtractor {
 public:
  explicit FixtureEntityExtractor(std::shared_ptr<const FixtureStore> store);
  BackendDescriptor descriptor() const override;
  std::vector<RawEntity> extract(std::string_view text) const override;

 private:
  std::shared_ptr<const FixtureStore> store_;
};

// Binds every contract to the same store.
BackendSet fixture_backends(std::shared_ptr<const FixtureStore> store);

}  // namespace newscap::backends
