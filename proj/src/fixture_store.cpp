#include "newscap/fixture_store.hpp"

#include <json.hpp>

#include "newscap/corpus.hpp"
#include "newscap/error.hpp"
#include "newscap/text.hpp"

namespace newscap::backends {

using nlohmann::json;

namespace {

std::vector<double> values_of(const EmbeddingVector& v) {
  return std::vector<double>(v.values().begin(), v.values().end());
}

[[noreturn]] void miss(BackendKind kind, const std::string& key) {
  throw Error(ErrorKind::kFixtureMiss,
              std::string(to_string(kind)) + " fixture has no entry for text hash " + key);
}

}  // namespace

std::string FixtureStore::nli_key(std::string_view premise, std::string_view hypothesis) {
  return text::text_hash(premise) + ":" + text::text_hash(hypothesis);
}

void FixtureStore::check_dim(BackendKind kind, std::size_t dim) {
  auto [it, inserted] = dims_.emplace(std::string(to_string(kind)), dim);
  if (!inserted && it->second != dim) {
    throw Error(ErrorKind::kDimensionMismatch, std::string(to_string(kind)) + " fixture has dim " +
                                                   std::to_string(it->second) + ", got " +
                                                   std::to_string(dim));
  }
}

void FixtureStore::put_sentence(std::string_view t, const EmbeddingVector& v) {
  check_dim(BackendKind::kSentenceEmbedder, v.dim());
  sentence_[text::text_hash(t)] = values_of(v);
}

void FixtureStore::put_visual_text(std::string_view t, const EmbeddingVector& v) {
  check_dim(BackendKind::kVisualTextEmbedder, v.dim());
  visual_text_[text::text_hash(t)] = values_of(v);
}

void FixtureStore::put_tokens(std::string_view t, const std::vector<EmbeddingVector>& vs) {
  std::vector<std::vector<double>> rows;
  for (const auto& v : vs) {
    check_dim(BackendKind::kTokenEmbedder, v.dim());
    rows.push_back(values_of(v));
  }
  tokens_[text::text_hash(t)] = std::move(rows);
}

void FixtureStore::put_nli(std::string_view premise, std::string_view hypothesis, double e) {
  nli_[nli_key(premise, hypothesis)] = e;
}

void FixtureStore::put_entities(std::string_view t, std::vector<RawEntity> entities) {
  entities_[text::text_hash(t)] = std::move(entities);
}

std::optional<EmbeddingVector> FixtureStore::sentence(std::string_view t) const {
  auto it = sentence_.find(text::text_hash(t));
  if (it == sentence_.end()) return std::nullopt;
  return EmbeddingVector(it->second);
}

std::optional<EmbeddingVector> FixtureStore::visual_text(std::string_view t) const {
  auto it = visual_text_.find(text::text_hash(t));
  if (it == visual_text_.end()) return std::nullopt;
  return EmbeddingVector(it->second);
}

std::optional<std::vector<EmbeddingVector>> FixtureStore::tokens(std::string_view t) const {
  auto it = tokens_.find(text::text_hash(t));
  if (it == tokens_.end()) return std::nullopt;
  std::vector<EmbeddingVector> out;
  for (const auto& row : it->second) out.emplace_back(row);
  return out;
}

std::optional<double> FixtureStore::nli(std::string_view premise, std::string_view hypothesis) const {
  auto it = nli_.find(nli_key(premise, hypothesis));
  if (it == nli_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::vector<RawEntity>> FixtureStore::entities(std::string_view t) const {
  auto it = entities_.find(text::text_hash(t));
  if (it == entities_.end()) return std::nullopt;
  return it->second;
}

std::size_t FixtureStore::dim(BackendKind kind) const {
  auto it = dims_.find(std::string(to_string(kind)));
  return it == dims_.end() ? 0 : it->second;
}

std::size_t FixtureStore::size() const {
  return sentence_.size() + visual_text_.size() + tokens_.size() + nli_.size() + entities_.size();
}

std::string FixtureStore::identity(BackendKind kind) const {
  auto it = identities_.find(std::string(to_string(kind)));
  return it == identities_.end() ? "fixture" : it->second;
}

void FixtureStore::set_identity(BackendKind kind, std::string identity) {
  identities_[std::string(to_string(kind))] = std::move(identity);
}

std::string FixtureStore::dump() const {
  std::string out;
  auto emit = [&out](json record) { out += record.dump() + "\n"; };
  if (!identities_.empty()) emit(json{{"kind", "meta"}, {"identity", identities_}});
  for (const auto& [key, v] : sentence_) {
    emit({{"kind", "sentence-embedder"}, {"key", key}, {"payload", {{"vector", v}}}});
  }
  for (const auto& [key, v] : tokens_) {
    emit({{"kind", "token-embedder"}, {"key", key}, {"payload", {{"vectors", v}}}});
  }
  for (const auto& [key, v] : visual_text_) {
    emit({{"kind", "visual-text-embedder"}, {"key", key}, {"payload", {{"vector", v}}}});
  }
  for (const auto& [key, e] : nli_) {
    emit({{"kind", "nli-scorer"}, {"key", key}, {"payload", {{"entailment", e}}}});
  }
  for (const auto& [key, ents] : entities_) {
    json arr = json::array();
    for (const auto& e : ents) arr.push_back({{"surface", e.surface}, {"type", e.type}});
    emit({{"kind", "entity-extractor"}, {"key", key}, {"payload", {{"entities", arr}}}});
  }
  return out;
}

void FixtureStore::save(const std::filesystem::path& path) const {
  corpus::write_file(path, dump());
}

FixtureStore FixtureStore::parse(std::string_view content) {
  FixtureStore store;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    auto where = [&] { return "fixture line " + std::to_string(line_no); };
    json rec = json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.is_object() || !rec.contains("kind")) {
      throw Error(ErrorKind::kMalformedFile, where() + " is not a fixture record");
    }
    try {
      const std::string kind_name = rec.at("kind").get<std::string>();
      if (kind_name == "meta") {
        for (const auto& [k, v] : rec.at("identity").items()) {
          store.identities_[k] = v.get<std::string>();
        }
        continue;
      }
      const std::string key = rec.at("key").get<std::string>();
      const json& payload = rec.at("payload");
      switch (parse_backend_kind(kind_name)) {
        case BackendKind::kSentenceEmbedder: {
          EmbeddingVector v(payload.at("vector").get<std::vector<double>>());
          store.check_dim(BackendKind::kSentenceEmbedder, v.dim());
          store.sentence_[key] = values_of(v);
          break;
        }
        case BackendKind::kVisualTextEmbedder: {
          EmbeddingVector v(payload.at("vector").get<std::vector<double>>());
          store.check_dim(BackendKind::kVisualTextEmbedder, v.dim());
          store.visual_text_[key] = values_of(v);
          break;
        }
        case BackendKind::kTokenEmbedder: {
          auto rows = payload.at("vectors").get<std::vector<std::vector<double>>>();
          for (const auto& row : rows) {
            store.check_dim(BackendKind::kTokenEmbedder, EmbeddingVector(row).dim());
          }
          store.tokens_[key] = std::move(rows);
          break;
        }
        case BackendKind::kNliScorer:
          store.nli_[key] = payload.at("entailment").get<double>();
          break;
        case BackendKind::kEntityExtractor: {
          std::vector<RawEntity> ents;
          for (const auto& e : payload.at("entities")) {
            ents.push_back({e.at("surface").get<std::string>(), e.at("type").get<std::string>()});
          }
          store.entities_[key] = std::move(ents);
          break;
        }
      }
    } catch (const json::exception& e) {
      throw Error(ErrorKind::kMalformedFile, where() + ": " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorKind::kMalformedFile, where() + ": " + e.what());
    }
  }
  return store;
}

FixtureStore FixtureStore::load(const std::filesystem::path& path) {
  return parse(corpus::read_file(path));
}

FixtureSentenceEmbedder::FixtureSentenceEmbedder(std::shared_ptr<const FixtureStore> store)
    : store_(std::move(store)) {}

BackendDescriptor FixtureSentenceEmbedder::descriptor() const {
  return {BackendKind::kSentenceEmbedder, store_->identity(BackendKind::kSentenceEmbedder),
          store_->dim(BackendKind::kSentenceEmbedder)};
}

EmbeddingVector FixtureSentenceEmbedder::embed(std::string_view t) const {
  if (auto v = store_->sentence(t)) return *v;
  miss(BackendKind::kSentenceEmbedder, text::text_hash(t));
}

FixtureTokenEmbedder::FixtureTokenEmbedder(std::shared_ptr<const FixtureStore> store)
    : store_(std::move(store)) {}

BackendDescriptor FixtureTokenEmbedder::descriptor() const {
  return {BackendKind::kTokenEmbedder, store_->identity(BackendKind::kTokenEmbedder),
          store_->dim(BackendKind::kTokenEmbedder)};
}

std::vector<EmbeddingVector> FixtureTokenEmbedder::embed_tokens(std::string_view t) const {
  if (auto v = store_->tokens(t)) return *v;
  miss(BackendKind::kTokenEmbedder, text::text_hash(t));
}

FixtureVisualTextEmbedder::FixtureVisualTextEmbedder(std::shared_ptr<const FixtureStore> store)
    : store_(std::move(store)) {}

BackendDescriptor FixtureVisualTextEmbedder::descriptor() const {
  return {BackendKind::kVisualTextEmbedder, store_->identity(BackendKind::kVisualTextEmbedder),
          store_->dim(BackendKind::kVisualTextEmbedder)};
}

EmbeddingVector FixtureVisualTextEmbedder::embed_text(std::string_view t) const {
  if (auto v = store_->visual_text(t)) return *v;
  miss(BackendKind::kVisualTextEmbedder, text::text_hash(t));
}

FixtureNliScorer::FixtureNliScorer(std::shared_ptr<const FixtureStore> store)
    : store_(std::move(store)) {}

BackendDescriptor FixtureNliScorer::descriptor() const {
  return {BackendKind::kNliScorer, store_->identity(BackendKind::kNliScorer), 0};
}

double FixtureNliScorer::entailment(std::string_view premise, std::string_view hypothesis) const {
  if (auto e = store_->nli(premise, hypothesis)) return *e;
  miss(BackendKind::kNliScorer, FixtureStore::nli_key(premise, hypothesis));
}

FixtureEntityExtractor::FixtureEntityExtractor(std::shared_ptr<const FixtureStore> store)
    : store_(std::move(store)) {}

BackendDescriptor FixtureEntityExtractor::descriptor() const {
  return {BackendKind::kEntityExtractor, store_->identity(BackendKind::kEntityExtractor), 0};
}

std::vector<RawEntity> FixtureEntityExtractor::extract(std::string_view t) const {
  if (auto e = store_->entities(t)) return *e;
  miss(BackendKind::kEntityExtractor, text::text_hash(t));
}

BackendSet fixture_backends(std::shared_ptr<const FixtureStore> store) {
  BackendSet set;
  set.sentence = std::make_shared<FixtureSentenceEmbedder>(store);
  set.tokens = std::make_shared<FixtureTokenEmbedder>(store);
  set.visual_text = std::make_shared<FixtureVisualTextEmbedder>(store);
  set.nli = std::make_shared<FixtureNliScorer>(store);
  set.ner = std::make_shared<FixtureEntityExtractor>(store);
  return set;
}

}  // namespace newscap::backends
