#include "newscap/memo.hpp"

#include <map>
#include <mutex>
#include <optional>
#include <set>

namespace newscap::backends {

struct MemoizedBackends::State {
  mutable std::mutex mutex;
  MemoStats stats;
  BackendSet inner;
  std::map<std::string, EmbeddingVector, std::less<>> sentence;
  std::map<std::string, std::vector<EmbeddingVector>, std::less<>> tokens;
  std::map<std::string, EmbeddingVector, std::less<>> visual_text;
  std::map<std::pair<std::string, std::string>, double> nli;
  std::map<std::string, std::vector<RawEntity>, std::less<>> ner;
};

namespace {

using State = MemoizedBackends::State;

// Lookup-or-compute over one cache map. `compute` receives the de-duplicated
// missing keys (in first-seen order) and returns their values positionally.
template <typename Key, typename Value, typename Map, typename Compute>
std::vector<Value> cached_batch(State& state, Map& cache, const std::vector<Key>& keys,
                                Compute compute) {
  std::vector<std::optional<Value>> found(keys.size());
  std::vector<Key> missing;
  {
    std::lock_guard lock(state.mutex);
    std::set<Key> queued;
    for (std::size_t i = 0; i < keys.size(); ++i) {
      auto it = cache.find(keys[i]);
      if (it != cache.end()) {
        found[i] = it->second;
        ++state.stats.hits;
      } else if (queued.insert(keys[i]).second) {
        missing.push_back(keys[i]);
        ++state.stats.misses;
      } else {
        ++state.stats.hits;
      }
    }
  }
  if (!missing.empty()) {
    std::vector<Value> computed = compute(missing);
    std::lock_guard lock(state.mutex);
    for (std::size_t i = 0; i < missing.size(); ++i) cache.emplace(missing[i], computed[i]);
    for (std::size_t i = 0; i < keys.size(); ++i) {
      if (!found[i]) found[i] = cache.find(keys[i])->second;
    }
  }
  std::vector<Value> out;
  out.reserve(keys.size());
  for (auto& v : found) out.push_back(std::move(*v));
  return out;
}

std::vector<std::string> to_keys(std::span<const std::string> texts) {
  return std::vector<std::string>(texts.begin(), texts.end());
}

class MemoSentence final : public SentenceEmbedder {
 public:
  explicit MemoSentence(std::shared_ptr<State> s) : s_(std::move(s)) {}
  BackendDescriptor descriptor() const override { return s_->inner.sentence->descriptor(); }
  EmbeddingVector embed(std::string_view text) const override {
    std::string key(text);
    return embed_batch(std::span<const std::string>(&key, 1)).front();
  }
  std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const override {
    return cached_batch<std::string, EmbeddingVector>(
        *s_, s_->sentence, to_keys(texts),
        [this](const std::vector<std::string>& miss) { return s_->inner.sentence->embed_batch(miss); });
  }

 private:
  std::shared_ptr<State> s_;
};

class MemoTokens final : public TokenEmbedder {
 public:
  explicit MemoTokens(std::shared_ptr<State> s) : s_(std::move(s)) {}
  BackendDescriptor descriptor() const override { return s_->inner.tokens->descriptor(); }
  std::vector<EmbeddingVector> embed_tokens(std::string_view text) const override {
    std::string key(text);
    return embed_tokens_batch(std::span<const std::string>(&key, 1)).front();
  }
  std::vector<std::vector<EmbeddingVector>> embed_tokens_batch(
      std::span<const std::string> texts) const override {
    return cached_batch<std::string, std::vector<EmbeddingVector>>(
        *s_, s_->tokens, to_keys(texts), [this](const std::vector<std::string>& miss) {
          return s_->inner.tokens->embed_tokens_batch(miss);
        });
  }

 private:
  std::shared_ptr<State> s_;
};

class MemoVisualText final : public VisualTextEmbedder {
 public:
  explicit MemoVisualText(std::shared_ptr<State> s) : s_(std::move(s)) {}
  BackendDescriptor descriptor() const override { return s_->inner.visual_text->descriptor(); }
  EmbeddingVector embed_text(std::string_view text) const override {
    std::string key(text);
    return embed_text_batch(std::span<const std::string>(&key, 1)).front();
  }
  std::vector<EmbeddingVector> embed_text_batch(std::span<const std::string> texts) const override {
    return cached_batch<std::string, EmbeddingVector>(
        *s_, s_->visual_text, to_keys(texts), [this](const std::vector<std::string>& miss) {
          return s_->inner.visual_text->embed_text_batch(miss);
        });
  }

 private:
  std::shared_ptr<State> s_;
};

class MemoNli final : public NliScorer {
 public:
  explicit MemoNli(std::shared_ptr<State> s) : s_(std::move(s)) {}
  BackendDescriptor descriptor() const override { return s_->inner.nli->descriptor(); }
  double entailment(std::string_view premise, std::string_view hypothesis) const override {
    NliPair pair{std::string(premise), std::string(hypothesis)};
    return entailment_batch(std::span<const NliPair>(&pair, 1)).front();
  }
  std::vector<double> entailment_batch(std::span<const NliPair> pairs) const override {
    using Key = std::pair<std::string, std::string>;
    std::vector<Key> keys;
    for (const auto& p : pairs) keys.emplace_back(p.premise, p.hypothesis);
    return cached_batch<Key, double>(*s_, s_->nli, keys, [this](const std::vector<Key>& miss) {
      std::vector<NliPair> batch;
      for (const auto& [p, h] : miss) batch.push_back({p, h});
      return s_->inner.nli->entailment_batch(batch);
    });
  }

 private:
  std::shared_ptr<State> s_;
};

class MemoNer final : public EntityExtractor {
 public:
  explicit MemoNer(std::shared_ptr<State> s) : s_(std::move(s)) {}
  BackendDescriptor descriptor() const override { return s_->inner.ner->descriptor(); }
  std::vector<RawEntity> extract(std::string_view text) const override {
    std::string key(text);
    return extract_batch(std::span<const std::string>(&key, 1)).front();
  }
  std::vector<std::vector<RawEntity>> extract_batch(
      std::span<const std::string> texts) const override {
    return cached_batch<std::string, std::vector<RawEntity>>(
        *s_, s_->ner, to_keys(texts),
        [this](const std::vector<std::string>& miss) { return s_->inner.ner->extract_batch(miss); });
  }

 private:
  std::shared_ptr<State> s_;
};

}  // namespace

MemoizedBackends::MemoizedBackends(BackendSet inner) : state_(std::make_shared<State>()) {
  state_->inner = std::move(inner);
  if (state_->inner.sentence) wrapped_.sentence = std::make_shared<MemoSentence>(state_);
  if (state_->inner.tokens) wrapped_.tokens = std::make_shared<MemoTokens>(state_);
  if (state_->inner.visual_text) wrapped_.visual_text = std::make_shared<MemoVisualText>(state_);
  if (state_->inner.nli) wrapped_.nli = std::make_shared<MemoNli>(state_);
  if (state_->inner.ner) wrapped_.ner = std::make_shared<MemoNer>(state_);
}

MemoizedBackends::~MemoizedBackends() = default;

MemoStats MemoizedBackends::stats() const {
  std::lock_guard lock(state_->mutex);
  return state_->stats;
}

FixtureStore MemoizedBackends::export_fixtures() const {
  std::lock_guard lock(state_->mutex);
  FixtureStore store;
  const auto& in = state_->inner;
  if (in.sentence) store.set_identity(BackendKind::kSentenceEmbedder, in.sentence->descriptor().identity);
  if (in.tokens) store.set_identity(BackendKind::kTokenEmbedder, in.tokens->descriptor().identity);
  if (in.visual_text) {
    store.set_identity(BackendKind::kVisualTextEmbedder, in.visual_text->descriptor().identity);
  }
  if (in.nli) store.set_identity(BackendKind::kNliScorer, in.nli->descriptor().identity);
  if (in.ner) store.set_identity(BackendKind::kEntityExtractor, in.ner->descriptor().identity);
  for (const auto& [t, v] : state_->sentence) store.put_sentence(t, v);
  for (const auto& [t, v] : state_->tokens) store.put_tokens(t, v);
  for (const auto& [t, v] : state_->visual_text) store.put_visual_text(t, v);
  for (const auto& [k, v] : state_->nli) store.put_nli(k.first, k.second, v);
  for (const auto& [t, v] : state_->ner) store.put_entities(t, v);
  return store;
}

}  // namespace newscap::backends
