#pragma once

// Reference implementations and fixtures shared by the test binaries. The
// oracles here are deliberately naive and share no code with the library.

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "newscap/backends.hpp"
#include "newscap/corpus.hpp"
#include "newscap/fidelity.hpp"
#include "newscap/fixture_store.hpp"
#include "newscap/harness.hpp"
#include "newscap/stub_backends.hpp"

namespace testsupport {

// ---- LCS / ROUGE-L ----------------------------------------------------------

inline std::size_t naive_lcs(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::vector<std::size_t>> dp(a.size() + 1, std::vector<std::size_t>(b.size() + 1, 0));
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      dp[i][j] = a[i - 1] == b[j - 1] ? dp[i - 1][j - 1] + 1 : std::max(dp[i - 1][j], dp[i][j - 1]);
    }
  }
  return dp[a.size()][b.size()];
}

struct RougeOracle {
  double p = 0, r = 0, f = 0;
};

inline RougeOracle naive_rouge(const std::vector<std::string>& cand, const std::vector<std::string>& ref) {
  if (cand.empty() || ref.empty()) return {};
  double l = static_cast<double>(naive_lcs(cand, ref));
  RougeOracle o;
  o.p = l / static_cast<double>(cand.size());
  o.r = l / static_cast<double>(ref.size());
  o.f = (o.p + o.r) == 0 ? 0.0 : 2 * o.p * o.r / (o.p + o.r);
  return o;
}

inline std::vector<std::string> random_tokens(std::mt19937_64& rng, std::size_t max_len, int vocab) {
  std::uniform_int_distribution<std::size_t> len(0, max_len);
  std::uniform_int_distribution<int> word(0, vocab - 1);
  std::vector<std::string> out(len(rng));
  for (auto& t : out) t = "w" + std::to_string(word(rng));
  return out;
}

inline std::string join(const std::vector<std::string>& tokens, const std::string& sep = " ") {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += sep;
    out += tokens[i];
  }
  return out;
}

// ---- token_ratio (ASCII inputs) -----------------------------------------------

inline std::size_t naive_indel(const std::string& a, const std::string& b) {
  // indel distance = |a| + |b| - 2 * LCS over characters
  std::vector<std::vector<std::size_t>> dp(a.size() + 1, std::vector<std::size_t>(b.size() + 1, 0));
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      dp[i][j] = a[i - 1] == b[j - 1] ? dp[i - 1][j - 1] + 1 : std::max(dp[i - 1][j], dp[i][j - 1]);
    }
  }
  return a.size() + b.size() - 2 * dp[a.size()][b.size()];
}

inline double naive_ratio(const std::string& a, const std::string& b) {
  if (a.empty() && b.empty()) return 100.0;
  double total = static_cast<double>(a.size() + b.size());
  return 100.0 * (1.0 - static_cast<double>(naive_indel(a, b)) / total);
}

inline std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ' ' || c == '\t' || c == '\n') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

inline double naive_token_sort(const std::string& a, const std::string& b) {
  auto ta = split_ws(a), tb = split_ws(b);
  std::sort(ta.begin(), ta.end());
  std::sort(tb.begin(), tb.end());
  return naive_ratio(join(ta), join(tb));
}

inline double naive_token_set(const std::string& a, const std::string& b) {
  auto ta = split_ws(a), tb = split_ws(b);
  std::set<std::string> sa(ta.begin(), ta.end()), sb(tb.begin(), tb.end());
  if (sa.empty() || sb.empty()) return 0.0;
  std::vector<std::string> inter, da, db;
  std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(inter));
  std::set_difference(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(da));
  std::set_difference(sb.begin(), sb.end(), sa.begin(), sa.end(), std::back_inserter(db));
  if (!inter.empty() && (da.empty() || db.empty())) return 100.0;
  std::string t0 = join(inter);
  auto aug = [&](const std::vector<std::string>& d) {
    return t0.empty() ? join(d) : t0 + " " + join(d);
  };
  std::string t1 = aug(da), t2 = aug(db);
  return std::max({naive_ratio(t0, t1), naive_ratio(t0, t2), naive_ratio(t1, t2)});
}

inline double naive_token_ratio(const std::string& a, const std::string& b) {
  return std::max(naive_token_sort(a, b), naive_token_set(a, b));
}

// ---- synthetic corpus ---------------------------------------------------------

inline const char* kGazetteer =
    "PERSON\tgabriel boric\n"
    "PERSON\tmalcolm metcalf\n"
    "PERSON\tdaniel medina\n"
    "GPE\tsantiago\n"
    "GPE\tlondon\n"
    "GPE\tchile\n"
    "ORG\tbbc\n"
    "ORG\tcarabineros\n";

struct SyntheticCorpus {
  std::vector<newscap::corpus::ClipRecord> clips;
  std::vector<newscap::corpus::CaptionRecord> captions;
  std::shared_ptr<newscap::backends::FixtureStore> store;
  std::map<std::string, std::vector<newscap::EmbeddingVector>> frames;

  newscap::backends::BackendSet fixture_backends() const { return newscap::backends::fixture_backends(store); }
};

inline std::string pad_id(std::size_t i, const std::string& prefix) {
  std::string n = std::to_string(i);
  return prefix + std::string(n.size() < 4 ? 4 - n.size() : 0, '0') + n;
}

// Texts mix a small vocabulary with gazetteer names so every metric has
// something to find. All backend responses come from the hash stubs and are
// frozen into a fixture store.
inline SyntheticCorpus make_corpus(std::size_t n_clips, std::size_t n_models, std::uint64_t seed,
                                   std::size_t dim = 16) {
  using namespace newscap;
  static const std::vector<std::string> vocab = {
      "the",  "minister", "visited", "flooded", "streets", "police", "arrested", "a",     "man",
      "after", "storm",   "school",  "students", "protest", "market", "prices",  "rose",  "fire",
      "crews", "rescued", "dog",     "river",   "election", "votes", "hospital", "doctors", "said"};
  static const std::vector<std::string> names = {"Gabriel Boric", "Santiago", "London", "BBC",
                                                 "Malcolm Metcalf", "Carabineros", "Chile"};
  std::mt19937_64 rng(seed);
  auto sentence = [&](std::size_t len, bool with_name) {
    std::uniform_int_distribution<std::size_t> w(0, vocab.size() - 1);
    std::vector<std::string> words;
    for (std::size_t i = 0; i < len; ++i) words.push_back(vocab[w(rng)]);
    if (with_name) {
      std::uniform_int_distribution<std::size_t> nm(0, names.size() - 1);
      std::uniform_int_distribution<std::size_t> pos(0, words.size());
      words.insert(words.begin() + static_cast<std::ptrdiff_t>(pos(rng)), names[nm(rng)]);
    }
    return join(words);
  };

  SyntheticCorpus c;
  std::uniform_int_distribution<int> coin(0, 3);
  std::uniform_real_distribution<double> dur(10.0, 300.0);
  for (std::size_t i = 0; i < n_clips; ++i) {
    corpus::ClipRecord clip;
    clip.clip_id = pad_id(i, "clip");
    clip.duration_s = dur(rng);
    clip.title = "Clip " + std::to_string(i);
    clip.reference_description = sentence(6 + i % 9, coin(rng) != 0);
    clip.source_dataset = i % 2 == 0 ? corpus::SourceDataset::kBBC : corpus::SourceDataset::kChTV;
    clip.language = "en";
    c.clips.push_back(clip);
    for (std::size_t m = 0; m < n_models; ++m) {
      c.captions.push_back({clip.clip_id, pad_id(m, "model"), sentence(4 + (i + m) % 12, coin(rng) == 0)});
    }
  }

  backends::HashEmbedder sent(dim, seed ^ 0x51);
  backends::HashEmbedder vis(dim, seed ^ 0x52, backends::BackendKind::kVisualTextEmbedder);
  backends::HashTokenEmbedder tok(dim, seed ^ 0x53);
  backends::HashNliScorer nli(seed ^ 0x54);
  auto ner = backends::GazetteerEntityExtractor::parse(kGazetteer);
  fidelity::ThemeClassifierConfig theme_config;

  c.store = std::make_shared<backends::FixtureStore>();
  std::set<std::string> texts;
  for (const auto& clip : c.clips) texts.insert(clip.reference_description);
  for (const auto& cap : c.captions) texts.insert(cap.caption_text);
  for (const auto& t : texts) {
    c.store->put_sentence(t, sent.embed(t));
    c.store->put_visual_text(t, vis.embed(t));
    c.store->put_tokens(t, tok.embed_tokens(t));
    c.store->put_entities(t, ner.extract(t));
    for (const auto& label : fidelity::ThemeLabelSet::standard().labels()) {
      auto h = theme_config.hypothesis(label);
      c.store->put_nli(t, h, nli.entailment(t, h));
    }
  }
  for (const auto& clip : c.clips) {
    auto& frames = c.frames[clip.clip_id];
    for (std::size_t f = 0; f < 10; ++f) {
      frames.push_back(vis.embed(clip.clip_id + "#frame" + std::to_string(f)));
    }
  }
  return c;
}

// Every metric, fixture backends, the corpus's frames.
inline newscap::harness::RunConfig full_config(const SyntheticCorpus& c, std::size_t workers = 1) {
  using newscap::harness::Metric;
  newscap::harness::RunConfig config;
  config.metrics = {Metric::kRougeL, Metric::kMeteor,   Metric::kTextSim, Metric::kBertScore, Metric::kClipScore,
                    Metric::kTfs,    Metric::kEfs,      Metric::kMrr,     Metric::kShuffleTest};
  config.backends = c.fixture_backends();
  config.frame_embeddings = c.frames;
  config.workers = workers;
  config.seed = 7;
  return config;
}

// ---- stub embedders for the shuffle test -------------------------------------

// Maps each registered text to the basis vector of its group, so texts of the
// same clip are identical and texts of different clips are orthogonal.
class IdentityCodedEmbedder final : public newscap::backends::SentenceEmbedder {
 public:
  explicit IdentityCodedEmbedder(std::size_t dim) : dim_(dim) {}
  void assign(const std::string& text, std::size_t group) { groups_[text] = group; }
  newscap::backends::BackendDescriptor descriptor() const override {
    return {newscap::backends::BackendKind::kSentenceEmbedder, "identity-coded", dim_};
  }
  newscap::EmbeddingVector embed(std::string_view text) const override {
    std::vector<double> v(dim_, 0.0);
    v.at(groups_.at(std::string(text))) = 1.0;
    return newscap::EmbeddingVector(std::move(v));
  }

 private:
  std::size_t dim_;
  std::map<std::string, std::size_t> groups_;
};

// Clips whose caption and reference are coded with the clip's own basis vector.
struct ShuffleFixture {
  std::vector<newscap::corpus::ClipRecord> clips;
  std::vector<newscap::corpus::CaptionRecord> captions;
  std::shared_ptr<IdentityCodedEmbedder> embedder;
};

inline ShuffleFixture make_shuffle_fixture(std::size_t n) {
  ShuffleFixture f;
  f.embedder = std::make_shared<IdentityCodedEmbedder>(n);
  for (std::size_t i = 0; i < n; ++i) {
    newscap::corpus::ClipRecord clip;
    clip.clip_id = pad_id(i, "clip");
    clip.duration_s = 60;
    clip.reference_description = "reference for clip " + std::to_string(i);
    f.clips.push_back(clip);
    std::string caption = "caption for clip " + std::to_string(i);
    f.captions.push_back({clip.clip_id, "model", caption});
    f.embedder->assign(clip.reference_description, i);
    f.embedder->assign(caption, i);
  }
  return f;
}

// ---- temp dirs ----------------------------------------------------------------

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path = std::filesystem::temp_directory_path() /
           ("newscap-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::filesystem::path operator/(const std::string& name) const { return path / name; }
};

}  // namespace testsupport
