#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <fstream>

#include "newscap/embedding.hpp"
#include "newscap/error.hpp"
#include "newscap/fidelity.hpp"
#include "newscap/harness.hpp"
#include "newscap/lexical.hpp"
#include "newscap/stub_backends.hpp"
#include "newscap/text.hpp"
#include "test_support.hpp"

using namespace newscap;
using namespace newscap::harness;
using Catch::Matchers::WithinAbs;
using testsupport::full_config;
using testsupport::make_corpus;

namespace {

auto kind_is(ErrorKind k) {
  return Catch::Matchers::Predicate<Error>([k](const Error& e) { return e.kind() == k; });
}

corpus::ClipRecord clip(std::string id, std::string reference, double duration = 60,
                        corpus::SourceDataset src = corpus::SourceDataset::kBBC) {
  corpus::ClipRecord c;
  c.clip_id = std::move(id);
  c.duration_s = duration;
  c.reference_description = std::move(reference);
  c.source_dataset = src;
  return c;
}

// Fails for any text containing "poison".
class PoisonedEmbedder final : public backends::SentenceEmbedder {
 public:
  explicit PoisonedEmbedder(ErrorKind kind = ErrorKind::kBackendError) : kind_(kind) {}
  backends::BackendDescriptor descriptor() const override {
    return {backends::BackendKind::kSentenceEmbedder, "poisoned", 8};
  }
  EmbeddingVector embed(std::string_view text) const override {
    if (text.find("poison") != std::string_view::npos) throw Error(kind_, "refused");
    return inner_.embed(text);
  }

 private:
  ErrorKind kind_;
  backends::HashEmbedder inner_{8, 11};
};

// A table holding only the given values for one metric, one clip per entry.
ScoreTable table_of(const std::string& metric, const std::map<std::string, std::vector<std::optional<double>>>& by_model) {
  ScoreTable t;
  for (const auto& [model, values] : by_model) {
    t.models.push_back(model);
    for (std::size_t i = 0; i < values.size(); ++i) {
      std::string clip_id = testsupport::pad_id(i, "clip");
      t.clips[clip_id].source_dataset = "BBC";
      t.cells[{clip_id, model, metric}] = values[i] ? Cell::of(*values[i]) : Cell::excluded("no-gt-entities");
    }
  }
  return t;
}

}  // namespace

TEST_CASE("metric names") {
  for (auto m : {Metric::kRougeL, Metric::kMeteor, Metric::kTextSim, Metric::kBertScore, Metric::kClipScore,
                 Metric::kTfs, Metric::kEfs, Metric::kMrr, Metric::kShuffleTest}) {
    CHECK(parse_metric(to_string(m)) == m);
  }
  CHECK(parse_metric_list("rougeL, meteor,tfs") == std::set<Metric>{Metric::kRougeL, Metric::kMeteor, Metric::kTfs});
  CHECK_THROWS_MATCHES(parse_metric("bleu"), Error, kind_is(ErrorKind::kInvalidConfig));
  CHECK_THROWS_MATCHES(parse_metric_list(" , "), Error, kind_is(ErrorKind::kInvalidConfig));
}

TEST_CASE("run config validation") {
  auto corpus = make_corpus(2, 1, 1);
  auto config = full_config(corpus);
  CHECK_NOTHROW(config.validate());

  auto c = config;
  c.backends.nli = nullptr;
  CHECK_THROWS_MATCHES(c.validate(), Error, kind_is(ErrorKind::kInvalidConfig));
  c = config;
  c.tau = 1.5;
  CHECK_THROWS_MATCHES(c.validate(), Error, kind_is(ErrorKind::kInvalidConfig));
  c = config;
  c.workers = 0;
  CHECK_THROWS_MATCHES(c.validate(), Error, kind_is(ErrorKind::kInvalidConfig));
  c = config;
  c.min_duration_s = 50;
  c.max_duration_s = 10;
  CHECK_THROWS_MATCHES(c.validate(), Error, kind_is(ErrorKind::kInvalidBounds));
  c = config;
  c.meteor.synonyms = true;
  CHECK_THROWS_MATCHES(c.validate(), Error, kind_is(ErrorKind::kMissingResource));
  c = config;
  c.metrics = {};
  CHECK_THROWS_MATCHES(c.validate(), Error, kind_is(ErrorKind::kInvalidConfig));

  CHECK_THROWS_MATCHES(evaluate(corpus.clips, corpus.captions, RunConfig{}), Error,
                       kind_is(ErrorKind::kInvalidConfig));
}

TEST_CASE("config hash tracks value-changing settings only") {
  auto corpus = make_corpus(2, 1, 1);
  auto a = full_config(corpus, 1);
  auto b = full_config(corpus, 8);
  b.checkpoint_path = "/tmp/elsewhere";
  CHECK(a.config_hash() == b.config_hash());
  b.theta = 90;
  CHECK(a.config_hash() != b.config_hash());
  b = a;
  b.seed = 8;
  CHECK(a.config_hash() != b.config_hash());
  b = a;
  b.backends.sentence = std::make_shared<backends::HashEmbedder>(16, 1);
  CHECK(a.config_hash() != b.config_hash());
}

TEST_CASE("two clips, two models, rougeL only") {
  std::vector<corpus::ClipRecord> clips = {clip("c1", "the storm flooded the streets"),
                                           clip("c2", "police arrested a man")};
  std::vector<corpus::CaptionRecord> captions = {{"c1", "m1", "the storm flooded streets"},
                                                 {"c1", "m2", "a storm"},
                                                 {"c2", "m1", "a man was arrested"},
                                                 {"c2", "m2", "police arrested a man"}};
  RunConfig config;
  config.metrics = {Metric::kRougeL};
  auto t = evaluate(clips, captions, config);
  CHECK(t.models == std::vector<std::string>{"m1", "m2"});
  CHECK(t.metric_names() == std::vector<std::string>{"caption_words", "rougeL"});
  CHECK(t.cells.size() == 8);
  for (const auto& cap : captions) {
    const auto* ref = &clips[cap.clip_id == "c1" ? 0 : 1].reference_description;
    auto want = lexical::rouge_l(lexical::tokenize(cap.caption_text), lexical::tokenize(*ref)).f1;
    const Cell* cell = t.find(cap.clip_id, cap.model_id, "rougeL");
    REQUIRE(cell);
    REQUIRE(cell->has_value());
    CHECK(cell->value == want);
    CHECK(t.find(cap.clip_id, cap.model_id, "caption_words")->value ==
          static_cast<double>(text::word_count(cap.caption_text)));
  }
  CHECK(t.find("c2", "m2", "rougeL")->value == 1.0);
  CHECK(t.find("c1", "m1", "efs") == nullptr);
}

TEST_CASE("missing captions and entity-free references are excluded") {
  std::vector<corpus::ClipRecord> clips = {clip("c1", "Gabriel Boric visited Santiago"),
                                           clip("c2", "the storm flooded the streets")};
  std::vector<corpus::CaptionRecord> captions = {
      {"c1", "m1", "Gabriel Boric in Santiago"}, {"c2", "m1", "a storm"}, {"c2", "m2", "Boric"}};
  RunConfig config;
  config.metrics = {Metric::kRougeL, Metric::kEfs};
  config.backends.ner =
      std::make_shared<backends::GazetteerEntityExtractor>(backends::GazetteerEntityExtractor::parse(testsupport::kGazetteer));
  auto t = evaluate(clips, captions, config);

  for (auto metric : {"rougeL", "efs", "caption_words"}) {
    const Cell* cell = t.find("c1", "m2", metric);
    REQUIRE(cell);
    CHECK(cell->status == CellStatus::kExcluded);
    CHECK(cell->reason == "no-caption");
  }
  CHECK(t.find("c1", "m1", "efs")->value == 1.0);
  CHECK(t.find("c2", "m1", "efs")->reason == "no-gt-entities");
  CHECK(t.find("c2", "m2", "efs_recall")->reason == "no-gt-entities");
  CHECK(t.complete_clips() == std::vector<std::string>{"c2"});

  auto lb = aggregate(t);
  const auto* efs_board = lb.scope("all")->board("efs", kFullCoverage);
  REQUIRE(efs_board);
  CHECK(efs_board->rows[0].mean == 1.0);
  CHECK(efs_board->rows[0].n_evaluated == 1);
  CHECK(efs_board->rows[0].n_excluded == 1);
  CHECK_FALSE(efs_board->rows[1].mean.has_value());
  CHECK(efs_board->rows[1].n_excluded == 2);

  auto detail = t.details.at({"c1", "m1"});
  REQUIRE(detail.gt_entities.size() == 2);
  CHECK(detail.gt_entities[0].matched);
}

TEST_CASE("every cell equals a direct computation") {
  auto corpus = make_corpus(12, 3, 5);
  auto config = full_config(corpus, 4);
  auto t = evaluate(corpus.clips, corpus.captions, config);
  auto be = corpus.fixture_backends();
  fidelity::ThemeClassifierConfig tc;

  std::map<std::string, const corpus::ClipRecord*> by_id;
  for (const auto& c : corpus.clips) by_id[c.clip_id] = &c;
  std::size_t checked = 0;
  for (const auto& cap : corpus.captions) {
    const auto& ref = by_id.at(cap.clip_id)->reference_description;
    auto value = [&](const char* metric) {
      const Cell* cell = t.find(cap.clip_id, cap.model_id, metric);
      REQUIRE(cell);
      return cell->value;
    };
    auto ct = lexical::tokenize(cap.caption_text), rt = lexical::tokenize(ref);
    CHECK(value("rougeL") == lexical::rouge_l(ct, rt).f1);
    CHECK(value("meteor") == lexical::meteor(ct, rt).score);
    CHECK(value("textsim") == embedding::text_similarity(cap.caption_text, ref, *be.sentence));
    auto bs = embedding::bert_score(cap.caption_text, ref, *be.tokens);
    CHECK(value("bertscore_f1") == bs.f1);
    CHECK(value("bertscore_p") == bs.precision);
    CHECK(value("clipscore") == embedding::clip_score(cap.caption_text, corpus.frames.at(cap.clip_id), *be.visual_text));
    auto gt = fidelity::classify_themes(ref, fidelity::ThemeLabelSet::standard(), *be.nli, tc);
    auto pred = fidelity::classify_themes(cap.caption_text, fidelity::ThemeLabelSet::standard(), *be.nli, tc);
    CHECK(value("tfs") == fidelity::tfs(gt, pred));
    auto e = fidelity::efs(fidelity::extract_entities(ref, *be.ner), fidelity::extract_entities(cap.caption_text, *be.ner));
    const Cell* efs_cell = t.find(cap.clip_id, cap.model_id, "efs");
    if (e.excluded()) {
      CHECK(efs_cell->status == CellStatus::kExcluded);
    } else {
      CHECK(efs_cell->value == *e.value);
    }
    ++checked;
  }
  CHECK(checked == 36);
  CHECK(t.shuffle.size() == 3);
  CHECK(t.shuffle_errors.empty());
  std::vector<corpus::CaptionRecord> own;
  for (const auto& c : corpus.captions) {
    if (c.model_id == "model0000") own.push_back(c);
  }
  CHECK(t.shuffle.at("model0000") == embedding::shuffled_pairs_test(corpus.clips, own, *be.sentence, 7));
}

TEST_CASE("rr cells and rank agree and sum to the harmonic number") {
  auto corpus = make_corpus(20, 4, 9);
  auto t = evaluate(corpus.clips, corpus.captions, full_config(corpus));
  auto m = rank(t);
  REQUIRE(m.per_model_mrr.size() == 4);
  double total = 0;
  for (const auto& [model, v] : m.per_model_mrr) total += v;
  CHECK_THAT(total, WithinAbs(1.0 + 1.0 / 2 + 1.0 / 3 + 1.0 / 4, 1e-12));
  for (const auto& [key, r] : m.per_clip_ranks) {
    CHECK(t.find(key.first, key.second, "rr")->value == 1.0 / r);
  }
  auto lb = aggregate(t);
  const auto* board = lb.scope("all")->board("rr", kIntersection);
  REQUIRE(board);
  for (const auto& row : board->rows) CHECK_THAT(*row.mean, WithinAbs(m.per_model_mrr.at(row.model_id), 1e-12));
  CHECK(lb.scope("all")->board("rr", kFullCoverage) == nullptr);
}

TEST_CASE("rr is excluded for clips some model did not caption") {
  auto corpus = make_corpus(6, 3, 2);
  corpus.captions.erase(corpus.captions.begin() + 4);  // clip0001, model0001
  RunConfig config;
  config.metrics = {Metric::kMrr};
  config.backends = corpus.fixture_backends();
  auto t = evaluate(corpus.clips, corpus.captions, config);
  CHECK(t.find("clip0001", "model0000", "rr")->reason == "incomplete-clip");
  CHECK(t.find("clip0001", "model0001", "rr")->reason == "no-caption");
  CHECK(t.find("clip0002", "model0001", "rr")->has_value());
  CHECK(rank(t).per_clip_ranks.size() == 15);
}

TEST_CASE("backend failures stay in their cells") {
  std::vector<corpus::ClipRecord> clips = {clip("c1", "the storm"), clip("c2", "the flood")};
  std::vector<corpus::CaptionRecord> captions = {{"c1", "m1", "poison storm"}, {"c1", "m2", "a storm"},
                                                 {"c2", "m1", "a flood"},      {"c2", "m2", "flooding"}};
  RunConfig config;
  config.metrics = {Metric::kRougeL, Metric::kTextSim};
  config.backends.sentence = std::make_shared<PoisonedEmbedder>();
  EvaluateStats stats;
  auto t = evaluate(clips, captions, config, &stats);
  const Cell* bad = t.find("c1", "m1", "textsim");
  CHECK(bad->status == CellStatus::kError);
  CHECK(bad->reason == "BackendError");
  CHECK(t.find("c1", "m1", "rougeL")->has_value());
  CHECK(t.find("c1", "m2", "textsim")->has_value());
  CHECK(stats.error_cells == 1);

  auto row = aggregate(t).scope("all")->board("textsim", kFullCoverage)->rows[0];
  CHECK(row.n_failed == 1);
  CHECK(row.n_evaluated == 1);
  CHECK(row.n_evaluated + row.n_excluded + row.n_failed == 2);

  config.backends.sentence = std::make_shared<PoisonedEmbedder>(ErrorKind::kBackendUnavailable);
  CHECK_THROWS_MATCHES(evaluate(clips, captions, config), Error, kind_is(ErrorKind::kBackendUnavailable));
  config.abort_on_unavailable = false;
  auto lenient = evaluate(clips, captions, config);
  CHECK(lenient.find("c1", "m1", "textsim")->reason == "BackendUnavailable");
}

TEST_CASE("duration bounds drop clips before scoring") {
  std::vector<corpus::ClipRecord> clips;
  std::vector<corpus::CaptionRecord> captions;
  for (double d : {5.0, 10.0, 299.0, 300.0, 301.0}) {
    auto id = "d" + std::to_string(static_cast<int>(d));
    clips.push_back(clip(id, "the storm", d));
    captions.push_back({id, "m", "a storm"});
  }
  RunConfig config;
  config.metrics = {Metric::kRougeL};
  config.min_duration_s = 10;
  config.max_duration_s = 300;
  EvaluateStats stats;
  auto t = evaluate(clips, captions, config, &stats);
  std::vector<std::string> kept;
  for (const auto& [id, info] : t.clips) kept.push_back(id);
  CHECK(kept == std::vector<std::string>{"d10", "d299", "d300"});
  CHECK(stats.dropped_clips == 2);
  CHECK(t.provenance.at("dropped_clips") == 2);
}

TEST_CASE("results do not depend on the worker count") {
  auto corpus = make_corpus(40, 4, 12);
  auto one = evaluate(corpus.clips, corpus.captions, full_config(corpus, 1));
  auto eight = evaluate(corpus.clips, corpus.captions, full_config(corpus, 8));
  CHECK(one == eight);
  CHECK(to_json(one).dump() == to_json(eight).dump());
  CHECK(to_json(aggregate(one)).dump() == to_json(aggregate(eight)).dump());

  // input order does not matter either
  auto shuffled = corpus;
  std::reverse(shuffled.clips.begin(), shuffled.clips.end());
  std::reverse(shuffled.captions.begin(), shuffled.captions.end());
  CHECK(evaluate(shuffled.clips, shuffled.captions, full_config(corpus, 3)) == one);
}

TEST_CASE("a resumed run equals an uninterrupted one") {
  auto corpus = make_corpus(16, 3, 4);
  testsupport::TempDir dir("resume");
  auto config = full_config(corpus, 2);
  auto baseline = evaluate(corpus.clips, corpus.captions, config);

  config.checkpoint_path = dir / "run.ckpt";
  auto first = evaluate(corpus.clips, corpus.captions, config);
  CHECK(first == baseline);

  // keep the header and five clips, then tear the sixth line
  std::vector<std::string> lines;
  {
    std::ifstream in(config.checkpoint_path);
    for (std::string line; std::getline(in, line);) lines.push_back(line);
  }
  REQUIRE(lines.size() == 17);
  {
    std::ofstream out(config.checkpoint_path, std::ios::trunc);
    for (std::size_t i = 0; i < 6; ++i) out << lines[i] << '\n';
    out << lines[6].substr(0, lines[6].size() / 2);
  }
  EvaluateStats stats;
  auto resumed = evaluate(corpus.clips, corpus.captions, config, &stats);
  CHECK(stats.resumed_clips == 5);
  CHECK(stats.computed_clips == 11);
  CHECK(resumed == baseline);
  CHECK(to_json(resumed).dump() == to_json(baseline).dump());

  // everything is checkpointed now
  EvaluateStats again;
  CHECK(evaluate(corpus.clips, corpus.captions, config, &again) == baseline);
  CHECK(again.resumed_clips == 16);

  auto other = config;
  other.theta = 70;
  CHECK_THROWS_MATCHES(evaluate(corpus.clips, corpus.captions, other), Error, kind_is(ErrorKind::kInvalidConfig));
}

TEST_CASE("recorded fixtures replay the run") {
  auto corpus = make_corpus(10, 2, 21);
  testsupport::TempDir dir("record");
  auto config = testsupport::full_config(corpus, 2);
  config.backends.sentence = std::make_shared<backends::HashEmbedder>(16, 1);
  config.backends.tokens = std::make_shared<backends::HashTokenEmbedder>(16, 2);
  config.backends.nli = std::make_shared<backends::HashNliScorer>(3);
  config.record_fixtures = dir / "fixtures.jsonl";
  EvaluateStats stats;
  auto live = evaluate(corpus.clips, corpus.captions, config, &stats);
  CHECK(stats.memo.hits > 0);

  auto replay_config = config;
  replay_config.record_fixtures.clear();
  auto store = std::make_shared<backends::FixtureStore>(backends::FixtureStore::load(config.record_fixtures));
  auto replay_backends = backends::fixture_backends(store);
  replay_config.backends.sentence = replay_backends.sentence;
  replay_config.backends.tokens = replay_backends.tokens;
  replay_config.backends.nli = replay_backends.nli;
  auto replayed = evaluate(corpus.clips, corpus.captions, replay_config);
  CHECK(replayed.cells == live.cells);
  CHECK(replayed.shuffle == live.shuffle);
  CHECK(replayed.provenance.at("config_hash") == live.provenance.at("config_hash"));
}

TEST_CASE("aggregation arithmetic") {
  auto lb = aggregate(table_of("rougeL", {{"a", {0.2, 0.4}}, {"b", {std::nullopt, 0.5}}}));
  const auto* board = lb.scope("all")->board("rougeL", kFullCoverage);
  REQUIRE(board);
  CHECK_THAT(*board->rows[0].mean, WithinAbs(0.3, 1e-15));
  CHECK(board->rows[1].mean == 0.5);
  CHECK(board->rows[1].n_excluded == 1);
  CHECK(board->rows[1].n_evaluated == 1);
  CHECK(board->rows[1].best);
  CHECK_FALSE(board->rows[0].best);

  // an excluded value does not make the clip incomplete
  const auto* inter = lb.scope("all")->board("rougeL", kIntersection);
  CHECK_THAT(*inter->rows[0].mean, WithinAbs(0.3, 1e-15));

  // a missing caption does: the intersection keeps clip0001 only
  auto gap = table_of("rougeL", {{"a", {0.2, 0.4}}, {"b", {std::nullopt, 0.5}}});
  gap.cells[{"clip0000", "b", "rougeL"}] = Cell::excluded("no-caption");
  auto gap_lb = aggregate(gap);
  CHECK_THAT(*gap_lb.scope("all")->board("rougeL", kFullCoverage)->rows[0].mean, WithinAbs(0.3, 1e-15));
  CHECK(gap_lb.scope("all")->board("rougeL", kIntersection)->rows[0].mean == 0.4);
  CHECK(gap_lb.scope("all")->board("rougeL", kIntersection)->rows[1].mean == 0.5);

  auto tie = aggregate(table_of("rougeL", {{"b", {0.5}}, {"a", {0.5}}}));
  auto rows = tie.scope("all")->board("rougeL", kFullCoverage)->rows;
  CHECK(rows[0].model_id == "a");
  CHECK(rows[0].best);
  CHECK_FALSE(rows[1].best);

  CHECK_THROWS_MATCHES(aggregate(ScoreTable{}), Error, kind_is(ErrorKind::kEmptyTable));
}

TEST_CASE("aggregate means match a streaming oracle") {
  auto corpus = make_corpus(30, 3, 31);
  corpus.captions.erase(corpus.captions.begin() + 10);
  auto t = evaluate(corpus.clips, corpus.captions, full_config(corpus, 4));
  auto lb = aggregate(t);
  for (const auto& scope : lb.scopes) {
    for (const auto& board : scope.boards) {
      if (board.aggregation != kFullCoverage) continue;
      for (const auto& row : board.rows) {
        double mean = 0;
        std::size_t n = 0;
        for (const auto& [id, info] : t.clips) {
          if (scope.scope != "all" && info.source_dataset != scope.scope) continue;
          const Cell* c = t.find(id, row.model_id, board.metric);
          if (!c || !c->has_value()) continue;
          ++n;
          mean += (c->value - mean) / static_cast<double>(n);
        }
        INFO(scope.scope << " " << board.metric << " " << row.model_id);
        CHECK(row.n_evaluated == n);
        CHECK(row.n_evaluated + row.n_excluded + row.n_failed == scope.n_clips);
        if (n > 0) CHECK_THAT(*row.mean, WithinAbs(mean, 1e-12));
      }
    }
  }
  for (const auto& [key, cell] : t.cells) {
    if (cell.status != CellStatus::kExcluded) continue;
    bool efs_family = key.metric.rfind("efs", 0) == 0;
    CHECK(((efs_family && cell.reason == "no-gt-entities") || cell.reason == "no-caption" ||
           (key.metric == "rr" && cell.reason == "incomplete-clip")));
  }
  std::vector<std::string> scopes;
  for (const auto& s : lb.scopes) scopes.push_back(s.scope);
  CHECK(scopes == std::vector<std::string>{"all", "BBC", "ChTV"});
  CHECK(lb.scope("BBC")->n_clips == 15);
}

TEST_CASE("tfs is reported with and without both-empty clips") {
  ScoreTable t;
  t.models = {"m"};
  auto add = [&](const std::string& id, const std::string& gt, const std::string& pred) {
    t.clips[id] = {"BBC", "en", 3, gt};
    t.details[{id, "m"}].pred_themes = pred;
    auto g = fidelity::ThemeVector::from_string(gt), p = fidelity::ThemeVector::from_string(pred);
    t.cells[{id, "m", "tfs"}] = Cell::of(fidelity::tfs(g, p));
  };
  add("c1", "000000000000000", "000000000000000");
  add("c2", "100000000000000", "110000000000000");
  auto lb = aggregate(t);
  const auto* s = lb.scope("all");
  CHECK_THAT(*s->board("tfs", kFullCoverage)->rows[0].mean, WithinAbs((1.0 + 2.0 / 3.0) / 2, 1e-15));
  CHECK_THAT(*s->board("tfs", kExcludingBothEmpty)->rows[0].mean, WithinAbs(2.0 / 3.0, 1e-15));
  CHECK(s->tfs_both_empty.at("m") == 1);
}

TEST_CASE("score table and leaderboard survive JSON") {
  auto corpus = make_corpus(8, 2, 3);
  auto t = evaluate(corpus.clips, corpus.captions, full_config(corpus));
  auto back = table_from_json(nlohmann::json::parse(to_json(t).dump()));
  CHECK(back == t);
  auto lb = aggregate(t);
  CHECK(leaderboard_from_json(nlohmann::json::parse(to_json(lb).dump())) == lb);

  testsupport::TempDir dir("table");
  save_table(t, dir / "t.json");
  CHECK(load_table(dir / "t.json") == t);
  CHECK_THROWS_AS(table_from_json(nlohmann::json{{"format", "other"}}), Error);
}

TEST_CASE("harness shuffle test separates matched from shuffled pairs") {
  auto f = testsupport::make_shuffle_fixture(10);
  RunConfig config;
  config.metrics = {Metric::kShuffleTest};
  config.backends.sentence = f.embedder;
  config.seed = 3;
  auto t = evaluate(f.clips, f.captions, config);
  REQUIRE(t.shuffle.count("model"));
  CHECK(t.shuffle.at("model").mean_gap == 1.0);

  std::vector<corpus::CaptionRecord> single = {f.captions[0]};
  auto few = evaluate(f.clips, single, config);
  CHECK(few.shuffle.empty());
  CHECK(few.shuffle_errors.count("model") == 1);
}
