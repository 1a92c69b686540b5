#include "newscap/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <exception>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

#include "newscap/error.hpp"
#include "newscap/text.hpp"

namespace newscap::harness {

using nlohmann::json;
using embedding::ClipModelKey;

namespace {

constexpr std::pair<Metric, std::string_view> kMetricNames[] = {
    {Metric::kRougeL, "rougeL"},       {Metric::kMeteor, "meteor"},
    {Metric::kTextSim, "textsim"},     {Metric::kBertScore, "bertscore"},
    {Metric::kClipScore, "clipscore"}, {Metric::kTfs, "tfs"},
    {Metric::kEfs, "efs"},             {Metric::kMrr, "mrr"},
    {Metric::kShuffleTest, "shuffle-test"},
};

constexpr std::string_view kCheckpointFormat = "newscap-checkpoint";
constexpr std::string_view kTableFormat = "newscap-score-table";
constexpr std::string_view kLeaderboardFormat = "newscap-leaderboard";

std::string_view status_name(CellStatus s) {
  switch (s) {
    case CellStatus::kValue: return "value";
    case CellStatus::kExcluded: return "excluded";
    case CellStatus::kError: return "error";
  }
  return "value";
}

CellStatus parse_status(const std::string& s) {
  if (s == "value") return CellStatus::kValue;
  if (s == "excluded") return CellStatus::kExcluded;
  if (s == "error") return CellStatus::kError;
  throw Error(ErrorKind::kMalformedFile, "unknown cell status '" + s + "'");
}

json cell_json(const CellKey& key, const Cell& cell) {
  json j = {{"clip_id", key.clip_id},
            {"model_id", key.model_id},
            {"metric", key.metric},
            {"status", status_name(cell.status)}};
  if (cell.status == CellStatus::kValue) j["value"] = cell.value;
  if (!cell.reason.empty()) j["reason"] = cell.reason;
  if (!cell.message.empty()) j["message"] = cell.message;
  return j;
}

std::pair<CellKey, Cell> cell_from_json(const json& j) {
  CellKey key{j.at("clip_id").get<std::string>(), j.at("model_id").get<std::string>(),
              j.at("metric").get<std::string>()};
  Cell cell;
  cell.status = parse_status(j.at("status").get<std::string>());
  if (cell.status == CellStatus::kValue) cell.value = j.at("value").get<double>();
  cell.reason = j.value("reason", "");
  cell.message = j.value("message", "");
  return {std::move(key), std::move(cell)};
}

json info_json(const ClipInfo& info) {
  json j = {{"source_dataset", info.source_dataset},
            {"language", info.language},
            {"reference_words", info.reference_words}};
  if (info.gt_themes) j["gt_themes"] = *info.gt_themes;
  return j;
}

ClipInfo info_from_json(const json& j) {
  ClipInfo info;
  info.source_dataset = j.at("source_dataset").get<std::string>();
  info.language = j.at("language").get<std::string>();
  info.reference_words = j.at("reference_words").get<std::size_t>();
  if (j.contains("gt_themes")) info.gt_themes = j["gt_themes"].get<std::string>();
  return info;
}

json flags_json(const std::vector<EntityFlag>& flags) {
  json arr = json::array();
  for (const auto& f : flags) {
    arr.push_back({{"surface", f.surface}, {"type", f.type}, {"matched", f.matched}});
  }
  return arr;
}

std::vector<EntityFlag> flags_from_json(const json& arr) {
  std::vector<EntityFlag> out;
  for (const auto& f : arr) {
    out.push_back({f.at("surface").get<std::string>(), f.at("type").get<std::string>(),
                   f.at("matched").get<bool>()});
  }
  return out;
}

json detail_json(const PairDetail& d) {
  json j = {{"gt_entities", flags_json(d.gt_entities)},
            {"model_entities", flags_json(d.model_entities)}};
  if (d.pred_themes) j["pred_themes"] = *d.pred_themes;
  return j;
}

PairDetail detail_from_json(const json& j) {
  PairDetail d;
  if (j.contains("pred_themes")) d.pred_themes = j["pred_themes"].get<std::string>();
  d.gt_entities = flags_from_json(j.at("gt_entities"));
  d.model_entities = flags_from_json(j.at("model_entities"));
  return d;
}

json shuffle_json(const embedding::ShuffleTestResult& r) {
  return {{"model_id", r.model_id},
          {"clip_ids", r.clip_ids},
          {"paired_clip_ids", r.paired_clip_ids},
          {"original_similarities", r.original_similarities},
          {"shuffled_similarities", r.shuffled_similarities},
          {"mean_gap", r.mean_gap},
          {"effect_size", r.effect_size ? json(*r.effect_size) : json(nullptr)},
          {"seed", r.seed}};
}

embedding::ShuffleTestResult shuffle_from_json(const json& j) {
  embedding::ShuffleTestResult r;
  r.model_id = j.at("model_id").get<std::string>();
  r.clip_ids = j.at("clip_ids").get<std::vector<std::string>>();
  r.paired_clip_ids = j.at("paired_clip_ids").get<std::vector<std::string>>();
  r.original_similarities = j.at("original_similarities").get<std::vector<double>>();
  r.shuffled_similarities = j.at("shuffled_similarities").get<std::vector<double>>();
  r.mean_gap = j.at("mean_gap").get<double>();
  if (!j.at("effect_size").is_null()) r.effect_size = j["effect_size"].get<double>();
  r.seed = j.at("seed").get<std::uint64_t>();
  return r;
}

json backend_entry(const backends::BackendDescriptor& d) {
  json j = {{"identity", d.identity}};
  if (backends::is_embedder(d.kind)) j["dim"] = d.dim;
  return j;
}

std::string frames_digest(const std::map<std::string, std::vector<EmbeddingVector>>& frames) {
  std::string bytes;
  for (const auto& [clip_id, vecs] : frames) {
    bytes += clip_id;
    bytes.push_back('\0');
    for (const auto& v : vecs) {
      for (double x : v.values()) {
        char buf[sizeof(double)];
        std::memcpy(buf, &x, sizeof(double));
        bytes.append(buf, sizeof(double));
      }
      bytes.push_back('\x1e');
    }
  }
  return text::to_hex(text::fnv1a64(bytes));
}

// ---- per-clip evaluation ---------------------------------------------------

struct ClipResult {
  std::string clip_id;
  ClipInfo info;
  std::vector<std::pair<CellKey, Cell>> cells;
  std::vector<std::pair<std::string, PairDetail>> details;  // model_id -> detail
};

json clip_result_json(const ClipResult& r) {
  json cells = json::array();
  for (const auto& [key, cell] : r.cells) cells.push_back(cell_json(key, cell));
  json details = json::object();
  for (const auto& [model, d] : r.details) details[model] = detail_json(d);
  return {{"clip_id", r.clip_id}, {"info", info_json(r.info)}, {"cells", cells}, {"details", details}};
}

ClipResult clip_result_from_json(const json& j) {
  ClipResult r;
  r.clip_id = j.at("clip_id").get<std::string>();
  r.info = info_from_json(j.at("info"));
  for (const auto& c : j.at("cells")) r.cells.push_back(cell_from_json(c));
  for (const auto& [model, d] : j.at("details").items()) r.details.emplace_back(model, detail_from_json(d));
  return r;
}

struct Context {
  const RunConfig& config;
  const backends::BackendSet& be;
  const fidelity::ThemeLabelSet& labels;
  fidelity::ThemeClassifierConfig theme_config;
  fidelity::EntityMatchConfig match_config;
  std::vector<std::string> models;
  std::map<ClipModelKey, std::string> captions;
  std::vector<std::string_view> cell_names;  // every per-clip cell a captioned pair gets

  bool want(Metric m) const { return config.metrics.contains(m); }
  bool want_textsim() const { return want(Metric::kTextSim) || want(Metric::kMrr); }
};

std::vector<std::string_view> per_clip_cells(const RunConfig& config) {
  std::vector<std::string_view> names;
  auto want = [&](Metric m) { return config.metrics.contains(m); };
  if (want(Metric::kRougeL)) names.push_back(cells::kRougeL);
  if (want(Metric::kMeteor)) names.push_back(cells::kMeteor);
  if (want(Metric::kTextSim) || want(Metric::kMrr)) names.push_back(cells::kTextSim);
  if (want(Metric::kBertScore)) {
    names.insert(names.end(), {cells::kBertP, cells::kBertR, cells::kBertF1});
  }
  if (want(Metric::kClipScore)) names.push_back(cells::kClipScore);
  if (want(Metric::kTfs)) names.push_back(cells::kTfs);
  if (want(Metric::kEfs)) names.insert(names.end(), {cells::kEfs, cells::kEfsP, cells::kEfsR});
  names.push_back(cells::kCaptionWords);
  return names;
}

std::vector<EntityFlag> flags(const fidelity::EntitySet& set, const std::set<fidelity::Entity>& matched) {
  std::vector<EntityFlag> out;
  for (const auto& e : set) out.push_back({e.surface, fidelity::to_string(e.type), matched.contains(e)});
  return out;
}

ClipResult compute_clip(const corpus::ClipRecord& clip, const Context& ctx) {
  ClipResult r;
  r.clip_id = clip.clip_id;
  r.info.source_dataset = corpus::to_string(clip.source_dataset);
  r.info.language = clip.language;
  r.info.reference_words = text::word_count(clip.reference_description);

  const std::string& reference = clip.reference_description;
  lexical::TokenSequence ref_tokens;
  if (ctx.want(Metric::kRougeL) || ctx.want(Metric::kMeteor)) ref_tokens = lexical::tokenize(reference);
  lexical::MatchResources meteor_resources = ctx.config.meteor;
  meteor_resources.language = clip.language;

  std::optional<fidelity::ThemeVector> gt_themes;
  std::optional<Error> gt_themes_error;
  if (ctx.want(Metric::kTfs)) {
    try {
      gt_themes = fidelity::classify_themes(reference, ctx.labels, *ctx.be.nli, ctx.theme_config);
      r.info.gt_themes = gt_themes->to_string();
    } catch (const Error& e) {
      gt_themes_error = Error(e.kind(), "reference themes: " + e.detail());
    }
  }
  std::optional<fidelity::EntitySet> gt_entities;
  std::optional<Error> gt_entities_error;
  if (ctx.want(Metric::kEfs)) {
    try {
      gt_entities = fidelity::extract_entities(reference, *ctx.be.ner);
    } catch (const Error& e) {
      gt_entities_error = Error(e.kind(), "reference entities: " + e.detail());
    }
  }

  for (const auto& model : ctx.models) {
    auto put = [&](std::string_view metric, Cell cell) {
      r.cells.emplace_back(CellKey{clip.clip_id, model, std::string(metric)}, std::move(cell));
    };
    auto found = ctx.captions.find({clip.clip_id, model});
    if (found == ctx.captions.end()) {
      for (auto name : ctx.cell_names) put(name, Cell::excluded(std::string(kNoCaption)));
      continue;
    }
    const std::string& caption = found->second;
    auto guard = [&](std::initializer_list<std::string_view> names, auto&& fn) {
      try {
        fn();
      } catch (const Error& e) {
        for (auto n : names) put(n, Cell::error(e.kind(), e.detail()));
      } catch (const std::exception& e) {
        for (auto n : names) put(n, Cell::error(ErrorKind::kBackendError, e.what()));
      }
    };

    put(cells::kCaptionWords, Cell::of(static_cast<double>(text::word_count(caption))));

    std::optional<lexical::TokenSequence> cand_tokens;
    if (ctx.want(Metric::kRougeL) || ctx.want(Metric::kMeteor)) cand_tokens = lexical::tokenize(caption);
    if (ctx.want(Metric::kRougeL)) {
      guard({cells::kRougeL},
            [&] { put(cells::kRougeL, Cell::of(lexical::rouge_l(*cand_tokens, ref_tokens).f1)); });
    }
    if (ctx.want(Metric::kMeteor)) {
      guard({cells::kMeteor}, [&] {
        put(cells::kMeteor, Cell::of(lexical::meteor(*cand_tokens, ref_tokens, meteor_resources).score));
      });
    }
    if (ctx.want_textsim()) {
      guard({cells::kTextSim}, [&] {
        put(cells::kTextSim, Cell::of(embedding::text_similarity(caption, reference, *ctx.be.sentence)));
      });
    }
    if (ctx.want(Metric::kBertScore)) {
      guard({cells::kBertP, cells::kBertR, cells::kBertF1}, [&] {
        auto b = embedding::bert_score(caption, reference, *ctx.be.tokens);
        put(cells::kBertP, Cell::of(b.precision));
        put(cells::kBertR, Cell::of(b.recall));
        put(cells::kBertF1, Cell::of(b.f1));
      });
    }
    if (ctx.want(Metric::kClipScore)) {
      guard({cells::kClipScore}, [&] {
        auto frames = ctx.config.frame_embeddings.find(clip.clip_id);
        if (frames == ctx.config.frame_embeddings.end() || frames->second.empty()) {
          throw Error(ErrorKind::kNoFrames, "no frame embeddings for clip " + clip.clip_id);
        }
        put(cells::kClipScore, Cell::of(embedding::clip_score(caption, frames->second, *ctx.be.visual_text,
                                                              ctx.config.frame_budget)));
      });
    }

    PairDetail detail;
    bool has_detail = false;
    if (ctx.want(Metric::kTfs)) {
      guard({cells::kTfs}, [&] {
        if (gt_themes_error) throw *gt_themes_error;
        auto pred = fidelity::classify_themes(caption, ctx.labels, *ctx.be.nli, ctx.theme_config);
        detail.pred_themes = pred.to_string();
        has_detail = true;
        put(cells::kTfs, Cell::of(fidelity::tfs(*gt_themes, pred)));
      });
    }
    if (ctx.want(Metric::kEfs)) {
      guard({cells::kEfs, cells::kEfsP, cells::kEfsR}, [&] {
        if (gt_entities_error) throw *gt_entities_error;
        auto model_entities = fidelity::extract_entities(caption, *ctx.be.ner);
        auto result = fidelity::efs(*gt_entities, model_entities, ctx.match_config);
        detail.gt_entities = flags(*gt_entities, result.matched_gt);
        detail.model_entities = flags(model_entities, result.matched_model);
        has_detail = true;
        if (result.excluded()) {
          for (auto n : {cells::kEfs, cells::kEfsP, cells::kEfsR}) {
            put(n, Cell::excluded(std::string(kNoGtEntities)));
          }
        } else {
          put(cells::kEfs, Cell::of(*result.value));
          put(cells::kEfsP, Cell::of(result.precision));
          put(cells::kEfsR, Cell::of(result.recall));
        }
      });
    }
    if (has_detail) r.details.emplace_back(model, std::move(detail));
  }
  return r;
}

// Batches every backend request the clips will make through the memo layer
// up front, so remote backends see full batches instead of single items.
void prefetch(const std::vector<const corpus::ClipRecord*>& todo, const Context& ctx) {
  std::set<std::string> sentence, tokens, visual, premises, ner;
  for (const auto* clip : todo) {
    const std::string& ref = clip->reference_description;
    if (ctx.want_textsim() || ctx.want(Metric::kShuffleTest)) sentence.insert(ref);
    if (ctx.want(Metric::kBertScore)) tokens.insert(ref);
    if (ctx.want(Metric::kTfs) && !text::trim(ref).empty()) premises.insert(ref);
    if (ctx.want(Metric::kEfs) && !ref.empty()) ner.insert(ref);
    for (const auto& model : ctx.models) {
      auto it = ctx.captions.find({clip->clip_id, model});
      if (it == ctx.captions.end()) continue;
      const std::string& cap = it->second;
      if (ctx.want_textsim() || ctx.want(Metric::kShuffleTest)) sentence.insert(cap);
      if (ctx.want(Metric::kBertScore)) tokens.insert(cap);
      if (ctx.want(Metric::kClipScore)) visual.insert(cap);
      if (ctx.want(Metric::kTfs) && !text::trim(cap).empty()) premises.insert(cap);
      if (ctx.want(Metric::kEfs) && !cap.empty()) ner.insert(cap);
    }
  }
  auto attempt = [&](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      bool fatal = e.kind() == ErrorKind::kBackendUnavailable || e.kind() == ErrorKind::kTimeout;
      if (fatal && ctx.config.abort_on_unavailable) throw;
      // Anything else is left for the individual cells to report.
    }
  };
  auto as_vec = [](const std::set<std::string>& s) { return std::vector<std::string>(s.begin(), s.end()); };
  if (!sentence.empty()) attempt([&] { ctx.be.sentence->embed_batch(as_vec(sentence)); });
  if (!tokens.empty()) attempt([&] { ctx.be.tokens->embed_tokens_batch(as_vec(tokens)); });
  if (!visual.empty()) attempt([&] { ctx.be.visual_text->embed_text_batch(as_vec(visual)); });
  if (!premises.empty()) {
    std::vector<backends::NliPair> pairs;
    for (const auto& p : premises) {
      for (const auto& label : ctx.labels.labels()) pairs.push_back({p, ctx.theme_config.hypothesis(label)});
    }
    attempt([&] { ctx.be.nli->entailment_batch(pairs); });
  }
  if (!ner.empty()) attempt([&] { ctx.be.ner->extract_batch(as_vec(ner)); });
}

std::map<std::string, ClipResult> load_checkpoint(const std::filesystem::path& path,
                                                  const std::string& config_hash) {
  std::map<std::string, ClipResult> done;
  std::ifstream in(path);
  if (!in) return done;
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!text::trim(line).empty()) lines.push_back(line);
  }
  if (lines.empty()) return done;
  json header = json::parse(lines.front(), nullptr, false);
  if (header.is_discarded() || header.value("format", "") != kCheckpointFormat) {
    throw Error(ErrorKind::kMalformedFile, path.string() + " is not a newscap checkpoint");
  }
  if (header.value("config_hash", "") != config_hash) {
    throw Error(ErrorKind::kInvalidConfig,
                path.string() + " was written by a different configuration (" +
                    header.value("config_hash", "?") + " vs " + config_hash + ")");
  }
  for (std::size_t i = 1; i < lines.size(); ++i) {
    json j = json::parse(lines[i], nullptr, false);
    if (j.is_discarded()) {
      // A run killed mid-write leaves at most one torn line, at the end.
      if (i + 1 == lines.size()) break;
      throw Error(ErrorKind::kMalformedFile, path.string() + ": bad line " + std::to_string(i + 1));
    }
    ClipResult r = clip_result_from_json(j);
    done[r.clip_id] = std::move(r);
  }
  return done;
}

}  // namespace

// ---- Metric names / Cell ---------------------------------------------------

std::string_view to_string(Metric metric) {
  for (const auto& [m, name] : kMetricNames) {
    if (m == metric) return name;
  }
  return "?";
}

Metric parse_metric(std::string_view name) {
  for (const auto& [m, n] : kMetricNames) {
    if (n == name) return m;
  }
  throw Error(ErrorKind::kInvalidConfig, "unknown metric '" + std::string(name) + "'");
}

std::set<Metric> parse_metric_list(std::string_view comma_separated) {
  std::set<Metric> out;
  std::string item;
  std::stringstream ss{std::string(comma_separated)};
  while (std::getline(ss, item, ',')) {
    item = text::trim(item);
    if (!item.empty()) out.insert(parse_metric(item));
  }
  if (out.empty()) throw Error(ErrorKind::kInvalidConfig, "no metrics selected");
  return out;
}

Cell Cell::error(ErrorKind kind, std::string message) {
  return {CellStatus::kError, 0.0, std::string(newscap::to_string(kind)), std::move(message)};
}

// ---- RunConfig -------------------------------------------------------------

void RunConfig::validate() const {
  if (metrics.empty()) throw Error(ErrorKind::kInvalidConfig, "no metrics selected");
  auto need = [&](bool bound, Metric m, std::string_view kind) {
    if (metrics.contains(m) && !bound) {
      throw Error(ErrorKind::kInvalidConfig, std::string(to_string(m)) + " needs a " +
                                                 std::string(kind) + " backend");
    }
  };
  need(backends.sentence != nullptr, Metric::kTextSim, "sentence");
  need(backends.sentence != nullptr, Metric::kMrr, "sentence");
  need(backends.sentence != nullptr, Metric::kShuffleTest, "sentence");
  need(backends.tokens != nullptr, Metric::kBertScore, "tokens");
  need(backends.visual_text != nullptr, Metric::kClipScore, "visual-text");
  need(backends.nli != nullptr, Metric::kTfs, "nli");
  need(backends.ner != nullptr, Metric::kEfs, "ner");

  fidelity::ThemeClassifierConfig{tau, hypothesis_template}.validate();
  fidelity::EntityMatchConfig{theta}.validate();
  if (frame_budget == 0) throw Error(ErrorKind::kInvalidConfig, "frame budget must be positive");
  if (workers == 0) throw Error(ErrorKind::kInvalidConfig, "worker count must be positive");
  corpus::filter_clips({}, min_duration_s, max_duration_s);
  if (metrics.contains(Metric::kMeteor) && meteor.synonyms && !meteor.synonym_table) {
    throw Error(ErrorKind::kMissingResource, "meteor synonym stage enabled without a synonym table");
  }
  if (backends.sentence) backends.sentence->descriptor().validate();
  if (backends.tokens) backends.tokens->descriptor().validate();
  if (backends.visual_text) backends.visual_text->descriptor().validate();
  if (backends.nli) backends.nli->descriptor().validate();
  if (backends.ner) backends.ner->descriptor().validate();
}

const fidelity::ThemeLabelSet& RunConfig::labels() const {
  return theme_labels ? *theme_labels : fidelity::ThemeLabelSet::standard();
}

json RunConfig::snapshot() const {
  json names = json::array();
  for (Metric m : metrics) names.push_back(to_string(m));
  json be = json::object();
  if (backends.sentence) be["sentence-embedder"] = backend_entry(backends.sentence->descriptor());
  if (backends.tokens) be["token-embedder"] = backend_entry(backends.tokens->descriptor());
  if (backends.visual_text) be["visual-text-embedder"] = backend_entry(backends.visual_text->descriptor());
  if (backends.nli) be["nli-scorer"] = backend_entry(backends.nli->descriptor());
  if (backends.ner) be["entity-extractor"] = backend_entry(backends.ner->descriptor());
  const auto& theme_labels_ref = labels();
  return {
      {"metrics", names},
      {"tau", tau},
      {"hypothesis_template", hypothesis_template},
      {"theta", theta},
      {"frame_budget", frame_budget},
      {"min_duration_s", min_duration_s},
      {"max_duration_s", std::isinf(max_duration_s) ? json(nullptr) : json(max_duration_s)},
      {"seed", seed},
      {"meteor",
       {{"stem", meteor.stem},
        {"synonyms", meteor.synonyms},
        {"synonym_entries", meteor.synonym_table ? meteor.synonym_table->size() : 0}}},
      {"theme_labels", {{"version", theme_labels_ref.version()}, {"labels", theme_labels_ref.labels()}}},
      {"frames", {{"clips", frame_embeddings.size()}, {"digest", frames_digest(frame_embeddings)}}},
      {"backends", be},
  };
}

std::string RunConfig::config_hash() const { return text::to_hex(text::fnv1a64(snapshot().dump())); }

// ---- ScoreTable ------------------------------------------------------------

const Cell* ScoreTable::find(std::string_view clip_id, std::string_view model_id,
                             std::string_view metric) const {
  auto it = cells.find(CellKey{std::string(clip_id), std::string(model_id), std::string(metric)});
  return it == cells.end() ? nullptr : &it->second;
}

std::vector<std::string> ScoreTable::metric_names() const {
  std::set<std::string> names;
  for (const auto& [key, cell] : cells) names.insert(key.metric);
  return {names.begin(), names.end()};
}

std::vector<std::string> ScoreTable::complete_clips() const {
  std::map<std::string, bool> complete;
  for (const auto& [clip_id, info] : clips) complete[clip_id] = true;
  for (const auto& [key, cell] : cells) {
    if (cell.status == CellStatus::kExcluded && cell.reason == kNoCaption) complete[key.clip_id] = false;
  }
  std::vector<std::string> out;
  for (const auto& [clip_id, ok] : complete) {
    if (ok) out.push_back(clip_id);
  }
  return out;
}

bool ScoreTable::operator==(const ScoreTable& o) const {
  return cells == o.cells && clips == o.clips && models == o.models && details == o.details &&
         shuffle == o.shuffle && shuffle_errors == o.shuffle_errors && provenance == o.provenance;
}

json to_json(const ScoreTable& table) {
  json cells = json::array();
  for (const auto& [key, cell] : table.cells) cells.push_back(cell_json(key, cell));
  json clips = json::object();
  for (const auto& [id, info] : table.clips) clips[id] = info_json(info);
  json details = json::array();
  for (const auto& [key, d] : table.details) {
    json j = detail_json(d);
    j["clip_id"] = key.first;
    j["model_id"] = key.second;
    details.push_back(std::move(j));
  }
  json shuffle = json::object();
  for (const auto& [model, r] : table.shuffle) shuffle[model] = shuffle_json(r);
  return {{"format", kTableFormat},
          {"version", 1},
          {"provenance", table.provenance},
          {"models", table.models},
          {"clips", clips},
          {"cells", cells},
          {"details", details},
          {"shuffle", shuffle},
          {"shuffle_errors", table.shuffle_errors}};
}

ScoreTable table_from_json(const json& j) {
  try {
    if (j.value("format", "") != kTableFormat) {
      throw Error(ErrorKind::kMalformedFile, "not a newscap score table");
    }
    ScoreTable t;
    t.provenance = j.at("provenance");
    t.models = j.at("models").get<std::vector<std::string>>();
    for (const auto& [id, info] : j.at("clips").items()) t.clips[id] = info_from_json(info);
    for (const auto& c : j.at("cells")) t.cells.insert(cell_from_json(c));
    for (const auto& d : j.at("details")) {
      t.details[{d.at("clip_id").get<std::string>(), d.at("model_id").get<std::string>()}] =
          detail_from_json(d);
    }
    for (const auto& [model, r] : j.at("shuffle").items()) t.shuffle[model] = shuffle_from_json(r);
    t.shuffle_errors = j.at("shuffle_errors").get<std::map<std::string, std::string>>();
    return t;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kMalformedFile, std::string("score table: ") + e.what());
  }
}

void save_table(const ScoreTable& table, const std::filesystem::path& path) {
  corpus::write_file(path, to_json(table).dump(1) + "\n");
}

ScoreTable load_table(const std::filesystem::path& path) {
  json j = json::parse(corpus::read_file(path), nullptr, false);
  if (j.is_discarded()) throw Error(ErrorKind::kMalformedFile, path.string() + " is not valid JSON");
  return table_from_json(j);
}

// ---- evaluate ----------------------------------------------------------------

ScoreTable evaluate(const std::vector<corpus::ClipRecord>& clips,
                    const std::vector<corpus::CaptionRecord>& captions, const RunConfig& config,
                    EvaluateStats* stats) {
  config.validate();
  EvaluateStats local_stats;
  auto filtered = corpus::filter_clips(clips, config.min_duration_s, config.max_duration_s);
  local_stats.dropped_clips = filtered.dropped;

  std::vector<const corpus::ClipRecord*> sorted;
  std::set<std::string> seen;
  for (const auto& c : filtered.kept) {
    if (seen.insert(c.clip_id).second) sorted.push_back(&c);
  }
  std::sort(sorted.begin(), sorted.end(),
            [](const auto* a, const auto* b) { return a->clip_id < b->clip_id; });

  backends::MemoizedBackends memo(config.backends);
  Context ctx{config,
              memo.backends(),
              config.labels(),
              fidelity::ThemeClassifierConfig{config.tau, config.hypothesis_template},
              fidelity::EntityMatchConfig{config.theta},
              {},
              {},
              per_clip_cells(config)};
  std::set<std::string> models;
  for (const auto& c : captions) {
    if (!seen.contains(c.clip_id)) continue;
    models.insert(c.model_id);
    ctx.captions.emplace(ClipModelKey{c.clip_id, c.model_id}, c.caption_text);
  }
  ctx.models.assign(models.begin(), models.end());

  ScoreTable table;
  table.models = ctx.models;
  const std::string hash = config.config_hash();
  table.provenance = {{"config", config.snapshot()},
                      {"config_hash", hash},
                      {"seed", config.seed},
                      {"clip_count", sorted.size()},
                      {"dropped_clips", filtered.dropped}};

  std::map<std::string, ClipResult> done;
  if (!config.checkpoint_path.empty()) done = load_checkpoint(config.checkpoint_path, hash);

  std::vector<std::optional<ClipResult>> results(sorted.size());
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    auto it = done.find(sorted[i]->clip_id);
    if (it != done.end()) {
      results[i] = std::move(it->second);
      ++local_stats.resumed_clips;
    } else {
      todo.push_back(i);
    }
  }

  std::ofstream checkpoint;
  if (!config.checkpoint_path.empty()) {
    // Rewrite header + completed clips so a torn trailing line is dropped.
    std::ostringstream fresh;
    fresh << json{{"format", kCheckpointFormat}, {"version", 1}, {"config_hash", hash}}.dump() << '\n';
    for (const auto& r : results) {
      if (r) fresh << clip_result_json(*r).dump() << '\n';
    }
    corpus::write_file(config.checkpoint_path, fresh.str());
    checkpoint.open(config.checkpoint_path, std::ios::app | std::ios::binary);
    if (!checkpoint) throw Error(ErrorKind::kIo, "cannot append to " + config.checkpoint_path.string());
  }

  {
    std::vector<const corpus::ClipRecord*> pending;
    for (auto i : todo) pending.push_back(sorted[i]);
    prefetch(pending, ctx);
  }

  std::atomic<std::size_t> next{0};
  std::mutex checkpoint_mu;
  std::exception_ptr failure;
  auto work = [&] {
    for (;;) {
      std::size_t k = next.fetch_add(1);
      if (k >= todo.size()) return;
      try {
        ClipResult r = compute_clip(*sorted[todo[k]], ctx);
        if (checkpoint.is_open()) {
          std::string line = clip_result_json(r).dump();
          std::lock_guard lock(checkpoint_mu);
          checkpoint << line << '\n';
          checkpoint.flush();
        }
        results[todo[k]] = std::move(r);
      } catch (...) {
        std::lock_guard lock(checkpoint_mu);
        if (!failure) failure = std::current_exception();
        next.store(todo.size());
        return;
      }
    }
  };
  std::size_t n_threads = std::min(config.workers, todo.size());
  if (n_threads <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
  local_stats.computed_clips = todo.size();

  for (auto& r : results) {
    table.clips[r->clip_id] = r->info;
    for (auto& [key, cell] : r->cells) table.cells[key] = std::move(cell);
    for (auto& [model, d] : r->details) table.details[{r->clip_id, model}] = std::move(d);
  }

  if (config.metrics.contains(Metric::kMrr)) {
    for (const auto* clip : sorted) {
      bool complete = true;
      for (const auto& model : ctx.models) complete = complete && ctx.captions.contains({clip->clip_id, model});
      auto put = [&](const std::string& model, Cell cell) {
        table.cells[CellKey{clip->clip_id, model, std::string(cells::kRr)}] = std::move(cell);
      };
      if (!complete) {
        for (const auto& model : ctx.models) {
          bool has = ctx.captions.contains({clip->clip_id, model});
          put(model, Cell::excluded(std::string(has ? kIncompleteClip : kNoCaption)));
        }
        continue;
      }
      std::map<ClipModelKey, double> sims;
      std::string missing;
      for (const auto& model : ctx.models) {
        const Cell* c = table.find(clip->clip_id, model, cells::kTextSim);
        if (c && c->has_value()) {
          sims[{clip->clip_id, model}] = c->value;
        } else if (missing.empty()) {
          missing = model;
        }
      }
      if (!missing.empty()) {
        for (const auto& model : ctx.models) {
          put(model, Cell::error(ErrorKind::kIncompleteMatrix, "no textsim value for model " + missing));
        }
        continue;
      }
      auto ranked = embedding::mrr(sims);
      for (const auto& model : ctx.models) put(model, Cell::of(ranked.per_model_mrr.at(model)));
    }
  }

  if (config.metrics.contains(Metric::kShuffleTest)) {
    std::vector<corpus::ClipRecord> kept;
    for (const auto* c : sorted) kept.push_back(*c);
    for (const auto& model : ctx.models) {
      std::vector<corpus::CaptionRecord> own;
      for (const auto& [key, caption] : ctx.captions) {
        if (key.second == model) own.push_back({key.first, model, caption});
      }
      try {
        table.shuffle[model] = embedding::shuffled_pairs_test(kept, own, *ctx.be.sentence, config.seed);
      } catch (const Error& e) {
        table.shuffle_errors[model] = e.what();
      }
    }
  }

  for (const auto& [key, cell] : table.cells) {
    if (cell.status == CellStatus::kError) ++local_stats.error_cells;
  }
  local_stats.memo = memo.stats();
  if (!config.record_fixtures.empty()) memo.export_fixtures().save(config.record_fixtures);
  if (stats) *stats = local_stats;
  return table;
}

embedding::MrrTable rank(const ScoreTable& table) {
  std::map<ClipModelKey, double> sims;
  for (const auto& clip_id : table.complete_clips()) {
    std::map<ClipModelKey, double> row;
    for (const auto& model : table.models) {
      const Cell* c = table.find(clip_id, model, cells::kTextSim);
      if (c && c->has_value()) row[{clip_id, model}] = c->value;
    }
    if (row.size() == table.models.size()) sims.insert(row.begin(), row.end());
  }
  if (sims.empty()) throw Error(ErrorKind::kEmptyTable, "no clip has textsim values for every model");
  return embedding::mrr(sims);
}

// ---- aggregate ---------------------------------------------------------------

namespace {

using Column = std::vector<std::pair<const std::string*, const Cell*>>;  // (clip_id, cell), clip order

bool all_zero(const std::optional<std::string>& bits) {
  return bits && bits->find('1') == std::string::npos;
}

MetricBoard make_board(const std::string& metric, std::string_view aggregation,
                       const std::vector<std::string>& models, const std::map<std::string, Column>& columns,
                       const std::function<bool(const std::string& clip, const std::string& model)>& in_scope,
                       const std::function<bool(const std::string& clip, const std::string& model)>& exclude) {
  MetricBoard board{metric, std::string(aggregation), {}};
  for (const auto& model : models) {
    LeaderboardRow row{model, std::nullopt, 0, 0, 0, false};
    double sum = 0.0;
    auto it = columns.find(model);
    if (it != columns.end()) {
      for (const auto& [clip, cell] : it->second) {
        if (!in_scope(*clip, model)) continue;
        if (cell->status == CellStatus::kExcluded || (cell->has_value() && exclude(*clip, model))) {
          ++row.n_excluded;
        } else if (cell->status == CellStatus::kError) {
          ++row.n_failed;
        } else {
          sum += cell->value;
          ++row.n_evaluated;
        }
      }
    }
    if (row.n_evaluated > 0) row.mean = sum / static_cast<double>(row.n_evaluated);
    board.rows.push_back(std::move(row));
  }
  LeaderboardRow* best = nullptr;
  for (auto& row : board.rows) {
    if (row.mean && (!best || *row.mean > *best->mean)) best = &row;
  }
  if (best) best->best = true;
  return board;
}

}  // namespace

const MetricBoard* ScopeBoard::board(std::string_view metric, std::string_view aggregation) const {
  for (const auto& b : boards) {
    if (b.metric == metric && b.aggregation == aggregation) return &b;
  }
  return nullptr;
}

const ScopeBoard* Leaderboard::scope(std::string_view name) const {
  for (const auto& s : scopes) {
    if (s.scope == name) return &s;
  }
  return nullptr;
}

Leaderboard aggregate(const ScoreTable& table) {
  if (table.cells.empty()) throw Error(ErrorKind::kEmptyTable, "score table has no cells");

  std::map<std::string, std::map<std::string, Column>> by_metric;  // metric -> model -> column
  for (const auto& [key, cell] : table.cells) {
    by_metric[key.metric][key.model_id].emplace_back(&key.clip_id, &cell);
  }
  std::set<std::string> complete;
  for (auto& c : table.complete_clips()) complete.insert(std::move(c));

  std::vector<std::string> scope_names{"all"};
  {
    std::set<std::string> sources;
    for (const auto& [id, info] : table.clips) sources.insert(info.source_dataset);
    scope_names.insert(scope_names.end(), sources.begin(), sources.end());
  }

  auto both_empty = [&](const std::string& clip, const std::string& model) {
    auto info = table.clips.find(clip);
    auto detail = table.details.find({clip, model});
    return info != table.clips.end() && detail != table.details.end() &&
           all_zero(info->second.gt_themes) && all_zero(detail->second.pred_themes);
  };
  auto never = [](const std::string&, const std::string&) { return false; };

  Leaderboard lb;
  lb.provenance = table.provenance;
  for (const auto& scope : scope_names) {
    auto clip_in_scope = [&](const std::string& clip) {
      if (scope == "all") return true;
      auto it = table.clips.find(clip);
      return it != table.clips.end() && it->second.source_dataset == scope;
    };
    ScopeBoard sb;
    sb.scope = scope;
    for (const auto& [id, info] : table.clips) {
      if (!clip_in_scope(id)) continue;
      ++sb.n_clips;
      sb.reference_length.mean_words += static_cast<double>(info.reference_words);
      ++sb.reference_length.n;
    }
    if (sb.reference_length.n > 0) sb.reference_length.mean_words /= static_cast<double>(sb.reference_length.n);

    auto full = [&](const std::string& clip, const std::string&) { return clip_in_scope(clip); };
    auto inter = [&](const std::string& clip, const std::string&) {
      return clip_in_scope(clip) && complete.contains(clip);
    };
    for (const auto& [metric, columns] : by_metric) {
      if (metric == cells::kCaptionWords) continue;
      if (metric == cells::kRr) {
        sb.boards.push_back(make_board(metric, kIntersection, table.models, columns, full, never));
        continue;
      }
      sb.boards.push_back(make_board(metric, kFullCoverage, table.models, columns, full, never));
      sb.boards.push_back(make_board(metric, kIntersection, table.models, columns, inter, never));
      if (metric == cells::kTfs) {
        sb.boards.push_back(make_board(metric, kExcludingBothEmpty, table.models, columns, full, both_empty));
        for (const auto& model : table.models) {
          std::size_t n = 0;
          for (const auto& [clip, cell] : columns.count(model) ? columns.at(model) : Column{}) {
            if (clip_in_scope(*clip) && cell->has_value() && both_empty(*clip, model)) ++n;
          }
          sb.tfs_both_empty[model] = n;
        }
      }
    }
    if (auto words = by_metric.find(std::string(cells::kCaptionWords)); words != by_metric.end()) {
      for (const auto& model : table.models) {
        CaptionLengthStats st;
        if (auto col = words->second.find(model); col != words->second.end()) {
          for (const auto& [clip, cell] : col->second) {
            if (!clip_in_scope(*clip) || !cell->has_value()) continue;
            st.mean_words += cell->value;
            ++st.n;
          }
        }
        if (st.n > 0) st.mean_words /= static_cast<double>(st.n);
        sb.caption_length[model] = st;
      }
    }
    lb.scopes.push_back(std::move(sb));
  }
  return lb;
}

json to_json(const Leaderboard& lb) {
  json scopes = json::array();
  for (const auto& sb : lb.scopes) {
    json boards = json::array();
    for (const auto& b : sb.boards) {
      json rows = json::array();
      for (const auto& r : b.rows) {
        rows.push_back({{"model_id", r.model_id},
                        {"mean", r.mean ? json(*r.mean) : json(nullptr)},
                        {"n_evaluated", r.n_evaluated},
                        {"n_excluded", r.n_excluded},
                        {"n_failed", r.n_failed},
                        {"best", r.best}});
      }
      boards.push_back({{"metric", b.metric}, {"aggregation", b.aggregation}, {"rows", rows}});
    }
    json lengths = json::object();
    for (const auto& [model, st] : sb.caption_length) {
      lengths[model] = {{"mean_words", st.mean_words}, {"n", st.n}};
    }
    scopes.push_back({{"scope", sb.scope},
                      {"n_clips", sb.n_clips},
                      {"boards", boards},
                      {"caption_length", lengths},
                      {"reference_length",
                       {{"mean_words", sb.reference_length.mean_words}, {"n", sb.reference_length.n}}},
                      {"tfs_both_empty", sb.tfs_both_empty}});
  }
  return {{"format", kLeaderboardFormat}, {"version", 1}, {"provenance", lb.provenance}, {"scopes", scopes}};
}

Leaderboard leaderboard_from_json(const json& j) {
  try {
    if (j.value("format", "") != kLeaderboardFormat) {
      throw Error(ErrorKind::kMalformedFile, "not a newscap leaderboard");
    }
    Leaderboard lb;
    lb.provenance = j.at("provenance");
    for (const auto& s : j.at("scopes")) {
      ScopeBoard sb;
      sb.scope = s.at("scope").get<std::string>();
      sb.n_clips = s.at("n_clips").get<std::size_t>();
      for (const auto& b : s.at("boards")) {
        MetricBoard mb{b.at("metric").get<std::string>(), b.at("aggregation").get<std::string>(), {}};
        for (const auto& r : b.at("rows")) {
          LeaderboardRow row;
          row.model_id = r.at("model_id").get<std::string>();
          if (!r.at("mean").is_null()) row.mean = r["mean"].get<double>();
          row.n_evaluated = r.at("n_evaluated").get<std::size_t>();
          row.n_excluded = r.at("n_excluded").get<std::size_t>();
          row.n_failed = r.at("n_failed").get<std::size_t>();
          row.best = r.at("best").get<bool>();
          mb.rows.push_back(std::move(row));
        }
        sb.boards.push_back(std::move(mb));
      }
      for (const auto& [model, st] : s.at("caption_length").items()) {
        sb.caption_length[model] = {st.at("mean_words").get<double>(), st.at("n").get<std::size_t>()};
      }
      const auto& ref = s.at("reference_length");
      sb.reference_length = {ref.at("mean_words").get<double>(), ref.at("n").get<std::size_t>()};
      sb.tfs_both_empty = s.at("tfs_both_empty").get<std::map<std::string, std::size_t>>();
      lb.scopes.push_back(std::move(sb));
    }
    return lb;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kMalformedFile, std::string("leaderboard: ") + e.what());
  }
}

}  // namespace newscap::harness
