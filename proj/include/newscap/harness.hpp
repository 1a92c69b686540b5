#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "newscap/backends.hpp"
#include "newscap/corpus.hpp"
#include "newscap/embedding.hpp"
#include "newscap/fidelity.hpp"
#include "newscap/lexical.hpp"
#include "newscap/memo.hpp"

namespace newscap::harness {

enum class Metric { kRougeL, kMeteor, kTextSim, kBertScore, kClipScore, kTfs, kEfs, kMrr, kShuffleTest };

std::string_view to_string(Metric metric);
// Names as on the command line: rougeL, meteor, textsim, bertscore,
// clipscore, tfs, efs, mrr, shuffle-test. Throws Error{kInvalidConfig}.
Metric parse_metric(std::string_view name);
std::set<Metric> parse_metric_list(std::string_view comma_separated);

// Cell metric names. bertscore fills three cells and efs fills three.
namespace cells {
inline constexpr std::string_view kRougeL = "rougeL";
inline constexpr std::string_view kMeteor = "meteor";
inline constexpr std::string_view kTextSim = "textsim";
inline constexpr std::string_view kBertP = "bertscore_p";
inline constexpr std::string_view kBertR = "bertscore_r";
inline constexpr std::string_view kBertF1 = "bertscore_f1";
inline constexpr std::string_view kClipScore = "clipscore";
inline constexpr std::string_view kTfs = "tfs";
inline constexpr std::string_view kEfs = "efs";
inline constexpr std::string_view kEfsP = "efs_precision";
inline constexpr std::string_view kEfsR = "efs_recall";
inline constexpr std::string_view kRr = "rr";
inline constexpr std::string_view kCaptionWords = "caption_words";
}  // namespace cells

struct RunConfig {
  std::set<Metric> metrics;
  backends::BackendSet backends;

  double tau = 0.5;
  std::string hypothesis_template = fidelity::ThemeClassifierConfig{}.hypothesis_template;
  double theta = 85.0;
  std::size_t frame_budget = embedding::kDefaultFrameBudget;
  double min_duration_s = 0.0;
  double max_duration_s = corpus::kUnbounded;
  std::uint64_t seed = 0;
  std::size_t workers = 1;

  lexical::MatchResources meteor;
  std::shared_ptr<const fidelity::ThemeLabelSet> theme_labels;  // null: built-in v1 list
  // clip_id -> frame embeddings in the visual-text space, for clipscore.
  std::map<std::string, std::vector<EmbeddingVector>> frame_embeddings;

  // Not part of the provenance snapshot.
  std::filesystem::path checkpoint_path;   // empty: no checkpointing
  std::filesystem::path record_fixtures;   // empty: don't export backend responses
  // Rethrow Error{kBackendUnavailable}/Error{kTimeout} met while
  // prefetching instead of letting every cell fail on its own.
  bool abort_on_unavailable = true;

  // Throws Error{kInvalidConfig} (or kInvalidBounds) on unusable settings,
  // including a selected metric whose backend is unbound.
  void validate() const;
  const fidelity::ThemeLabelSet& labels() const;

  // Every setting that can change a cell value, plus backend identities.
  nlohmann::json snapshot() const;
  std::string config_hash() const;
};

enum class CellStatus { kValue, kExcluded, kError };

struct Cell {
  CellStatus status = CellStatus::kValue;
  double value = 0.0;
  std::string reason;   // exclusion reason or error kind
  std::string message;  // error detail

  static Cell of(double v) { return {CellStatus::kValue, v, {}, {}}; }
  static Cell excluded(std::string reason) { return {CellStatus::kExcluded, 0.0, std::move(reason), {}}; }
  static Cell error(ErrorKind kind, std::string message);

  bool has_value() const { return status == CellStatus::kValue; }
  bool operator==(const Cell&) const = default;
};

inline constexpr std::string_view kNoCaption = "no-caption";
inline constexpr std::string_view kNoGtEntities = "no-gt-entities";
inline constexpr std::string_view kIncompleteClip = "incomplete-clip";

struct CellKey {
  std::string clip_id;
  std::string model_id;
  std::string metric;

  auto operator<=>(const CellKey&) const = default;
};

struct ClipInfo {
  std::string source_dataset;
  std::string language;
  std::size_t reference_words = 0;
  std::optional<std::string> gt_themes;  // bit string, when tfs ran

  bool operator==(const ClipInfo&) const = default;
};

struct EntityFlag {
  std::string surface;
  std::string type;
  bool matched = false;

  bool operator==(const EntityFlag&) const = default;
};

struct PairDetail {
  std::optional<std::string> pred_themes;
  std::vector<EntityFlag> gt_entities;
  std::vector<EntityFlag> model_entities;

  bool operator==(const PairDetail&) const = default;
};

struct ScoreTable {
  std::map<CellKey, Cell> cells;
  std::map<std::string, ClipInfo> clips;
  std::vector<std::string> models;  // sorted
  std::map<embedding::ClipModelKey, PairDetail> details;
  std::map<std::string, embedding::ShuffleTestResult> shuffle;
  std::map<std::string, std::string> shuffle_errors;
  nlohmann::json provenance = nlohmann::json::object();

  const Cell* find(std::string_view clip_id, std::string_view model_id,
                   std::string_view metric) const;
  // Distinct metric names present, sorted.
  std::vector<std::string> metric_names() const;
  // Clips where no model's caption is missing.
  std::vector<std::string> complete_clips() const;

  bool operator==(const ScoreTable&) const;
};

nlohmann::json to_json(const ScoreTable& table);
ScoreTable table_from_json(const nlohmann::json& j);
void save_table(const ScoreTable& table, const std::filesystem::path& path);
ScoreTable load_table(const std::filesystem::path& path);

struct EvaluateStats {
  backends::MemoStats memo;
  std::size_t resumed_clips = 0;
  std::size_t computed_clips = 0;
  std::size_t dropped_clips = 0;  // outside the duration bounds
  std::size_t error_cells = 0;
};

// Scores every (clip, model, metric) cell. Per-cell failures become error
// cells. With a checkpoint path, finished clips are appended to it as they
// complete and a rerun with the same configuration resumes from it.
ScoreTable evaluate(const std::vector<corpus::ClipRecord>& clips,
                    const std::vector<corpus::CaptionRecord>& captions, const RunConfig& config,
                    EvaluateStats* stats = nullptr);

// Mean reciprocal rank over the clips where every model has a textsim value.
embedding::MrrTable rank(const ScoreTable& table);

struct LeaderboardRow {
  std::string model_id;
  std::optional<double> mean;  // empty when nothing was evaluated
  std::size_t n_evaluated = 0;
  std::size_t n_excluded = 0;
  std::size_t n_failed = 0;
  bool best = false;

  bool operator==(const LeaderboardRow&) const = default;
};

inline constexpr std::string_view kFullCoverage = "full-coverage";
inline constexpr std::string_view kIntersection = "intersection";
inline constexpr std::string_view kExcludingBothEmpty = "excluding-both-empty";

struct MetricBoard {
  std::string metric;
  std::string aggregation;
  std::vector<LeaderboardRow> rows;  // sorted by model_id

  bool operator==(const MetricBoard&) const = default;
};

struct CaptionLengthStats {
  double mean_words = 0.0;
  std::size_t n = 0;

  bool operator==(const CaptionLengthStats&) const = default;
};

struct ScopeBoard {
  std::string scope;  // "all" or a source dataset
  std::size_t n_clips = 0;
  std::vector<MetricBoard> boards;
  std::map<std::string, CaptionLengthStats> caption_length;  // model_id -> stats
  CaptionLengthStats reference_length;
  std::map<std::string, std::size_t> tfs_both_empty;  // model_id -> clip count

  const MetricBoard* board(std::string_view metric, std::string_view aggregation) const;
  bool operator==(const ScopeBoard&) const = default;
};

struct Leaderboard {
  std::vector<ScopeBoard> scopes;
  nlohmann::json provenance = nlohmann::json::object();

  const ScopeBoard* scope(std::string_view name) const;
  bool operator==(const Leaderboard&) const = default;
};

// Per scope and metric, the arithmetic mean of value cells in sorted clip
// order; the best row (ties: lowest model_id) is flagged. Throws
// Error{kEmptyTable}.
Leaderboard aggregate(const ScoreTable& table);

nlohmann::json to_json(const Leaderboard& leaderboard);
Leaderboard leaderboard_from_json(const nlohmann::json& j);

}  // namespace newscap::harness
