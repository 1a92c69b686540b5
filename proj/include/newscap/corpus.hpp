#pragma once

#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "newscap/error.hpp"

namespace newscap::corpus {

enum class SourceDataset { kChTV, kBBC, kOther };

std::string to_string(SourceDataset source);
SourceDataset parse_source(std::string_view name);

struct ClipRecord {
  std::string clip_id;
  double duration_s = 0.0;
  std::string title;
  std::string reference_description;
  std::vector<std::string> thematic_descriptors;
  SourceDataset source_dataset = SourceDataset::kOther;
  // Language of the reference description; descriptions are used as-is.
  std::string language = "en";

  bool operator==(const ClipRecord&) const = default;
};

struct CaptionRecord {
  std::string clip_id;
  std::string model_id;
  std::string caption_text;

  bool operator==(const CaptionRecord&) const = default;
};

// Problem with a single record; loading continues past it.
struct RecordIssue {
  ErrorKind kind = ErrorKind::kRecordError;
  std::size_t line = 0;  // 1-based line (json-lines) or element index + 1 (json-array)
  std::string clip_id;
  std::vector<std::string> fields;  // missing or invalid field names
  std::string message;
};

template <typename Record>
struct LoadResult {
  std::vector<Record> records;
  std::vector<RecordIssue> issues;

  bool ok() const { return issues.empty(); }
};

enum class ManifestFormat { kJsonLines, kJsonArray };

// Throws Error{kIo} if the file cannot be read and Error{kMalformedFile} if a
// json-array container does not parse.
LoadResult<ClipRecord> load_manifest(const std::filesystem::path& path, ManifestFormat format);
LoadResult<ClipRecord> parse_manifest(std::string_view content, ManifestFormat format);

LoadResult<CaptionRecord> load_captions(const std::filesystem::path& path);
LoadResult<CaptionRecord> parse_captions(std::string_view content);

struct FilterResult {
  std::vector<ClipRecord> kept;
  std::size_t dropped = 0;
};

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

// Keeps min_s <= duration_s <= max_s, in input order.
FilterResult filter_clips(const std::vector<ClipRecord>& clips, double min_s, double max_s);

class TagDictionary {
 public:
  TagDictionary() = default;

  // Keys are stored lowercase + trimmed; a second key normalizing to the same
  // value raises Error{kRecordError}.
  void add(std::string_view source_tag, std::string english_tag);
  std::optional<std::string> lookup(std::string_view tag) const;
  std::size_t size() const { return entries_.size(); }
  const std::map<std::string, std::string>& entries() const { return entries_; }

  static TagDictionary load(const std::filesystem::path& path);
  static TagDictionary parse_tsv(std::string_view content);
  static TagDictionary parse_json(std::string_view content);

 private:
  std::map<std::string, std::string> entries_;
};

struct TranslationResult {
  std::vector<std::string> tags;
  std::vector<std::string> unmapped;
};

TranslationResult translate_tags(const std::vector<std::string>& descriptors,
                                 const TagDictionary& dict);

struct AlignmentReport {
  std::vector<std::string> models;
  // model_id -> clip ids in the manifest with no caption from that model
  std::map<std::string, std::vector<std::string>> gaps;
  // caption clip ids that are not in the manifest
  std::vector<std::string> orphans;
  // clips captioned by every model, in manifest order
  std::vector<std::string> complete_subset;

  bool fully_aligned() const;
};

AlignmentReport validate_alignment(const std::vector<ClipRecord>& clips,
                                   const std::vector<CaptionRecord>& captions);

struct HistogramBin {
  double lower = 0.0;
  std::size_t count = 0;

  bool operator==(const HistogramBin&) const = default;
};

struct CorpusStats {
  std::vector<HistogramBin> duration_histogram;
  std::vector<HistogramBin> description_word_count_histogram;
  std::map<std::string, std::size_t> descriptor_frequency;
};

CorpusStats descriptive_stats(const std::vector<ClipRecord>& clips, double duration_bin_s,
                              double word_bin);

// Bins [k*w, (k+1)*w) from zero up to the largest value; empty input gives
// an empty histogram.
std::vector<HistogramBin> histogram(const std::vector<double>& values, double bin_width);

nlohmann::json to_json(const ClipRecord& clip);
ClipRecord clip_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CaptionRecord& caption);
CaptionRecord caption_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RecordIssue& issue);
nlohmann::json to_json(const AlignmentReport& report);
nlohmann::json to_json(const CorpusStats& stats);

// Filtered clips plus their captions, as written by `newscap ingest`.
struct CorpusBundle {
  std::vector<ClipRecord> clips;
  std::vector<CaptionRecord> captions;
  nlohmann::json ingest_report = nlohmann::json::object();
};

void save_bundle(const CorpusBundle& bundle, const std::filesystem::path& path);
CorpusBundle load_bundle(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace newscap::corpus
