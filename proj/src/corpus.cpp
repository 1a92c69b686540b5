#include "newscap/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "newscap/text.hpp"

namespace newscap::corpus {

using nlohmann::json;

std::string to_string(SourceDataset source) {
  switch (source) {
    case SourceDataset::kChTV: return "ChTV";
    case SourceDataset::kBBC: return "BBC";
    case SourceDataset::kOther: return "other";
  }
  return "other";
}

SourceDataset parse_source(std::string_view name) {
  std::string lowered = text::lowercase(text::trim(name));
  if (lowered == "chtv" || lowered == "c13") return SourceDataset::kChTV;
  if (lowered == "bbc") return SourceDataset::kBBC;
  return SourceDataset::kOther;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + path.string());
}

namespace {

bool non_empty_string(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it != obj.end() && it->is_string() && !text::trim(it->get<std::string>()).empty();
}

std::optional<ClipRecord> parse_clip(const json& obj, std::size_t line, RecordIssue& issue) {
  issue = RecordIssue{};
  issue.line = line;
  if (!obj.is_object()) {
    issue.message = "record is not a JSON object";
    return std::nullopt;
  }
  if (auto it = obj.find("clip_id"); it != obj.end() && it->is_string()) {
    issue.clip_id = it->get<std::string>();
  }
  if (!non_empty_string(obj, "clip_id")) issue.fields.emplace_back("clip_id");
  auto dur = obj.find("duration_s");
  if (dur == obj.end() || !dur->is_number() || !std::isfinite(dur->get<double>()) ||
      dur->get<double>() < 0.0) {
    issue.fields.emplace_back("duration_s");
  }
  if (!non_empty_string(obj, "description")) issue.fields.emplace_back("description");
  if (auto it = obj.find("title"); it != obj.end() && !it->is_string() && !it->is_null()) {
    issue.fields.emplace_back("title");
  }
  if (auto it = obj.find("descriptors"); it != obj.end() && !it->is_null()) {
    bool valid = it->is_array() &&
                 std::all_of(it->begin(), it->end(), [](const json& d) { return d.is_string(); });
    if (!valid) issue.fields.emplace_back("descriptors");
  }
  if (!issue.fields.empty()) {
    issue.message = "missing or invalid field(s)";
    return std::nullopt;
  }

  ClipRecord clip;
  clip.clip_id = obj["clip_id"].get<std::string>();
  clip.duration_s = obj["duration_s"].get<double>();
  clip.reference_description = obj["description"].get<std::string>();
  if (auto it = obj.find("title"); it != obj.end() && it->is_string()) {
    clip.title = it->get<std::string>();
  }
  if (auto it = obj.find("descriptors"); it != obj.end() && it->is_array()) {
    clip.thematic_descriptors = it->get<std::vector<std::string>>();
  }
  if (auto it = obj.find("source"); it != obj.end() && it->is_string()) {
    clip.source_dataset = parse_source(it->get<std::string>());
  }
  if (auto it = obj.find("language"); it != obj.end() && it->is_string()) {
    clip.language = it->get<std::string>();
  } else if (clip.source_dataset == SourceDataset::kChTV) {
    clip.language = "es";
  }
  return clip;
}

std::optional<CaptionRecord> parse_caption(const json& obj, std::size_t line,
                                           RecordIssue& issue) {
  issue = RecordIssue{};
  issue.line = line;
  if (!obj.is_object()) {
    issue.message = "record is not a JSON object";
    return std::nullopt;
  }
  if (auto it = obj.find("clip_id"); it != obj.end() && it->is_string()) {
    issue.clip_id = it->get<std::string>();
  }
  for (const char* key : {"clip_id", "model_id", "caption"}) {
    if (!non_empty_string(obj, key)) issue.fields.emplace_back(key);
  }
  if (!issue.fields.empty()) {
    issue.message = "missing or invalid field(s)";
    return std::nullopt;
  }
  return CaptionRecord{obj["clip_id"].get<std::string>(), obj["model_id"].get<std::string>(),
                       obj["caption"].get<std::string>()};
}

// Yields (line number, parsed value or nullopt) for each non-blank line.
template <typename Fn>
void for_each_json_line(std::string_view content, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= content.size()) {
    std::size_t end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(pos, end - pos);
    ++line_no;
    pos = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
      if (end == content.size()) break;
      continue;
    }
    json parsed = json::parse(line, nullptr, false);
    fn(line_no, parsed.is_discarded() ? std::optional<json>() : std::optional<json>(parsed));
    if (end == content.size()) break;
  }
}

template <typename Record, typename ParseFn, typename KeyFn>
LoadResult<Record> parse_records(std::string_view content, bool as_array, ParseFn parse,
                                 KeyFn key_of, ErrorKind duplicate_kind) {
  LoadResult<Record> result;
  std::set<std::string> seen;
  auto handle = [&](std::size_t line, const std::optional<json>& value) {
    RecordIssue issue;
    if (!value) {
      issue.line = line;
      issue.message = "line is not valid JSON";
      result.issues.push_back(std::move(issue));
      return;
    }
    auto record = parse(*value, line, issue);
    if (!record) {
      result.issues.push_back(std::move(issue));
      return;
    }
    std::string key = key_of(*record);
    if (!seen.insert(key).second) {
      issue.kind = duplicate_kind;
      issue.message = "duplicate key " + key;
      result.issues.push_back(std::move(issue));
      return;
    }
    result.records.push_back(std::move(*record));
  };

  if (as_array) {
    json root = json::parse(content, nullptr, false);
    if (root.is_discarded() || !root.is_array()) {
      throw Error(ErrorKind::kMalformedFile, "expected a JSON array of records");
    }
    std::size_t index = 0;
    for (const auto& element : root) handle(++index, element);
  } else {
    for_each_json_line(content, handle);
  }
  return result;
}

bool looks_like_array(std::string_view content) {
  auto first = content.find_first_not_of(" \t\r\n");
  return first != std::string_view::npos && content[first] == '[';
}

}  // namespace

LoadResult<ClipRecord> parse_manifest(std::string_view content, ManifestFormat format) {
  return parse_records<ClipRecord>(
      content, format == ManifestFormat::kJsonArray, parse_clip,
      [](const ClipRecord& c) { return c.clip_id; }, ErrorKind::kDuplicateClipId);
}

LoadResult<ClipRecord> load_manifest(const std::filesystem::path& path, ManifestFormat format) {
  return parse_manifest(read_file(path), format);
}

LoadResult<CaptionRecord> parse_captions(std::string_view content) {
  return parse_records<CaptionRecord>(
      content, looks_like_array(content), parse_caption,
      [](const CaptionRecord& c) { return c.clip_id + "\x1f" + c.model_id; },
      ErrorKind::kDuplicateCaptionKey);
}

LoadResult<CaptionRecord> load_captions(const std::filesystem::path& path) {
  return parse_captions(read_file(path));
}

FilterResult filter_clips(const std::vector<ClipRecord>& clips, double min_s, double max_s) {
  if (std::isnan(min_s) || std::isnan(max_s) || min_s < 0.0 || min_s > max_s) {
    throw Error(ErrorKind::kInvalidBounds, "duration bounds must satisfy 0 <= min <= max");
  }
  FilterResult result;
  for (const auto& clip : clips) {
    if (clip.duration_s >= min_s && clip.duration_s <= max_s) {
      result.kept.push_back(clip);
    } else {
      ++result.dropped;
    }
  }
  return result;
}

namespace {
std::string tag_key(std::string_view tag) { return text::lowercase(text::trim(tag)); }
}  // namespace

void TagDictionary::add(std::string_view source_tag, std::string english_tag) {
  std::string key = tag_key(source_tag);
  auto [it, inserted] = entries_.emplace(key, std::move(english_tag));
  if (!inserted) {
    throw Error(ErrorKind::kRecordError, "duplicate tag dictionary key '" + key + "'");
  }
}

std::optional<std::string> TagDictionary::lookup(std::string_view tag) const {
  auto it = entries_.find(tag_key(tag));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

TagDictionary TagDictionary::parse_tsv(std::string_view content) {
  TagDictionary dict;
  std::istringstream in{std::string(content)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw Error(ErrorKind::kMalformedFile,
                  "tag dictionary line " + std::to_string(line_no) + " has no TAB");
    }
    dict.add(line.substr(0, tab), text::trim(line.substr(tab + 1)));
  }
  return dict;
}

TagDictionary TagDictionary::parse_json(std::string_view content) {
  json root = json::parse(content, nullptr, false);
  if (root.is_discarded() || !root.is_object()) {
    throw Error(ErrorKind::kMalformedFile, "tag dictionary JSON must be an object");
  }
  TagDictionary dict;
  for (const auto& [key, value] : root.items()) {
    if (!value.is_string()) {
      throw Error(ErrorKind::kMalformedFile, "tag dictionary value for '" + key + "' not a string");
    }
    dict.add(key, value.get<std::string>());
  }
  return dict;
}

TagDictionary TagDictionary::load(const std::filesystem::path& path) {
  std::string content = read_file(path);
  auto first = content.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && content[first] == '{') return parse_json(content);
  return parse_tsv(content);
}

TranslationResult translate_tags(const std::vector<std::string>& descriptors,
                                 const TagDictionary& dict) {
  TranslationResult result;
  result.tags.reserve(descriptors.size());
  for (const auto& d : descriptors) {
    if (auto mapped = dict.lookup(d)) {
      result.tags.push_back(*mapped);
    } else {
      result.tags.push_back(d);
      result.unmapped.push_back(d);
    }
  }
  return result;
}

bool AlignmentReport::fully_aligned() const {
  return orphans.empty() &&
         std::all_of(gaps.begin(), gaps.end(), [](const auto& g) { return g.second.empty(); });
}

AlignmentReport validate_alignment(const std::vector<ClipRecord>& clips,
                                   const std::vector<CaptionRecord>& captions) {
  AlignmentReport report;
  std::set<std::string> models;
  std::set<std::pair<std::string, std::string>> present;
  std::set<std::string> manifest_ids;
  for (const auto& clip : clips) manifest_ids.insert(clip.clip_id);

  std::set<std::string> orphan_set;
  for (const auto& c : captions) {
    models.insert(c.model_id);
    present.emplace(c.clip_id, c.model_id);
    if (!manifest_ids.contains(c.clip_id)) orphan_set.insert(c.clip_id);
  }
  report.models.assign(models.begin(), models.end());
  report.orphans.assign(orphan_set.begin(), orphan_set.end());

  for (const auto& model : report.models) report.gaps[model];
  for (const auto& clip : clips) {
    bool complete = !models.empty();
    for (const auto& model : report.models) {
      if (!present.contains({clip.clip_id, model})) {
        report.gaps[model].push_back(clip.clip_id);
        complete = false;
      }
    }
    if (complete) report.complete_subset.push_back(clip.clip_id);
  }
  return report;
}

std::vector<HistogramBin> histogram(const std::vector<double>& values, double bin_width) {
  if (!(bin_width > 0.0) || !std::isfinite(bin_width)) {
    throw Error(ErrorKind::kInvalidBounds, "histogram bin width must be positive");
  }
  std::vector<HistogramBin> bins;
  for (double v : values) {
    auto index = static_cast<std::size_t>(std::floor(std::max(v, 0.0) / bin_width));
    if (index >= bins.size()) {
      std::size_t old = bins.size();
      bins.resize(index + 1);
      for (std::size_t i = old; i < bins.size(); ++i) {
        bins[i].lower = static_cast<double>(i) * bin_width;
      }
    }
    ++bins[index].count;
  }
  return bins;
}

CorpusStats descriptive_stats(const std::vector<ClipRecord>& clips, double duration_bin_s,
                              double word_bin) {
  if (!(duration_bin_s > 0.0) || !(word_bin > 0.0)) {
    throw Error(ErrorKind::kInvalidBounds, "bin widths must be positive");
  }
  std::vector<double> durations;
  std::vector<double> words;
  CorpusStats stats;
  for (const auto& clip : clips) {
    durations.push_back(clip.duration_s);
    words.push_back(static_cast<double>(text::word_count(clip.reference_description)));
    for (const auto& d : clip.thematic_descriptors) ++stats.descriptor_frequency[d];
  }
  stats.duration_histogram = histogram(durations, duration_bin_s);
  stats.description_word_count_histogram = histogram(words, word_bin);
  return stats;
}

json to_json(const ClipRecord& clip) {
  return json{{"clip_id", clip.clip_id},
              {"duration_s", clip.duration_s},
              {"title", clip.title},
              {"description", clip.reference_description},
              {"descriptors", clip.thematic_descriptors},
              {"source", to_string(clip.source_dataset)},
              {"language", clip.language}};
}

ClipRecord clip_from_json(const json& j) {
  RecordIssue issue;
  auto clip = parse_clip(j, 0, issue);
  if (!clip) throw Error(ErrorKind::kRecordError, issue.message + " in clip " + issue.clip_id);
  return *clip;
}

json to_json(const CaptionRecord& caption) {
  return json{{"clip_id", caption.clip_id},
              {"model_id", caption.model_id},
              {"caption", caption.caption_text}};
}

CaptionRecord caption_from_json(const json& j) {
  RecordIssue issue;
  auto caption = parse_caption(j, 0, issue);
  if (!caption) throw Error(ErrorKind::kRecordError, issue.message + " in clip " + issue.clip_id);
  return *caption;
}

json to_json(const RecordIssue& issue) {
  return json{{"kind", std::string(newscap::to_string(issue.kind))},
              {"line", issue.line},
              {"clip_id", issue.clip_id},
              {"fields", issue.fields},
              {"message", issue.message}};
}

json to_json(const AlignmentReport& report) {
  return json{{"models", report.models},
              {"gaps", report.gaps},
              {"orphans", report.orphans},
              {"complete_subset", report.complete_subset},
              {"fully_aligned", report.fully_aligned()}};
}

json to_json(const CorpusStats& stats) {
  auto bins = [](const std::vector<HistogramBin>& h) {
    json arr = json::array();
    for (const auto& b : h) arr.push_back({{"lower", b.lower}, {"count", b.count}});
    return arr;
  };
  return json{{"duration_histogram", bins(stats.duration_histogram)},
              {"description_word_count_histogram", bins(stats.description_word_count_histogram)},
              {"descriptor_frequency", stats.descriptor_frequency}};
}

void save_bundle(const CorpusBundle& bundle, const std::filesystem::path& path) {
  json clips = json::array();
  for (const auto& c : bundle.clips) clips.push_back(to_json(c));
  json captions = json::array();
  for (const auto& c : bundle.captions) captions.push_back(to_json(c));
  json root{{"format", "newscap-corpus"},
            {"version", 1},
            {"clips", clips},
            {"captions", captions},
            {"ingest_report", bundle.ingest_report}};
  write_file(path, root.dump(1) + "\n");
}

CorpusBundle load_bundle(const std::filesystem::path& path) {
  json root = json::parse(read_file(path), nullptr, false);
  if (root.is_discarded() || !root.is_object() || root.value("format", "") != "newscap-corpus") {
    throw Error(ErrorKind::kMalformedFile, path.string() + " is not a corpus bundle");
  }
  CorpusBundle bundle;
  for (const auto& c : root.at("clips")) bundle.clips.push_back(clip_from_json(c));
  for (const auto& c : root.at("captions")) bundle.captions.push_back(caption_from_json(c));
  bundle.ingest_report = root.value("ingest_report", json::object());
  return bundle;
}

}  // namespace newscap::corpus
