#include "newscap/report.hpp"

#include <array>
#include <cstdio>
#include <map>
#include <sstream>

#include "newscap/corpus.hpp"
#include "newscap/error.hpp"

namespace newscap::report {

using harness::Cell;
using harness::CellStatus;
using harness::Leaderboard;
using harness::MetricBoard;
using harness::ScopeBoard;
using harness::ScoreTable;
using nlohmann::json;

namespace {

constexpr std::string_view kReportFormat = "newscap-report";

struct Column {
  std::string_view metric;
  std::string_view aggregation;
  std::string_view title;
};

constexpr std::array<Column, 5> kSimilarityColumns{{
    {harness::cells::kTextSim, harness::kFullCoverage, "Text Sim."},
    {harness::cells::kClipScore, harness::kFullCoverage, "CLIPScore"},
    {harness::cells::kMeteor, harness::kFullCoverage, "METEOR"},
    {harness::cells::kRougeL, harness::kFullCoverage, "ROUGE-L"},
    {harness::cells::kBertF1, harness::kFullCoverage, "BERTScore F1"},
}};

constexpr std::array<Column, 6> kFidelityColumns{{
    {harness::cells::kTfs, harness::kFullCoverage, "TFS"},
    {harness::cells::kTfs, harness::kExcludingBothEmpty, "TFS (excl. both-empty)"},
    {harness::cells::kEfs, harness::kFullCoverage, "EFS"},
    {harness::cells::kEfsP, harness::kFullCoverage, "EFS P"},
    {harness::cells::kEfsR, harness::kFullCoverage, "EFS R"},
    {harness::cells::kRr, harness::kIntersection, "MRR"},
}};

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string csv_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string file_safe(std::string_view s) {
  std::string out;
  for (char c : s) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
              c == '_' || c == '.';
    out += ok ? c : '_';
  }
  return out.empty() ? "_" : out;
}

const harness::LeaderboardRow* row_for(const MetricBoard* board, const std::string& model) {
  if (!board) return nullptr;
  for (const auto& r : board->rows) {
    if (r.model_id == model) return &r;
  }
  return nullptr;
}

template <std::size_t N>
void table_md(std::ostringstream& out, const ScopeBoard& scope, const std::vector<std::string>& models,
              const std::array<Column, N>& columns, bool with_length) {
  std::vector<const MetricBoard*> boards;
  std::vector<Column> shown;
  for (const auto& c : columns) {
    if (const auto* b = scope.board(c.metric, c.aggregation)) {
      boards.push_back(b);
      shown.push_back(c);
    }
  }
  if (shown.empty() && !with_length) return;
  out << "| Model |";
  for (const auto& c : shown) out << ' ' << c.title << " |";
  if (with_length) out << " Mean words |";
  out << "\n|---|";
  for (std::size_t i = 0; i < shown.size(); ++i) out << "---:|";
  if (with_length) out << "---:|";
  out << '\n';
  for (const auto& model : models) {
    out << "| " << model << " |";
    for (const auto* b : boards) {
      const auto* r = row_for(b, model);
      if (!r || !r->mean) {
        out << " - |";
      } else if (r->best) {
        out << " **" << fixed3(*r->mean) << "** |";
      } else {
        out << ' ' << fixed3(*r->mean) << " |";
      }
    }
    if (with_length) {
      auto it = scope.caption_length.find(model);
      out << ' ' << (it != scope.caption_length.end() && it->second.n > 0 ? fixed3(it->second.mean_words) : "-")
          << " |";
    }
    out << '\n';
  }
  out << '\n';
}

void coverage_md(std::ostringstream& out, const ScopeBoard& scope, const std::vector<std::string>& models) {
  bool any = false;
  std::ostringstream body;
  for (const auto& b : scope.boards) {
    if (b.aggregation == harness::kIntersection && b.metric != harness::cells::kRr) continue;
    if (b.aggregation == harness::kExcludingBothEmpty) continue;
    for (const auto& model : models) {
      const auto* r = row_for(&b, model);
      if (!r || (r->n_excluded == 0 && r->n_failed == 0)) continue;
      any = true;
      body << "| " << b.metric << " | " << model << " | " << r->n_evaluated << " | " << r->n_excluded << " | "
           << r->n_failed << " |\n";
    }
  }
  if (!any) return;
  out << "Exclusions and failures:\n\n| Metric | Model | Evaluated | Excluded | Failed |\n|---|---|---:|---:|---:|\n"
      << body.str() << '\n';
}

std::vector<std::string> theme_labels(const ScoreTable& table) {
  std::vector<std::string> labels;
  const json& p = table.provenance;
  if (p.contains("config") && p["config"].contains("theme_labels")) {
    labels = p["config"]["theme_labels"].value("labels", std::vector<std::string>{});
  }
  return labels;
}

std::string theme_confusion_csv(const ScoreTable& table) {
  auto labels = theme_labels(table);
  // model -> slot -> (tp, fp, fn)
  std::map<std::string, std::map<std::size_t, std::array<std::size_t, 3>>> counts;
  for (const auto& [key, detail] : table.details) {
    if (!detail.pred_themes) continue;
    auto info = table.clips.find(key.first);
    if (info == table.clips.end() || !info->second.gt_themes) continue;
    const std::string& gt = *info->second.gt_themes;
    const std::string& pred = *detail.pred_themes;
    for (std::size_t i = 0; i < gt.size() && i < pred.size(); ++i) {
      auto& c = counts[key.second][i];
      if (gt[i] == '1' && pred[i] == '1') ++c[0];
      if (gt[i] == '0' && pred[i] == '1') ++c[1];
      if (gt[i] == '1' && pred[i] == '0') ++c[2];
    }
  }
  std::ostringstream out;
  out << "model_id,slot,label,tp,fp,fn\n";
  for (const auto& [model, slots] : counts) {
    for (const auto& [slot, c] : slots) {
      std::string label = slot < labels.size() ? labels[slot] : std::to_string(slot);
      out << csv_field(model) << ',' << slot << ',' << csv_field(label) << ',' << c[0] << ',' << c[1] << ','
          << c[2] << '\n';
    }
  }
  return out.str();
}

std::string entity_summary_csv(const ScoreTable& table) {
  // (model, type) -> gt_total, gt_matched, model_total, model_matched
  std::map<std::pair<std::string, std::string>, std::array<std::size_t, 4>> counts;
  for (const auto& [key, detail] : table.details) {
    for (const auto& e : detail.gt_entities) {
      auto& c = counts[{key.second, e.type}];
      ++c[0];
      if (e.matched) ++c[1];
    }
    for (const auto& e : detail.model_entities) {
      auto& c = counts[{key.second, e.type}];
      ++c[2];
      if (e.matched) ++c[3];
    }
  }
  std::ostringstream out;
  out << "model_id,type,gt_entities,gt_matched,model_entities,model_matched\n";
  for (const auto& [key, c] : counts) {
    out << csv_field(key.first) << ',' << key.second << ',' << c[0] << ',' << c[1] << ',' << c[2] << ','
        << c[3] << '\n';
  }
  return out.str();
}

std::string scores_csv(const ScoreTable& table) {
  std::ostringstream out;
  out << "clip_id,model_id,metric,status,value,reason\n";
  for (const auto& [key, cell] : table.cells) {
    out << csv_field(key.clip_id) << ',' << csv_field(key.model_id) << ',' << key.metric << ',';
    switch (cell.status) {
      case CellStatus::kValue: out << "value," << csv_number(cell.value) << ",\n"; break;
      case CellStatus::kExcluded: out << "excluded,," << csv_field(cell.reason) << '\n'; break;
      case CellStatus::kError: out << "error,," << csv_field(cell.reason) << '\n'; break;
    }
  }
  return out.str();
}

std::string leaderboard_csv(const Leaderboard& lb) {
  std::ostringstream out;
  out << "scope,metric,aggregation,model_id,mean,n_evaluated,n_excluded,n_failed,best\n";
  for (const auto& s : lb.scopes) {
    for (const auto& b : s.boards) {
      for (const auto& r : b.rows) {
        out << csv_field(s.scope) << ',' << b.metric << ',' << b.aggregation << ',' << csv_field(r.model_id)
            << ',' << (r.mean ? csv_number(*r.mean) : "") << ',' << r.n_evaluated << ',' << r.n_excluded
            << ',' << r.n_failed << ',' << (r.best ? 1 : 0) << '\n';
      }
    }
  }
  return out.str();
}

std::string caption_length_csv(const ScoreTable& table) {
  std::map<std::string, std::vector<double>> series;
  for (const auto& [key, cell] : table.cells) {
    if (key.metric == harness::cells::kCaptionWords && cell.has_value()) {
      series[key.model_id].push_back(cell.value);
    }
  }
  for (const auto& [id, info] : table.clips) {
    series["reference"].push_back(static_cast<double>(info.reference_words));
  }
  std::ostringstream out;
  out << "series,bin_lower,count\n";
  for (const auto& [name, values] : series) {
    for (const auto& bin : corpus::histogram(values, kCaptionLengthBin)) {
      out << csv_field(name) << ',' << csv_number(bin.lower) << ',' << bin.count << '\n';
    }
  }
  return out.str();
}

std::string shuffle_csv(const embedding::ShuffleTestResult& r, bool shuffled) {
  std::ostringstream out;
  out << "clip_id,reference_clip_id,similarity\n";
  for (std::size_t i = 0; i < r.clip_ids.size(); ++i) {
    out << csv_field(r.clip_ids[i]) << ',' << csv_field(shuffled ? r.paired_clip_ids[i] : r.clip_ids[i])
        << ',' << csv_number(shuffled ? r.shuffled_similarities[i] : r.original_similarities[i]) << '\n';
  }
  return out.str();
}

std::string shuffle_summary_csv(const ScoreTable& table) {
  std::ostringstream out;
  out << "model_id,n,mean_gap,effect_size,seed\n";
  for (const auto& [model, r] : table.shuffle) {
    out << csv_field(model) << ',' << r.clip_ids.size() << ',' << csv_number(r.mean_gap) << ','
        << (r.effect_size ? csv_number(*r.effect_size) : "") << ',' << r.seed << '\n';
  }
  return out.str();
}

}  // namespace

ReportFormat parse_report_format(std::string_view name) {
  if (name == "json") return ReportFormat::kJson;
  if (name == "markdown" || name == "md") return ReportFormat::kMarkdown;
  if (name == "csv-bundle" || name == "csv") return ReportFormat::kCsvBundle;
  throw Error(ErrorKind::kInvalidConfig, "unknown report format '" + std::string(name) + "'");
}

std::string output_stem(const ScoreTable& table) {
  std::string hash = table.provenance.value("config_hash", std::string("unknown"));
  std::uint64_t seed = table.provenance.value("seed", std::uint64_t{0});
  return "newscap-" + file_safe(hash) + "-seed" + std::to_string(seed);
}

std::string render_markdown(const Leaderboard& lb, const ScoreTable& table) {
  std::ostringstream out;
  out << "# Leaderboard\n\n";
  out << "Config hash `" << table.provenance.value("config_hash", std::string("unknown")) << "`, seed "
      << table.provenance.value("seed", std::uint64_t{0}) << ". Best value per column in bold.\n\n";
  std::vector<const ScopeBoard*> scopes;
  for (const auto& s : lb.scopes) {
    if (s.scope != "all") scopes.push_back(&s);
  }
  if (scopes.size() != 1) {
    if (const auto* all = lb.scope("all")) scopes.push_back(all);
  }
  for (const auto* s : scopes) {
    out << "## " << (s->scope == "all" ? std::string("All clips") : s->scope) << " (" << s->n_clips
        << " clips)\n\n";
    table_md(out, *s, table.models, kSimilarityColumns, false);
    table_md(out, *s, table.models, kFidelityColumns, true);
    std::array<Column, 5> intersection = kSimilarityColumns;
    for (auto& c : intersection) c.aggregation = harness::kIntersection;
    bool has_intersection = false;
    for (const auto& c : intersection) has_intersection = has_intersection || s->board(c.metric, c.aggregation);
    if (has_intersection) {
      out << "Clips captioned by every model:\n\n";
      table_md(out, *s, table.models, intersection, false);
    }
    coverage_md(out, *s, table.models);
  }
  return out.str();
}

json report_json(const Leaderboard& lb, const ScoreTable& table) {
  return {{"format", kReportFormat},
          {"version", 1},
          {"leaderboard", harness::to_json(lb)},
          {"table", harness::to_json(table)}};
}

std::pair<Leaderboard, ScoreTable> report_from_json(const json& j) {
  if (!j.is_object() || j.value("format", "") != kReportFormat || !j.contains("leaderboard") ||
      !j.contains("table")) {
    throw Error(ErrorKind::kMalformedFile, "not a newscap report");
  }
  return {harness::leaderboard_from_json(j["leaderboard"]), harness::table_from_json(j["table"])};
}

std::vector<std::filesystem::path> write_report(const Leaderboard& lb, const ScoreTable& table,
                                                ReportFormat format, const std::filesystem::path& out_dir) {
  const std::string stem = output_stem(table);
  std::vector<std::filesystem::path> written;
  auto emit = [&](const std::filesystem::path& path, const std::string& content) {
    corpus::write_file(path, content);
    written.push_back(path);
  };
  switch (format) {
    case ReportFormat::kJson:
      emit(out_dir / (stem + ".json"), report_json(lb, table).dump(1) + "\n");
      break;
    case ReportFormat::kMarkdown:
      emit(out_dir / (stem + ".md"), render_markdown(lb, table));
      break;
    case ReportFormat::kCsvBundle: {
      auto dir = out_dir / stem;
      emit(dir / "scores.csv", scores_csv(table));
      emit(dir / "leaderboard.csv", leaderboard_csv(lb));
      emit(dir / "caption_length_histogram.csv", caption_length_csv(table));
      emit(dir / "theme_confusion.csv", theme_confusion_csv(table));
      emit(dir / "entity_summary.csv", entity_summary_csv(table));
      if (!table.shuffle.empty()) emit(dir / "shuffle_summary.csv", shuffle_summary_csv(table));
      for (const auto& [model, r] : table.shuffle) {
        emit(dir / ("shuffle_" + file_safe(model) + "_original.csv"), shuffle_csv(r, false));
        emit(dir / ("shuffle_" + file_safe(model) + "_shuffled.csv"), shuffle_csv(r, true));
      }
      break;
    }
  }
  return written;
}

}  // namespace newscap::report
