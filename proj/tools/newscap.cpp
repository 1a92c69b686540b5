// newscap command-line front end.
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "newscap/backends.hpp"
#include "newscap/corpus.hpp"
#include "newscap/embedding.hpp"
#include "newscap/error.hpp"
#include "newscap/fixture_store.hpp"
#include "newscap/harness.hpp"
#include "newscap/remote_client.hpp"
#include "newscap/report.hpp"
#include "newscap/stub_backends.hpp"
#include "newscap/text.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace newscap;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitBackend = 3;
constexpr int kExitValidation = 4;

struct ValidationFailure {
  std::string message;
};

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kBackendUnavailable:
    case ErrorKind::kTimeout:
    case ErrorKind::kProtocolError:
    case ErrorKind::kBackendError:
    case ErrorKind::kFixtureMiss:
      return kExitBackend;
    case ErrorKind::kRecordError:
    case ErrorKind::kDuplicateClipId:
    case ErrorKind::kDuplicateCaptionKey:
    case ErrorKind::kIncompleteMatrix:
    case ErrorKind::kEmptyTable:
    case ErrorKind::kTooFewClips:
      return kExitValidation;
    default:
      return kExitConfig;
  }
}

// ---- backend specs -----------------------------------------------------------

class BackendFactory {
 public:
  // "kind=fixture:PATH", "kind=http:URL", "kind=stub:SEED[:DIM]",
  // "kind=constant[:DIM]", "ner=gazetteer:PATH"; kind "all" binds every
  // contract the spec can serve.
  void bind(const std::string& spec, backends::BackendSet& set) {
    auto eq = spec.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::kInvalidConfig, "backend spec needs kind=...: " + spec);
    std::string kind_name = spec.substr(0, eq);
    std::string value = spec.substr(eq + 1);
    std::vector<backends::BackendKind> kinds;
    if (kind_name == "all") {
      kinds = {backends::BackendKind::kSentenceEmbedder, backends::BackendKind::kTokenEmbedder,
               backends::BackendKind::kVisualTextEmbedder, backends::BackendKind::kNliScorer,
               backends::BackendKind::kEntityExtractor};
    } else {
      kinds = {backends::parse_backend_kind(kind_name)};
    }
    auto colon = value.find(':');
    std::string scheme = value.substr(0, colon);
    std::string arg = colon == std::string::npos ? "" : value.substr(colon + 1);
    for (auto kind : kinds) bind_one(kind, scheme, arg, set, kind_name == "all");
  }

  std::shared_ptr<backends::RemoteClient> client_for(const std::string& url) {
    auto& c = clients_[url];
    if (!c) {
      backends::RemoteOptions opts;
      opts.base_url = url;
      c = std::make_shared<backends::RemoteClient>(opts);
    }
    return c;
  }

 private:
  void bind_one(backends::BackendKind kind, const std::string& scheme, const std::string& arg,
                backends::BackendSet& set, bool lenient) {
    using backends::BackendKind;
    if (scheme == "fixture") {
      auto& store = stores_[arg];
      if (!store) store = std::make_shared<backends::FixtureStore>(backends::FixtureStore::load(arg));
      auto all = backends::fixture_backends(store);
      assign(kind, all, set);
    } else if (scheme == "http" || scheme == "https") {
      auto client = client_for(scheme + ":" + arg);
      assign(kind, backends::remote_backends(client, {kind}), set);
    } else if (scheme == "stub") {
      auto parts = split(arg);
      std::uint64_t seed = parts.empty() || parts[0].empty() ? 0 : std::stoull(parts[0]);
      std::size_t dim = parts.size() > 1 ? std::stoul(parts[1]) : 384;
      switch (kind) {
        case BackendKind::kSentenceEmbedder:
          set.sentence = std::make_shared<backends::HashEmbedder>(dim, seed);
          break;
        case BackendKind::kVisualTextEmbedder:
          set.visual_text =
              std::make_shared<backends::HashEmbedder>(dim, seed, BackendKind::kVisualTextEmbedder);
          break;
        case BackendKind::kTokenEmbedder:
          set.tokens = std::make_shared<backends::HashTokenEmbedder>(dim, seed);
          break;
        case BackendKind::kNliScorer:
          set.nli = std::make_shared<backends::HashNliScorer>(seed);
          break;
        case BackendKind::kEntityExtractor:
          if (!lenient) throw Error(ErrorKind::kInvalidConfig, "ner has no stub; use ner=gazetteer:FILE");
          break;
      }
    } else if (scheme == "constant") {
      std::size_t dim = arg.empty() ? 384 : std::stoul(arg);
      if (kind == BackendKind::kSentenceEmbedder) {
        set.sentence = std::make_shared<backends::ConstantEmbedder>(dim);
      } else if (kind == BackendKind::kVisualTextEmbedder) {
        set.visual_text = std::make_shared<backends::ConstantEmbedder>(dim, BackendKind::kVisualTextEmbedder);
      } else if (!lenient) {
        throw Error(ErrorKind::kInvalidConfig, "constant backend only serves embedders");
      }
    } else if (scheme == "gazetteer") {
      if (kind != BackendKind::kEntityExtractor) {
        if (lenient) return;
        throw Error(ErrorKind::kInvalidConfig, "gazetteer backend only serves ner");
      }
      set.ner = std::make_shared<backends::GazetteerEntityExtractor>(backends::GazetteerEntityExtractor::load(arg));
    } else {
      throw Error(ErrorKind::kInvalidConfig, "unknown backend scheme '" + scheme + "'");
    }
  }

  static void assign(backends::BackendKind kind, const backends::BackendSet& from, backends::BackendSet& to) {
    switch (kind) {
      case backends::BackendKind::kSentenceEmbedder: to.sentence = from.sentence; break;
      case backends::BackendKind::kTokenEmbedder: to.tokens = from.tokens; break;
      case backends::BackendKind::kVisualTextEmbedder: to.visual_text = from.visual_text; break;
      case backends::BackendKind::kNliScorer: to.nli = from.nli; break;
      case backends::BackendKind::kEntityExtractor: to.ner = from.ner; break;
    }
  }

  static std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
      auto pos = s.find(':', start);
      out.push_back(s.substr(start, pos - start));
      if (pos == std::string::npos) return out;
      start = pos + 1;
    }
  }

  std::map<std::string, std::shared_ptr<backends::FixtureStore>> stores_;
  std::map<std::string, std::shared_ptr<backends::RemoteClient>> clients_;
};

// {"clip_id": str, "frames": [[...], ...]} per line.
std::map<std::string, std::vector<EmbeddingVector>> load_frames(const fs::path& path) {
  std::map<std::string, std::vector<EmbeddingVector>> out;
  std::istringstream in(corpus::read_file(path));
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("clip_id") || !j.contains("frames")) {
      throw Error(ErrorKind::kMalformedFile, path.string() + ":" + std::to_string(line_no) + ": bad frame record");
    }
    auto& frames = out[j["clip_id"].get<std::string>()];
    for (const auto& f : j["frames"]) frames.emplace_back(f.get<std::vector<double>>());
  }
  return out;
}

void print_issues(const std::vector<corpus::RecordIssue>& issues, const std::string& what) {
  for (const auto& issue : issues) {
    std::cerr << "warning: " << what << " line " << issue.line << ": " << to_string(issue.kind) << ": "
              << issue.message << '\n';
  }
}

fs::path resolve_out(const fs::path& out, const std::string& stem, const std::string& ext) {
  if (fs::is_directory(out) || (!out.empty() && out.string().back() == '/')) return out / (stem + ext);
  return out;
}

// ---- subcommands ---------------------------------------------------------------

struct IngestArgs {
  std::string manifest;
  std::string manifest_format = "auto";
  std::vector<std::string> captions;
  std::string tag_dict;
  double min_s = 10.0;
  double max_s = 300.0;
  std::string out;
  bool strict = false;
};

int run_ingest(const IngestArgs& a) {
  std::string content = corpus::read_file(a.manifest);
  corpus::ManifestFormat format = corpus::ManifestFormat::kJsonLines;
  if (a.manifest_format == "json-array" ||
      (a.manifest_format == "auto" && text::trim(content).starts_with("["))) {
    format = corpus::ManifestFormat::kJsonArray;
  } else if (a.manifest_format != "auto" && a.manifest_format != "json-lines") {
    throw Error(ErrorKind::kInvalidConfig, "manifest format must be json-lines or json-array");
  }
  auto manifest = corpus::parse_manifest(content, format);
  print_issues(manifest.issues, a.manifest);

  std::vector<corpus::CaptionRecord> captions;
  std::size_t caption_issues = 0;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& path : a.captions) {
    auto loaded = corpus::load_captions(path);
    print_issues(loaded.issues, path);
    caption_issues += loaded.issues.size();
    for (auto& c : loaded.records) {
      if (!seen.insert({c.clip_id, c.model_id}).second) {
        std::cerr << "warning: " << path << ": duplicate caption for (" << c.clip_id << ", " << c.model_id
                  << "), keeping the first\n";
        ++caption_issues;
        continue;
      }
      captions.push_back(std::move(c));
    }
  }

  json unmapped = json::array();
  if (!a.tag_dict.empty()) {
    auto dict = corpus::TagDictionary::load(a.tag_dict);
    std::set<std::string> missing;
    for (auto& clip : manifest.records) {
      auto t = corpus::translate_tags(clip.thematic_descriptors, dict);
      clip.thematic_descriptors = std::move(t.tags);
      missing.insert(t.unmapped.begin(), t.unmapped.end());
    }
    for (const auto& m : missing) unmapped.push_back(m);
  }

  auto filtered = corpus::filter_clips(manifest.records, a.min_s, a.max_s);
  std::set<std::string> kept_ids;
  for (const auto& c : filtered.kept) kept_ids.insert(c.clip_id);
  auto alignment = corpus::validate_alignment(filtered.kept, captions);

  corpus::CorpusBundle bundle;
  bundle.clips = filtered.kept;
  for (auto& c : captions) {
    if (kept_ids.contains(c.clip_id)) bundle.captions.push_back(std::move(c));
  }
  json issues = json::array();
  for (const auto& i : manifest.issues) issues.push_back(corpus::to_json(i));
  bundle.ingest_report = {{"manifest", a.manifest},
                          {"caption_files", a.captions},
                          {"clips_loaded", manifest.records.size()},
                          {"clips_kept", filtered.kept.size()},
                          {"clips_dropped", filtered.dropped},
                          {"min_s", a.min_s},
                          {"max_s", a.max_s},
                          {"manifest_issues", issues},
                          {"caption_issues", caption_issues},
                          {"unmapped_tags", unmapped},
                          {"alignment", corpus::to_json(alignment)}};
  corpus::save_bundle(bundle, a.out);
  std::cout << "ingested " << filtered.kept.size() << " clips (" << filtered.dropped << " outside ["
            << a.min_s << ", " << a.max_s << "] s), " << bundle.captions.size() << " captions from "
            << alignment.models.size() << " models -> " << a.out << '\n';
  if (a.strict && (!manifest.issues.empty() || caption_issues > 0)) {
    throw ValidationFailure{"ingest found malformed or duplicate records"};
  }
  return 0;
}

struct EvaluateArgs {
  std::string corpus;
  std::string metrics = "rougeL,meteor,textsim,bertscore,clipscore,tfs,efs";
  std::vector<std::string> backends;
  double tau = 0.5;
  double theta = 85.0;
  std::size_t frames = embedding::kDefaultFrameBudget;
  std::string frame_embeddings;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  double min_s = 0.0;
  double max_s = corpus::kUnbounded;
  std::string synonyms;
  bool no_stem = false;
  std::string labels;
  std::string hypothesis_template;
  std::string checkpoint;
  std::string record_fixtures;
  std::string out;
};

int run_evaluate(const EvaluateArgs& a) {
  harness::RunConfig config;
  config.metrics = harness::parse_metric_list(a.metrics);
  BackendFactory factory;
  for (const auto& spec : a.backends) factory.bind(spec, config.backends);
  config.tau = a.tau;
  config.theta = a.theta;
  config.frame_budget = a.frames;
  config.seed = a.seed;
  config.workers = a.workers;
  config.min_duration_s = a.min_s;
  config.max_duration_s = a.max_s;
  config.meteor.stem = !a.no_stem;
  if (!a.synonyms.empty()) {
    config.meteor.synonyms = true;
    config.meteor.synonym_table =
        std::make_shared<lexical::SynonymTable>(lexical::SynonymTable::load(a.synonyms));
  }
  if (!a.labels.empty()) {
    config.theme_labels = std::make_shared<fidelity::ThemeLabelSet>(fidelity::ThemeLabelSet::load(a.labels));
  }
  if (!a.hypothesis_template.empty()) config.hypothesis_template = a.hypothesis_template;
  if (!a.frame_embeddings.empty()) config.frame_embeddings = load_frames(a.frame_embeddings);
  config.checkpoint_path = a.checkpoint;
  config.record_fixtures = a.record_fixtures;
  config.validate();

  auto bundle = corpus::load_bundle(a.corpus);
  auto start = std::chrono::steady_clock::now();
  harness::EvaluateStats stats;
  auto table = harness::evaluate(bundle.clips, bundle.captions, config, &stats);
  double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  fs::path out = resolve_out(a.out, report::output_stem(table), ".table.json");
  harness::save_table(table, out);
  std::cout << "scored " << table.clips.size() << " clips x " << table.models.size() << " models: "
            << table.cells.size() << " cells, " << stats.error_cells << " errors, " << stats.resumed_clips
            << " clips resumed; memo hits " << stats.memo.hits << " misses " << stats.memo.misses
            << " (hit rate " << stats.memo.hit_rate() << "); " << seconds << " s -> " << out.string() << '\n';
  for (const auto& [model, err] : table.shuffle_errors) {
    std::cerr << "warning: shuffle test for " << model << ": " << err << '\n';
  }
  return 0;
}

int run_rank(const std::string& table_path, const std::string& out_path) {
  auto table = harness::load_table(table_path);
  auto mrr = harness::rank(table);
  json per_model = json::object();
  double sum = 0.0;
  for (const auto& [model, v] : mrr.per_model_mrr) {
    per_model[model] = v;
    sum += v;
  }
  json ranks = json::array();
  for (const auto& [key, r] : mrr.per_clip_ranks) {
    ranks.push_back({{"clip_id", key.first}, {"model_id", key.second}, {"rank", r}});
  }
  json doc = {{"per_model_mrr", per_model},
              {"column_sum", sum},
              {"n_clips", mrr.per_clip_ranks.size() / std::max<std::size_t>(mrr.per_model_mrr.size(), 1)},
              {"per_clip_ranks", ranks},
              {"provenance", table.provenance}};
  fs::path out = resolve_out(out_path, report::output_stem(table), ".mrr.json");
  corpus::write_file(out, doc.dump(1) + "\n");
  for (const auto& [model, v] : mrr.per_model_mrr) std::cout << model << '\t' << v << '\n';
  return 0;
}

int run_shuffle(const std::string& corpus_path, const std::string& model, const std::vector<std::string>& specs,
                std::uint64_t seed, const std::string& out_path) {
  backends::BackendSet set;
  BackendFactory factory;
  for (const auto& s : specs) factory.bind(s, set);
  if (!set.sentence) throw Error(ErrorKind::kInvalidConfig, "shuffle-test needs --backend sentence=...");
  auto bundle = corpus::load_bundle(corpus_path);
  std::vector<corpus::CaptionRecord> own;
  for (const auto& c : bundle.captions) {
    if (c.model_id == model) own.push_back(c);
  }
  auto r = embedding::shuffled_pairs_test(bundle.clips, own, *set.sentence, seed);
  std::ostringstream csv;
  csv << "pairing,clip_id,reference_clip_id,similarity\n";
  char buf[40];
  for (std::size_t i = 0; i < r.clip_ids.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", r.original_similarities[i]);
    csv << "original," << r.clip_ids[i] << ',' << r.clip_ids[i] << ',' << buf << '\n';
  }
  for (std::size_t i = 0; i < r.clip_ids.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", r.shuffled_similarities[i]);
    csv << "shuffled," << r.clip_ids[i] << ',' << r.paired_clip_ids[i] << ',' << buf << '\n';
  }
  corpus::write_file(out_path, csv.str());
  std::cout << model << ": mean gap " << r.mean_gap << ", effect size ";
  if (r.effect_size) {
    std::cout << *r.effect_size;
  } else {
    std::cout << "n/a";
  }
  std::cout << " over " << r.clip_ids.size() << " clips (seed " << seed << ") -> " << out_path << '\n';
  return 0;
}

int run_report(const std::string& table_path, const std::string& format, const std::string& out_dir) {
  auto fmt = report::parse_report_format(format);
  auto table = harness::load_table(table_path);
  auto lb = harness::aggregate(table);
  for (const auto& p : report::write_report(lb, table, fmt, out_dir)) std::cout << p.string() << '\n';
  return 0;
}

int run_validate(const std::string& corpus_path, double duration_bin, double word_bin, const std::string& out) {
  auto bundle = corpus::load_bundle(corpus_path);
  auto alignment = corpus::validate_alignment(bundle.clips, bundle.captions);
  auto stats = corpus::descriptive_stats(bundle.clips, duration_bin, word_bin);
  json doc = {{"clips", bundle.clips.size()},
              {"captions", bundle.captions.size()},
              {"alignment", corpus::to_json(alignment)},
              {"stats", corpus::to_json(stats)}};
  if (out.empty()) {
    std::cout << doc.dump(2) << '\n';
  } else {
    corpus::write_file(out, doc.dump(2) + "\n");
  }
  if (!alignment.fully_aligned()) {
    std::size_t missing = 0;
    for (const auto& [model, gaps] : alignment.gaps) missing += gaps.size();
    throw ValidationFailure{"corpus is not fully aligned: " + std::to_string(missing) + " missing captions, " +
                            std::to_string(alignment.orphans.size()) + " orphan captions"};
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"News-video caption benchmark harness"};
  app.require_subcommand(1);

  IngestArgs ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Load, filter and bundle a manifest with caption sets");
  ingest_cmd->add_option("--manifest", ingest.manifest, "Clip manifest")->required();
  ingest_cmd->add_option("--manifest-format", ingest.manifest_format, "auto, json-lines or json-array");
  ingest_cmd->add_option("--captions", ingest.captions, "Caption files")->required()->expected(1, -1);
  ingest_cmd->add_option("--tag-dict", ingest.tag_dict, "Descriptor translation dictionary (TSV or JSON)");
  ingest_cmd->add_option("--min-s", ingest.min_s, "Minimum clip duration (inclusive)");
  ingest_cmd->add_option("--max-s", ingest.max_s, "Maximum clip duration (inclusive)");
  ingest_cmd->add_option("--out", ingest.out, "Output bundle")->required();
  ingest_cmd->add_flag("--strict", ingest.strict, "Exit 4 on malformed or duplicate records");

  EvaluateArgs eval;
  auto* eval_cmd = app.add_subcommand("evaluate", "Score every (clip, model, metric) cell");
  eval_cmd->add_option("--corpus", eval.corpus, "Bundle written by ingest")->required();
  eval_cmd->add_option("--metrics", eval.metrics, "Comma-separated metric list");
  eval_cmd->add_option("--backend", eval.backends, "kind=fixture:F|http:URL|stub:SEED[:DIM]|constant[:DIM]|gazetteer:F");
  eval_cmd->add_option("--tau", eval.tau, "Theme entailment threshold");
  eval_cmd->add_option("--theta", eval.theta, "Entity token-ratio threshold");
  eval_cmd->add_option("--frames", eval.frames, "Frame budget per clip for clipscore");
  eval_cmd->add_option("--frame-embeddings", eval.frame_embeddings, "JSON-lines {clip_id, frames}");
  eval_cmd->add_option("--seed", eval.seed, "Seed for the shuffle test");
  eval_cmd->add_option("--workers", eval.workers, "Worker threads");
  eval_cmd->add_option("--min-s", eval.min_s, "Minimum clip duration");
  eval_cmd->add_option("--max-s", eval.max_s, "Maximum clip duration");
  eval_cmd->add_option("--synonyms", eval.synonyms, "Synonym table (JSON) for the meteor synonym stage");
  eval_cmd->add_flag("--no-stem", eval.no_stem, "Disable the meteor stem stage");
  eval_cmd->add_option("--labels", eval.labels, "Theme label file");
  eval_cmd->add_option("--template", eval.hypothesis_template, "NLI hypothesis template with {label}");
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "Partial-table file for resumable runs");
  eval_cmd->add_option("--record-fixtures", eval.record_fixtures, "Write every backend response here");
  eval_cmd->add_option("--out", eval.out, "Score table (file or directory)")->required();

  std::string rank_table, rank_out;
  auto* rank_cmd = app.add_subcommand("rank", "Mean reciprocal rank from textsim cells");
  rank_cmd->add_option("--table", rank_table)->required();
  rank_cmd->add_option("--out", rank_out)->required();

  std::string shuffle_corpus, shuffle_model, shuffle_out;
  std::vector<std::string> shuffle_backends;
  std::uint64_t shuffle_seed = 0;
  auto* shuffle_cmd = app.add_subcommand("shuffle-test", "Original vs deranged caption/reference similarity");
  shuffle_cmd->add_option("--corpus", shuffle_corpus)->required();
  shuffle_cmd->add_option("--model", shuffle_model)->required();
  shuffle_cmd->add_option("--backend", shuffle_backends)->required();
  shuffle_cmd->add_option("--seed", shuffle_seed);
  shuffle_cmd->add_option("--out", shuffle_out)->required();

  std::string report_table, report_format = "markdown", report_out;
  auto* report_cmd = app.add_subcommand("report", "Leaderboard as markdown, json or a csv bundle");
  report_cmd->add_option("--table", report_table)->required();
  report_cmd->add_option("--format", report_format);
  report_cmd->add_option("--out", report_out)->required();

  std::string validate_corpus, validate_out;
  double duration_bin = 30.0, word_bin = 10.0;
  auto* validate_cmd = app.add_subcommand("validate", "Alignment check and corpus statistics");
  validate_cmd->add_option("--corpus", validate_corpus)->required();
  validate_cmd->add_option("--duration-bin", duration_bin);
  validate_cmd->add_option("--word-bin", word_bin);
  validate_cmd->add_option("--out", validate_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*ingest_cmd) return run_ingest(ingest);
    if (*eval_cmd) return run_evaluate(eval);
    if (*rank_cmd) return run_rank(rank_table, rank_out);
    if (*shuffle_cmd) return run_shuffle(shuffle_corpus, shuffle_model, shuffle_backends, shuffle_seed, shuffle_out);
    if (*report_cmd) return run_report(report_table, report_format, report_out);
    if (*validate_cmd) return run_validate(validate_corpus, duration_bin, word_bin, validate_out);
  } catch (const ValidationFailure& v) {
    std::cerr << "validation failed: " << v.message << '\n';
    return kExitValidation;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: bad number in backend spec\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
