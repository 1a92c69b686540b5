#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <sstream>

#include "newscap/corpus.hpp"
#include "newscap/error.hpp"
#include "newscap/harness.hpp"
#include "newscap/report.hpp"
#include "test_support.hpp"

using namespace newscap;
using namespace newscap::report;

namespace {

struct Run {
  harness::ScoreTable table;
  harness::Leaderboard board;
};

const Run& run() {
  static const Run r = [] {
    auto c = testsupport::make_corpus(10, 3, 8);
    auto t = harness::evaluate(c.clips, c.captions, testsupport::full_config(c, 2));
    return Run{t, harness::aggregate(t)};
  }();
  return r;
}

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string line; std::getline(ss, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("report formats") {
  CHECK(parse_report_format("json") == ReportFormat::kJson);
  CHECK(parse_report_format("md") == ReportFormat::kMarkdown);
  CHECK(parse_report_format("markdown") == ReportFormat::kMarkdown);
  CHECK(parse_report_format("csv-bundle") == ReportFormat::kCsvBundle);
  CHECK_THROWS_AS(parse_report_format("html"), Error);
}

TEST_CASE("output stem carries the config hash and seed") {
  const auto& r = run();
  CHECK(output_stem(r.table) ==
        "newscap-" + r.table.provenance.at("config_hash").get<std::string>() + "-seed7");
}

TEST_CASE("json report round trip") {
  const auto& r = run();
  auto j = report_json(r.board, r.table);
  auto [board, table] = report_from_json(nlohmann::json::parse(j.dump()));
  CHECK(board == r.board);
  CHECK(table == r.table);
  CHECK(report_json(board, table).dump() == j.dump());
}

TEST_CASE("markdown tables carry both column groups and bold the best") {
  const auto& r = run();
  auto md = render_markdown(r.board, r.table);
  CHECK(md.find("| Model | Text Sim. | CLIPScore | METEOR | ROUGE-L | BERTScore F1 |") != std::string::npos);
  CHECK(md.find("| Model | TFS | TFS (excl. both-empty) | EFS | EFS P | EFS R | MRR | Mean words |") !=
        std::string::npos);
  CHECK(md.find("## BBC (5 clips)") != std::string::npos);
  CHECK(md.find("## ChTV (5 clips)") != std::string::npos);
  CHECK(md.find("## All clips (10 clips)") != std::string::npos);

  // the bolded ROUGE-L entry of the first table is the best row's mean
  const auto* board = r.board.scope("BBC")->board("rougeL", harness::kFullCoverage);
  std::string best;
  for (const auto& row : board->rows) {
    if (row.best) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "**%.3f**", *row.mean);
      best = row.model_id;
      auto lines = lines_of(md);
      bool found = false;
      for (const auto& l : lines) {
        if (l.rfind("| " + row.model_id + " |", 0) == 0 && l.find(buf) != std::string::npos) found = true;
      }
      CHECK(found);
    }
  }
  CHECK_FALSE(best.empty());
}

TEST_CASE("report files") {
  const auto& r = run();
  testsupport::TempDir dir("report");
  auto json_paths = write_report(r.board, r.table, ReportFormat::kJson, dir.path);
  REQUIRE(json_paths.size() == 1);
  CHECK(json_paths[0].filename() == output_stem(r.table) + ".json");
  auto loaded = report_from_json(nlohmann::json::parse(corpus::read_file(json_paths[0])));
  CHECK(loaded.second == r.table);

  auto md_paths = write_report(r.board, r.table, ReportFormat::kMarkdown, dir.path);
  CHECK(md_paths[0].extension() == ".md");

  auto csv = write_report(r.board, r.table, ReportFormat::kCsvBundle, dir.path);
  std::set<std::string> names;
  for (const auto& p : csv) {
    CHECK(p.parent_path().filename() == output_stem(r.table));
    names.insert(p.filename().string());
  }
  for (auto want : {"scores.csv", "leaderboard.csv", "caption_length_histogram.csv", "theme_confusion.csv",
                    "entity_summary.csv", "shuffle_summary.csv", "shuffle_model0000_original.csv",
                    "shuffle_model0002_shuffled.csv"}) {
    CHECK(names.count(want) == 1);
  }

  auto scores = lines_of(corpus::read_file(dir.path / output_stem(r.table) / "scores.csv"));
  CHECK(scores.size() == r.table.cells.size() + 1);
  auto hist = corpus::read_file(dir.path / output_stem(r.table) / "caption_length_histogram.csv");
  CHECK(hist.find("reference") != std::string::npos);
  auto shuffled = lines_of(corpus::read_file(dir.path / output_stem(r.table) / "shuffle_model0001_shuffled.csv"));
  CHECK(shuffled.size() == 11);

  CHECK_THROWS_MATCHES(write_report(r.board, r.table, ReportFormat::kJson, json_paths[0] / "sub"), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) { return e.kind() == ErrorKind::kIo; }));
}
