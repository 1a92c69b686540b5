#include <catch2/catch_amalgamated.hpp>

#include "newscap/corpus.hpp"
#include "test_support.hpp"

using namespace newscap;
using namespace newscap::corpus;

namespace {

std::string manifest_line(const std::string& id, double dur, const std::string& source = "BBC") {
  return R"({"clip_id":")" + id + R"(","duration_s":)" + std::to_string(dur) +
         R"(,"title":"t","description":"A reporter speaks.","descriptors":["Crimen"],"source":")" + source +
         "\"}";
}

}  // namespace

TEST_CASE("json-lines manifest parses valid records and collects per-line issues") {
  std::string content = manifest_line("a", 12) + "\n" + "{not json}\n" +
                        R"({"clip_id":"b","title":"x"})" + "\n\n" + manifest_line("c", 40, "ChTV") + "\n";
  auto r = parse_manifest(content, ManifestFormat::kJsonLines);
  REQUIRE(r.records.size() == 2);
  CHECK(r.records[0].clip_id == "a");
  CHECK(r.records[0].source_dataset == SourceDataset::kBBC);
  CHECK(r.records[0].language == "en");
  CHECK(r.records[1].language == "es");
  REQUIRE(r.issues.size() == 2);
  CHECK(r.issues[0].line == 2);
  CHECK(r.issues[1].line == 3);
  CHECK(r.issues[1].clip_id == "b");
  CHECK(std::find(r.issues[1].fields.begin(), r.issues[1].fields.end(), "duration_s") !=
        r.issues[1].fields.end());
  CHECK(std::find(r.issues[1].fields.begin(), r.issues[1].fields.end(), "description") !=
        r.issues[1].fields.end());
}

TEST_CASE("duplicate clip ids keep the first record") {
  auto r = parse_manifest(manifest_line("a", 12) + "\n" + manifest_line("a", 99) + "\n",
                          ManifestFormat::kJsonLines);
  REQUIRE(r.records.size() == 1);
  CHECK(r.records[0].duration_s == 12.0);
  REQUIRE(r.issues.size() == 1);
  CHECK(r.issues[0].kind == ErrorKind::kDuplicateClipId);
}

TEST_CASE("json-array manifest") {
  auto r = parse_manifest("[" + manifest_line("a", 12) + "," + manifest_line("b", 13) + "]",
                          ManifestFormat::kJsonArray);
  CHECK(r.records.size() == 2);
  CHECK(r.ok());
  CHECK_THROWS_MATCHES(parse_manifest("[{", ManifestFormat::kJsonArray), Error,
                       Catch::Matchers::Predicate<Error>(
                           [](const Error& e) { return e.kind() == ErrorKind::kMalformedFile; }));
}

TEST_CASE("negative or missing durations are record errors") {
  auto r = parse_manifest(R"({"clip_id":"a","duration_s":-1,"description":"x"})", ManifestFormat::kJsonLines);
  CHECK(r.records.empty());
  REQUIRE(r.issues.size() == 1);
  CHECK(r.issues[0].fields == std::vector<std::string>{"duration_s"});
}

TEST_CASE("captions: json-lines and arrays, duplicates flagged") {
  auto r = parse_captions(
      R"({"clip_id":"a","model_id":"m1","caption":"x"})"
      "\n"
      R"({"clip_id":"a","model_id":"m1","caption":"y"})"
      "\n"
      R"({"clip_id":"a","model_id":"m2"})");
  REQUIRE(r.records.size() == 1);
  CHECK(r.records[0].caption_text == "x");
  REQUIRE(r.issues.size() == 2);
  CHECK(r.issues[0].kind == ErrorKind::kDuplicateCaptionKey);
  CHECK(r.issues[1].fields == std::vector<std::string>{"caption"});

  auto arr = parse_captions(R"([{"clip_id":"a","model_id":"m1","caption":"x"}])");
  CHECK(arr.records.size() == 1);
}

TEST_CASE("filter_clips uses inclusive bounds") {
  std::vector<ClipRecord> clips;
  for (double d : {5.0, 10.0, 299.0, 300.0, 301.0}) {
    ClipRecord c;
    c.clip_id = std::to_string(static_cast<int>(d));
    c.duration_s = d;
    clips.push_back(c);
  }
  auto r = filter_clips(clips, 10, 300);
  REQUIRE(r.kept.size() == 3);
  CHECK(r.kept[0].duration_s == 10.0);
  CHECK(r.kept[2].duration_s == 300.0);
  CHECK(r.dropped == 2);

  CHECK(filter_clips(clips, 0, kUnbounded).kept.size() == 5);
  CHECK(filter_clips(clips, 300, 300).kept.size() == 1);
  auto bad_bounds = [](const Error& e) { return e.kind() == ErrorKind::kInvalidBounds; };
  CHECK_THROWS_MATCHES(filter_clips(clips, 20, 10), Error, Catch::Matchers::Predicate<Error>(bad_bounds));
  CHECK_THROWS_MATCHES(filter_clips(clips, -1, 10), Error, Catch::Matchers::Predicate<Error>(bad_bounds));
  CHECK_THROWS_MATCHES(filter_clips(clips, std::nan(""), 10), Error,
                       Catch::Matchers::Predicate<Error>(bad_bounds));
}

TEST_CASE("filter_clips property: kept plus dropped partitions the input") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(0, 400);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<ClipRecord> clips(30);
    for (auto& c : clips) c.duration_s = std::round(d(rng));
    double lo = std::round(d(rng) / 2), hi = lo + std::round(d(rng) / 2);
    auto r = filter_clips(clips, lo, hi);
    CHECK(r.kept.size() + r.dropped == clips.size());
    for (const auto& c : r.kept) CHECK((c.duration_s >= lo && c.duration_s <= hi));
  }
}

TEST_CASE("tag dictionary normalizes keys and passes unmapped tags through") {
  auto dict = TagDictionary::parse_tsv("Crimen\tCrime\n  CLIMA \tWeather\n");
  CHECK(dict.size() == 2);
  auto r = translate_tags({"crimen", "Clima", "Violencia"}, dict);
  CHECK(r.tags == std::vector<std::string>{"Crime", "Weather", "Violencia"});
  CHECK(r.unmapped == std::vector<std::string>{"Violencia"});
  CHECK_THROWS_AS(TagDictionary::parse_tsv("a\tb\nA\tc\n"), Error);
  auto j = TagDictionary::parse_json(R"({"Deporte":"Sports"})");
  CHECK(j.lookup(" deporte") == std::optional<std::string>("Sports"));
}

TEST_CASE("alignment report finds gaps, orphans and the complete subset") {
  std::vector<ClipRecord> clips(3);
  clips[0].clip_id = "a";
  clips[1].clip_id = "b";
  clips[2].clip_id = "c";
  std::vector<CaptionRecord> caps = {{"a", "m1", "x"}, {"a", "m2", "x"}, {"b", "m1", "x"}, {"z", "m2", "x"}};
  auto r = validate_alignment(clips, caps);
  CHECK(r.models == std::vector<std::string>{"m1", "m2"});
  CHECK(r.gaps["m1"] == std::vector<std::string>{"c"});
  CHECK(r.gaps["m2"] == std::vector<std::string>{"b", "c"});
  CHECK(r.orphans == std::vector<std::string>{"z"});
  CHECK(r.complete_subset == std::vector<std::string>{"a"});
  CHECK_FALSE(r.fully_aligned());
}

TEST_CASE("descriptive stats bins durations and description word counts") {
  ClipRecord c;
  c.duration_s = 10;
  c.reference_description = "three word description";
  c.thematic_descriptors = {"Crime", "Crime", "Weather"};
  auto s = descriptive_stats({c}, 30, 10);
  REQUIRE(s.duration_histogram.size() == 1);
  CHECK(s.duration_histogram[0] == HistogramBin{0.0, 1});
  REQUIRE(s.description_word_count_histogram.size() == 1);
  CHECK(s.description_word_count_histogram[0].count == 1);
  CHECK(s.descriptor_frequency["Crime"] == 2);

  auto h = histogram({0, 9.99, 10, 25}, 10);
  REQUIRE(h.size() == 3);
  CHECK(h[0].count == 2);
  CHECK(h[1].count == 1);
  CHECK(h[2].lower == 20.0);
  CHECK(histogram({}, 5).empty());
}

TEST_CASE("bundle round trip") {
  testsupport::TempDir dir("corpus");
  CorpusBundle b;
  auto r = parse_manifest(manifest_line("a", 12) + "\n" + manifest_line("b", 50, "ChTV"), ManifestFormat::kJsonLines);
  b.clips = r.records;
  b.captions = {{"a", "m1", "caption one"}};
  b.ingest_report = {{"note", "x"}};
  save_bundle(b, dir / "c.bundle");
  auto back = load_bundle(dir / "c.bundle");
  CHECK(back.clips == b.clips);
  CHECK(back.captions == b.captions);
  CHECK(back.ingest_report == b.ingest_report);
  CHECK_THROWS_AS(load_bundle(dir / "missing"), Error);
}
