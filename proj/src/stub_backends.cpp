#include "newscap/stub_backends.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <tuple>

#include "newscap/corpus.hpp"
#include "newscap/error.hpp"
#include "newscap/lexical.hpp"
#include "newscap/text.hpp"

namespace newscap::backends {

namespace {

// 53 random bits mapped to [0, 1).
double unit_interval(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  return a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
}

}  // namespace

std::vector<double> seeded_unit_vector(std::uint64_t key, std::size_t dim) {
  std::mt19937_64 rng(key);
  std::vector<double> values(dim);
  double norm = 0.0;
  while (norm == 0.0) {
    norm = 0.0;
    for (auto& v : values) {
      v = 2.0 * unit_interval(rng) - 1.0;
      norm += v * v;
    }
  }
  norm = std::sqrt(norm);
  for (auto& v : values) v /= norm;
  return values;
}

HashEmbedder::HashEmbedder(std::size_t dim, std::uint64_t seed, BackendKind kind)
    : dim_(dim), seed_(seed), kind_(kind) {
  if (dim == 0) throw Error(ErrorKind::kInvalidConfig, "hash embedder needs dim > 0");
}

BackendDescriptor HashEmbedder::descriptor() const {
  return {kind_, "hash-stub/seed=" + std::to_string(seed_), dim_};
}

EmbeddingVector HashEmbedder::embed(std::string_view input) const {
  return EmbeddingVector(seeded_unit_vector(mix(text::fnv1a64(text::nfc(input)), seed_), dim_));
}

HashTokenEmbedder::HashTokenEmbedder(std::size_t dim, std::uint64_t seed)
    : token_embedder_(dim, seed), dim_(dim), seed_(seed) {}

BackendDescriptor HashTokenEmbedder::descriptor() const {
  return {BackendKind::kTokenEmbedder, "hash-token-stub/seed=" + std::to_string(seed_), dim_};
}

std::vector<EmbeddingVector> HashTokenEmbedder::embed_tokens(std::string_view input) const {
  std::vector<EmbeddingVector> out;
  for (const auto& token : lexical::tokenize(input).tokens) {
    out.push_back(token_embedder_.embed(token));
  }
  return out;
}

ConstantEmbedder::ConstantEmbedder(std::size_t dim, BackendKind kind) : dim_(dim), kind_(kind) {
  if (dim == 0) throw Error(ErrorKind::kInvalidConfig, "constant embedder needs dim > 0");
}

BackendDescriptor ConstantEmbedder::descriptor() const { return {kind_, "constant-stub", dim_}; }

EmbeddingVector ConstantEmbedder::embed(std::string_view) const {
  return EmbeddingVector(std::vector<double>(dim_, 1.0 / std::sqrt(static_cast<double>(dim_))));
}

HashNliScorer::HashNliScorer(std::uint64_t seed) : seed_(seed) {}

BackendDescriptor HashNliScorer::descriptor() const {
  return {BackendKind::kNliScorer, "hash-nli-stub/seed=" + std::to_string(seed_), 0};
}

double HashNliScorer::entailment(std::string_view premise, std::string_view hypothesis) const {
  std::uint64_t key = mix(mix(text::fnv1a64(text::nfc(premise)), text::fnv1a64(text::nfc(hypothesis))),
                          seed_);
  std::mt19937_64 rng(key);
  return unit_interval(rng);
}

GazetteerEntityExtractor::GazetteerEntityExtractor(std::vector<Rule> rules, std::string identity)
    : rules_(std::move(rules)), identity_(std::move(identity)) {
  for (const auto& rule : rules_) {
    try {
      compiled_.emplace_back(rule.pattern, std::regex::ECMAScript | std::regex::icase);
    } catch (const std::regex_error& e) {
      throw Error(ErrorKind::kInvalidConfig, "bad gazetteer pattern '" + rule.pattern + "'");
    }
  }
}

GazetteerEntityExtractor GazetteerEntityExtractor::parse(std::string_view content,
                                                         std::string identity) {
  std::vector<Rule> rules;
  std::istringstream in{std::string(content)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty() || line[0] == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw Error(ErrorKind::kMalformedFile, "gazetteer line without TAB: " + line);
    }
    rules.push_back({line.substr(0, tab), line.substr(tab + 1)});
  }
  return GazetteerEntityExtractor(std::move(rules), std::move(identity));
}

GazetteerEntityExtractor GazetteerEntityExtractor::load(const std::filesystem::path& path) {
  return parse(corpus::read_file(path), "gazetteer:" + path.filename().string());
}

BackendDescriptor GazetteerEntityExtractor::descriptor() const {
  return {BackendKind::kEntityExtractor, identity_, 0};
}

std::vector<RawEntity> GazetteerEntityExtractor::extract(std::string_view input) const {
  struct Hit {
    std::size_t position;
    std::size_t rule;
    std::string surface;
  };
  std::vector<Hit> hits;
  const std::string haystack(input);
  for (std::size_t r = 0; r < compiled_.size(); ++r) {
    for (auto it = std::sregex_iterator(haystack.begin(), haystack.end(), compiled_[r]);
         it != std::sregex_iterator(); ++it) {
      if (it->length(0) == 0) continue;
      hits.push_back({static_cast<std::size_t>(it->position(0)), r, it->str(0)});
    }
  }
  std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
    return std::tie(a.position, a.rule) < std::tie(b.position, b.rule);
  });
  std::vector<RawEntity> out;
  for (const auto& h : hits) out.push_back({h.surface, rules_[h.rule].type});
  return out;
}

}  // namespace newscap::backends
