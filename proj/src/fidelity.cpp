#include "newscap/fidelity.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "newscap/corpus.hpp"
#include "newscap/error.hpp"
#include "newscap/fuzzy.hpp"
#include "newscap/text.hpp"

namespace newscap::fidelity {

namespace {
constexpr std::string_view kPlaceholder = "{label}";
}  // namespace

ThemeLabelSet::ThemeLabelSet(std::vector<std::string> labels, std::string version)
    : labels_(std::move(labels)), version_(std::move(version)) {
  if (labels_.size() != kThemeSlots) {
    throw Error(ErrorKind::kInvalidConfig, "theme label set must have exactly 15 labels, got " +
                                               std::to_string(labels_.size()));
  }
  std::set<std::string> seen;
  for (const auto& label : labels_) {
    if (text::trim(label).empty()) throw Error(ErrorKind::kInvalidConfig, "empty theme label");
    if (!seen.insert(label).second) {
      throw Error(ErrorKind::kInvalidConfig, "duplicate theme label '" + label + "'");
    }
  }
}

const ThemeLabelSet& ThemeLabelSet::standard() {
  static const ThemeLabelSet kStandard(
      {
          "Politics and Elections",
          "International Affairs and Conflicts",
          "Economy, Business and Finance",
          "Society and Social Issues",
          "Health and Medicine",
          "Crime and Justice",
          "Environment and Climate",
          "Science and Technology",
          "Arts, Culture and Entertainment",
          "Sports and Athletics",
          "Education and Academia",
          "Natural Disasters and Weather",
          "Accidents and Emergencies",
          "Animals and Wildlife",
          "History and Heritage",
      },
      "v1");
  return kStandard;
}

ThemeLabelSet ThemeLabelSet::load(const std::filesystem::path& path) {
  std::istringstream in(corpus::read_file(path));
  std::vector<std::string> labels;
  std::string version = path.filename().string();
  std::string line;
  while (std::getline(in, line)) {
    std::string trimmed = text::trim(line);
    if (trimmed.empty()) continue;
    if (trimmed[0] == '#') {
      constexpr std::string_view kVersionTag = "# version:";
      if (trimmed.rfind(kVersionTag, 0) == 0) version = text::trim(trimmed.substr(kVersionTag.size()));
      continue;
    }
    labels.push_back(trimmed);
  }
  return ThemeLabelSet(std::move(labels), std::move(version));
}

ThemeVector ThemeVector::from_string(std::string_view bits) {
  ThemeVector v(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] != '0' && bits[i] != '1') {
      throw Error(ErrorKind::kRecordError, "theme vector must contain only 0/1");
    }
    v.set(i, bits[i] == '1');
  }
  return v;
}

ThemeVector ThemeVector::from_slots(std::size_t slots, std::initializer_list<std::size_t> set_slots) {
  ThemeVector v(slots);
  for (std::size_t s : set_slots) v.set(s);
  return v;
}

std::size_t ThemeVector::count() const {
  std::size_t n = 0;
  for (auto b : bits_) n += b;
  return n;
}

std::string ThemeVector::to_string() const {
  std::string out;
  for (auto b : bits_) out.push_back(b ? '1' : '0');
  return out;
}

void ThemeClassifierConfig::validate() const {
  if (!(tau > 0.0 && tau < 1.0)) throw Error(ErrorKind::kInvalidConfig, "tau must be in (0, 1)");
  auto first = hypothesis_template.find(kPlaceholder);
  if (first == std::string::npos ||
      hypothesis_template.find(kPlaceholder, first + kPlaceholder.size()) != std::string::npos) {
    throw Error(ErrorKind::kInvalidConfig,
                "hypothesis template needs exactly one {label} placeholder");
  }
}

std::string ThemeClassifierConfig::hypothesis(std::string_view label) const {
  std::string out = hypothesis_template;
  out.replace(out.find(kPlaceholder), kPlaceholder.size(), label);
  return out;
}

ThemeVector classify_themes(std::string_view input, const ThemeLabelSet& labels,
                            const backends::NliScorer& nli, const ThemeClassifierConfig& config) {
  config.validate();
  if (text::trim(input).empty()) {
    throw Error(ErrorKind::kRecordError, "cannot classify themes of empty text");
  }
  std::vector<backends::NliPair> pairs;
  for (const auto& label : labels.labels()) {
    pairs.push_back({std::string(input), config.hypothesis(label)});
  }
  std::vector<double> scores;
  try {
    scores = nli.entailment_batch(pairs);
  } catch (const Error& e) {
    throw Error(e.kind(), "theme classification: " + e.detail());
  }
  if (scores.size() != labels.size()) {
    throw Error(ErrorKind::kBackendError, "NLI backend returned " + std::to_string(scores.size()) +
                                              " scores for " + std::to_string(labels.size()) +
                                              " labels");
  }
  ThemeVector vec(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!std::isfinite(scores[i]) || scores[i] < 0.0 || scores[i] > 1.0) {
      throw Error(ErrorKind::kBackendError,
                  "entailment score out of range for label '" + labels.labels()[i] + "'");
    }
    vec.set(i, scores[i] > config.tau);
  }
  return vec;
}

ConfusionCounts confusion(const ThemeVector& gt, const ThemeVector& pred) {
  if (gt.size() != pred.size()) {
    throw Error(ErrorKind::kLengthMismatch, "theme vectors of length " + std::to_string(gt.size()) +
                                                " and " + std::to_string(pred.size()));
  }
  ConfusionCounts counts;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    bool g = gt.test(i);
    bool p = pred.test(i);
    if (g && p) ++counts.tp;
    if (!g && p) ++counts.fp;
    if (g && !p) ++counts.fn;
  }
  return counts;
}

double tfs(const ThemeVector& gt, const ThemeVector& pred) {
  auto c = confusion(gt, pred);
  const std::size_t denom = 2 * c.tp + c.fp + c.fn;
  if (denom == 0) return 1.0;
  return static_cast<double>(2 * c.tp) / static_cast<double>(denom);
}

std::string to_string(EntityType type) {
  switch (type) {
    case EntityType::kPerson: return "PERSON";
    case EntityType::kGpe: return "GPE";
    case EntityType::kOrg: return "ORG";
    case EntityType::kLoc: return "LOC";
    case EntityType::kNorp: return "NORP";
    case EntityType::kFac: return "FAC";
    case EntityType::kEvent: return "EVENT";
  }
  return "PERSON";
}

std::optional<EntityType> parse_entity_type(std::string_view label) {
  static const std::map<std::string, EntityType, std::less<>> kTypes = {
      {"PERSON", EntityType::kPerson}, {"GPE", EntityType::kGpe},   {"ORG", EntityType::kOrg},
      {"LOC", EntityType::kLoc},       {"NORP", EntityType::kNorp}, {"FAC", EntityType::kFac},
      {"EVENT", EntityType::kEvent},
  };
  auto it = kTypes.find(label);
  if (it == kTypes.end()) return std::nullopt;
  return it->second;
}

void EntitySet::add(std::string_view surface, EntityType type) {
  std::string normalized = text::normalize_surface(surface);
  if (normalized.empty()) return;
  entities_.insert(Entity{std::move(normalized), type});
}

EntitySet extract_entities(std::string_view input, const backends::EntityExtractor& ner) {
  EntitySet set;
  if (text::trim(input).empty()) return set;
  for (const auto& raw : ner.extract(input)) {
    if (auto type = parse_entity_type(raw.type)) set.add(raw.surface, *type);
  }
  return set;
}

void EntityMatchConfig::validate() const {
  if (!(theta > 0.0 && theta <= 100.0)) {
    throw Error(ErrorKind::kInvalidConfig, "theta must be in (0, 100]");
  }
}

EntityMatch match_entities(const EntitySet& gt, const EntitySet& model,
                           const EntityMatchConfig& config) {
  config.validate();
  EntityMatch match;
  std::map<std::pair<std::string, std::string>, bool> cache;
  for (const auto& g : gt) {
    for (const auto& m : model) {
      auto key = std::make_pair(g.surface, m.surface);
      auto it = cache.find(key);
      if (it == cache.end()) {
        it = cache.emplace(key, token_ratio(g.surface, m.surface) > config.theta).first;
      }
      if (it->second) {
        match.matched_gt.insert(g);
        match.matched_model.insert(m);
      }
    }
  }
  return match;
}

EfsResult efs(const EntitySet& gt, const EntitySet& model, const EntityMatchConfig& config) {
  config.validate();
  EfsResult result;
  if (gt.empty()) return result;
  auto match = match_entities(gt, model, config);
  result.precision = static_cast<double>(match.matched_model.size()) /
                     static_cast<double>(std::max<std::size_t>(model.size(), 1));
  result.recall = static_cast<double>(match.matched_gt.size()) /
                  static_cast<double>(std::max<std::size_t>(gt.size(), 1));
  const double denom = result.precision + result.recall;
  result.value = denom > 0.0 ? 2.0 * result.precision * result.recall / denom : 0.0;
  result.matched_gt = std::move(match.matched_gt);
  result.matched_model = std::move(match.matched_model);
  return result;
}

}  // namespace newscap::fidelity
