#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "newscap/backends.hpp"

namespace newscap::fidelity {

// ---- Thematic fidelity -----------------------------------------------------

inline constexpr std::size_t kThemeSlots = 15;

// Ordered label list; slot i of every ThemeVector refers to labels()[i].
class ThemeLabelSet {
 public:
  // Throws Error{kInvalidConfig} unless there are exactly 15 unique,
  // non-empty labels.
  explicit ThemeLabelSet(std::vector<std::string> labels, std::string version = "custom");

  // The built-in v1 list (Politics and Elections ... History and Heritage).
  static const ThemeLabelSet& standard();
  // One label per line; blank lines and lines starting with '#' are skipped.
  // A "# version: X" comment sets the version tag.
  static ThemeLabelSet load(const std::filesystem::path& path);

  const std::vector<std::string>& labels() const { return labels_; }
  const std::string& version() const { return version_; }
  std::size_t size() const { return labels_.size(); }

 private:
  std::vector<std::string> labels_;
  std::string version_;
};

class ThemeVector {
 public:
  ThemeVector() : bits_(kThemeSlots, 0) {}
  explicit ThemeVector(std::size_t slots) : bits_(slots, 0) {}

  static ThemeVector from_string(std::string_view bits);  // e.g. "010000000000001"
  static ThemeVector from_slots(std::size_t slots, std::initializer_list<std::size_t> set_slots);

  std::size_t size() const { return bits_.size(); }
  bool test(std::size_t slot) const { return bits_.at(slot) != 0; }
  void set(std::size_t slot, bool value = true) { bits_.at(slot) = value ? 1 : 0; }
  std::size_t count() const;
  bool none() const { return count() == 0; }
  std::string to_string() const;

  bool operator==(const ThemeVector&) const = default;

 private:
  std::vector<std::uint8_t> bits_;
};

struct ThemeClassifierConfig {
  double tau = 0.5;
  std::string hypothesis_template = "This text is about {label}.";

  // tau in (0, 1) and exactly one "{label}" placeholder.
  void validate() const;
  std::string hypothesis(std::string_view label) const;
};

// Multi-label zero-shot classification: slot i is set iff the entailment
// score for the i-th label hypothesis is strictly greater than tau.
ThemeVector classify_themes(std::string_view text, const ThemeLabelSet& labels,
                            const backends::NliScorer& nli,
                            const ThemeClassifierConfig& config = {});

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

ConfusionCounts confusion(const ThemeVector& gt, const ThemeVector& pred);

// Micro F1 = 2TP / (2TP + FP + FN); 1.0 when both vectors are empty.
// Throws Error{kLengthMismatch}.
double tfs(const ThemeVector& gt, const ThemeVector& pred);

// ---- Entity fidelity -------------------------------------------------------

enum class EntityType { kPerson, kGpe, kOrg, kLoc, kNorp, kFac, kEvent };

std::string to_string(EntityType type);
// Returns nullopt for labels outside the seven tracked types.
std::optional<EntityType> parse_entity_type(std::string_view label);

struct Entity {
  std::string surface;  // normalized
  EntityType type = EntityType::kPerson;

  auto operator<=>(const Entity&) const = default;
};

class EntitySet {
 public:
  // Normalizes the surface; empty surfaces are ignored.
  void add(std::string_view surface, EntityType type);

  const std::set<Entity>& entities() const { return entities_; }
  std::size_t size() const { return entities_.size(); }
  bool empty() const { return entities_.empty(); }
  auto begin() const { return entities_.begin(); }
  auto end() const { return entities_.end(); }

  bool operator==(const EntitySet&) const = default;

 private:
  std::set<Entity> entities_;
};

EntitySet extract_entities(std::string_view text, const backends::EntityExtractor& ner);

struct EntityMatchConfig {
  double theta = 85.0;
  void validate() const;  // 0 < theta <= 100
};

struct EntityMatch {
  std::set<Entity> matched_gt;
  std::set<Entity> matched_model;
};

// Coverage semantics: an entity on either side is matched when some entity
// on the other side has token_ratio strictly above theta. Types are ignored.
EntityMatch match_entities(const EntitySet& gt, const EntitySet& model,
                           const EntityMatchConfig& config = {});

struct EfsResult {
  std::optional<double> value;  // empty: excluded (no ground-truth entities)
  double precision = 0.0;
  double recall = 0.0;
  std::set<Entity> matched_gt;
  std::set<Entity> matched_model;

  bool excluded() const { return !value.has_value(); }
};

EfsResult efs(const EntitySet& gt, const EntitySet& model, const EntityMatchConfig& config = {});

}  // namespace newscap::fidelity
