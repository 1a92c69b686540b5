#pragma once

#include <span>
#include <vector>

namespace newscap {

// Finite, non-empty dense vector. Construction throws
// Error{kDimensionMismatch} for an empty vector and Error{kBackendError} for
// NaN/inf entries.
class EmbeddingVector {
 public:
  explicit EmbeddingVector(std::vector<double> values);

  std::size_t dim() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double norm() const;

  bool operator==(const EmbeddingVector&) const = default;

 private:
  std::vector<double> values_;
};

}  // namespace newscap
