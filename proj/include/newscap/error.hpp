#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace newscap {

enum class ErrorKind {
  kIo,
  kMalformedFile,
  kRecordError,
  kDuplicateClipId,
  kDuplicateCaptionKey,
  kInvalidBounds,
  kMissingResource,
  kDimensionMismatch,
  kZeroVector,
  kEmptyTokenization,
  kNoFrames,
  kIncompleteMatrix,
  kTooFewClips,
  kLengthMismatch,
  kInvalidConfig,
  kBackendUnavailable,
  kFixtureMiss,
  kProtocolError,
  kTimeout,
  kBackendError,
  kEmptyTable,
};

std::string_view to_string(ErrorKind kind);

// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind),
        detail_(message) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

// Backend failures other than protocol/availability problems are reported
// as kBackendError; these three are the ones worth retrying or aborting on.
inline bool is_backend_error(ErrorKind kind) {
  return kind == ErrorKind::kBackendUnavailable || kind == ErrorKind::kFixtureMiss ||
         kind == ErrorKind::kProtocolError || kind == ErrorKind::kTimeout ||
         kind == ErrorKind::kBackendError;
}

}  // namespace newscap
