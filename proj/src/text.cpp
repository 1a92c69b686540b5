#include "newscap/text.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/locid.h>
#include <unicode/utf8.h>

#include <array>

#include "newscap/error.hpp"

namespace newscap {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kIo: return "IoError";
    case ErrorKind::kMalformedFile: return "MalformedFile";
    case ErrorKind::kRecordError: return "RecordError";
    case ErrorKind::kDuplicateClipId: return "DuplicateClipId";
    case ErrorKind::kDuplicateCaptionKey: return "DuplicateCaptionKey";
    case ErrorKind::kInvalidBounds: return "InvalidBounds";
    case ErrorKind::kMissingResource: return "MissingResource";
    case ErrorKind::kDimensionMismatch: return "DimensionMismatch";
    case ErrorKind::kZeroVector: return "ZeroVector";
    case ErrorKind::kEmptyTokenization: return "EmptyTokenization";
    case ErrorKind::kNoFrames: return "NoFrames";
    case ErrorKind::kIncompleteMatrix: return "IncompleteMatrix";
    case ErrorKind::kTooFewClips: return "TooFewClips";
    case ErrorKind::kLengthMismatch: return "LengthMismatch";
    case ErrorKind::kInvalidConfig: return "InvalidConfig";
    case ErrorKind::kBackendUnavailable: return "BackendUnavailable";
    case ErrorKind::kFixtureMiss: return "FixtureMiss";
    case ErrorKind::kProtocolError: return "ProtocolError";
    case ErrorKind::kTimeout: return "Timeout";
    case ErrorKind::kBackendError: return "BackendError";
    case ErrorKind::kEmptyTable: return "EmptyTable";
  }
  return "Unknown";
}

namespace text {

namespace {

icu::UnicodeString from_utf8(std::string_view s) {
  return icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
}

std::string as_utf8(const icu::UnicodeString& s) {
  std::string out;
  s.toUTF8String(out);
  return out;
}

const icu::Normalizer2& nfc_instance() {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* n = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status) || n == nullptr) {
    throw Error(ErrorKind::kMissingResource, "ICU NFC normalizer unavailable");
  }
  return *n;
}

}  // namespace

std::string nfc(std::string_view utf8) {
  UErrorCode status = U_ZERO_ERROR;
  icu::UnicodeString normalized = nfc_instance().normalize(from_utf8(utf8), status);
  if (U_FAILURE(status)) return std::string(utf8);
  return as_utf8(normalized);
}

std::string lowercase(std::string_view utf8) {
  icu::UnicodeString s = from_utf8(utf8);
  s.toLower(icu::Locale::getRoot());
  return as_utf8(s);
}

std::u32string to_u32(std::string_view utf8) {
  std::u32string out;
  out.reserve(utf8.size());
  const auto* bytes = reinterpret_cast<const uint8_t*>(utf8.data());
  int32_t length = static_cast<int32_t>(utf8.size());
  int32_t i = 0;
  while (i < length) {
    UChar32 c;
    U8_NEXT_OR_FFFD(bytes, i, length, c);
    out.push_back(static_cast<char32_t>(c));
  }
  return out;
}

std::string to_utf8(std::u32string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char32_t c : text) {
    std::array<uint8_t, U8_MAX_LENGTH> buf{};
    int32_t n = 0;
    UBool error = false;
    U8_APPEND(buf.data(), n, U8_MAX_LENGTH, static_cast<UChar32>(c), error);
    if (error) {
      out += "\xEF\xBF\xBD";
      continue;
    }
    out.append(reinterpret_cast<const char*>(buf.data()), static_cast<size_t>(n));
  }
  return out;
}

bool is_space(char32_t c) { return u_isUWhiteSpace(static_cast<UChar32>(c)); }

bool is_punct(char32_t c) { return u_ispunct(static_cast<UChar32>(c)); }

std::vector<std::string> split_whitespace(std::string_view utf8) {
  std::vector<std::string> pieces;
  std::u32string current;
  for (char32_t c : to_u32(utf8)) {
    if (is_space(c)) {
      if (!current.empty()) {
        pieces.push_back(to_utf8(current));
        current.clear();
      }
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) pieces.push_back(to_utf8(current));
  return pieces;
}

std::string normalize_surface(std::string_view utf8) {
  std::string out;
  for (const auto& piece : split_whitespace(lowercase(nfc(utf8)))) {
    if (!out.empty()) out.push_back(' ');
    out += piece;
  }
  return out;
}

std::string trim(std::string_view utf8) {
  std::u32string s = to_u32(utf8);
  size_t begin = 0;
  size_t end = s.size();
  while (begin < end && is_space(s[begin])) ++begin;
  while (end > begin && is_space(s[end - 1])) --end;
  return to_utf8(std::u32string_view(s).substr(begin, end - begin));
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string to_hex(std::uint64_t value) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<size_t>(i)] = kDigits[value & 0xF];
    value >>= 4;
  }
  return out;
}

std::string text_hash(std::string_view utf8) { return to_hex(fnv1a64(nfc(utf8))); }

std::size_t word_count(std::string_view utf8) { return split_whitespace(utf8).size(); }

}  // namespace text
}  // namespace newscap
