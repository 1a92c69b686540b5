#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

// Unicode helpers shared by the tokenizer, entity normalization and fixture
// hashing. All inputs and outputs are UTF-8; invalid sequences are replaced
// with U+FFFD by the decoder.
namespace newscap::text {

std::string nfc(std::string_view utf8);
std::string lowercase(std::string_view utf8);

std::u32string to_u32(std::string_view utf8);
std::string to_utf8(std::u32string_view text);

bool is_space(char32_t c);
bool is_punct(char32_t c);

// Splits on Unicode whitespace; never yields empty pieces.
std::vector<std::string> split_whitespace(std::string_view utf8);

// Lowercase, collapse whitespace runs to one ASCII space, trim.
std::string normalize_surface(std::string_view utf8);

std::string trim(std::string_view utf8);

// 64-bit FNV-1a over the bytes given.
std::uint64_t fnv1a64(std::string_view bytes);

// Fixture key: FNV-1a over the NFC form, as 16 lowercase hex digits.
std::string text_hash(std::string_view utf8);

std::string to_hex(std::uint64_t value);

std::size_t word_count(std::string_view utf8);

}  // namespace newscap::text
