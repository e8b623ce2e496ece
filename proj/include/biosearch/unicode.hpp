#pragma once

#include <cstddef>
#include <string>
#include <string_view>

// Thin UTF-8 helpers over ICU. Invalid byte sequences decode to U+FFFD.
namespace biosearch::unicode {

std::string to_nfc(std::string_view text);
std::string to_lower(std::string_view text);

/// Removes combining marks after canonical decomposition and maps a handful
/// of non-decomposable Latin letters (ß, æ, ø, ł, ...) to ASCII. Characters
/// with no ASCII equivalent (Greek, CJK) pass through unchanged.
std::string fold_to_ascii(std::string_view text);

std::u32string to_u32(std::string_view text);
std::string to_utf8(std::u32string_view text);

std::size_t codepoint_count(std::string_view text);

/// Byte length of the first `n` code points of `text` (clamped).
std::size_t prefix_bytes(std::string_view text, std::size_t n);

bool is_ascii(std::string_view text) noexcept;
bool is_space(char32_t c) noexcept;
bool is_punct(char32_t c) noexcept;
bool is_control(char32_t c) noexcept;

/// Decodes one code point starting at `pos` and advances `pos`.
char32_t next_codepoint(std::string_view text, std::size_t& pos) noexcept;

}  // namespace biosearch::unicode
