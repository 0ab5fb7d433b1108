#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace gosc::text {

/// NFC-normalizes a UTF-8 string. Invalid UTF-8 sequences are replaced by
/// U+FFFD rather than rejected.
std::string nfc(std::string_view s);

/// Strips leading and trailing Unicode whitespace.
std::string trim(std::string_view s);

/// nfc(trim(s)); the canonical form every stored text goes through.
std::string canonical(std::string_view s);

/// Unicode word segmentation, lowercased. Punctuation and whitespace
/// segments are dropped; no stemming.
std::vector<std::string> tokenize(std::string_view s);

/// Upper-cases the first code point.
std::string sentence_case(std::string_view s);

/// Removes a leading case-insensitive "How to " (only at string start).
std::string strip_how_to(std::string_view title);

// Stable 64-bit FNV-1a, used for derived ids and seeded hashing.
std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL);
std::uint64_t mix64(std::uint64_t x);
std::string hex64(std::uint64_t v);

}  // namespace gosc::text
