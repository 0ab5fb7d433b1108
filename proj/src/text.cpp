#include "gosc/text.hpp"

#include <unicode/brkiter.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <cstdio>
#include <memory>

#include "gosc/error.hpp"

namespace gosc::text {
namespace {

std::string to_utf8(const icu::UnicodeString& u) {
  std::string out;
  u.toUTF8String(out);
  return out;
}

}  // namespace

std::string nfc(std::string_view s) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw Error("ICU NFC normalizer unavailable");
  auto u = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
  if (norm->isNormalized(u, status) && U_SUCCESS(status)) return to_utf8(u);
  status = U_ZERO_ERROR;
  icu::UnicodeString out = norm->normalize(u, status);
  if (U_FAILURE(status)) throw Error("NFC normalization failed");
  return to_utf8(out);
}

std::string trim(std::string_view s) {
  auto u = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
  int32_t begin = 0;
  int32_t end = u.length();
  while (begin < end) {
    UChar32 c = u.char32At(begin);
    if (!u_isUWhiteSpace(c)) break;
    begin += U16_LENGTH(c);
  }
  while (end > begin) {
    UChar32 c = u.char32At(end - 1);
    if (!u_isUWhiteSpace(c)) break;
    end -= U16_LENGTH(c);
  }
  return to_utf8(u.tempSubStringBetween(begin, end));
}

std::string canonical(std::string_view s) { return nfc(trim(s)); }

std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> tokens;
  auto u = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
  u.foldCase();
  UErrorCode status = U_ZERO_ERROR;
  std::unique_ptr<icu::BreakIterator> it(icu::BreakIterator::createWordInstance(icu::Locale::getRoot(), status));
  if (U_FAILURE(status)) throw Error("ICU word break iterator unavailable");
  it->setText(u);
  int32_t start = it->first();
  for (int32_t end = it->next(); end != icu::BreakIterator::DONE; start = end, end = it->next()) {
    if (it->getRuleStatus() == UBRK_WORD_NONE) continue;
    tokens.push_back(to_utf8(u.tempSubStringBetween(start, end)));
  }
  return tokens;
}

std::string sentence_case(std::string_view s) {
  if (s.empty()) return std::string(s);
  int32_t i = 0;
  UChar32 c;
  U8_NEXT(reinterpret_cast<const uint8_t*>(s.data()), i, static_cast<int32_t>(s.size()), c);
  if (c < 0) return std::string(s);
  UChar32 upper = u_totitle(c);
  if (upper == c) return std::string(s);
  icu::UnicodeString head(upper);
  return to_utf8(head) + std::string(s.substr(static_cast<size_t>(i)));
}

std::string strip_how_to(std::string_view title) {
  constexpr std::string_view prefix = "how to ";
  if (title.size() < prefix.size()) return std::string(title);
  for (size_t i = 0; i < prefix.size(); ++i) {
    char c = title[i];
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    if (c != prefix[i]) return std::string(title);
  }
  return trim(title.substr(prefix.size()));
}

std::uint64_t fnv1a(std::string_view s, std::uint64_t h) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t mix64(std::uint64_t x) {
  // splitmix64 finalizer
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace gosc::text
