#ifndef DIALECTID_TEXT_H_
#define DIALECTID_TEXT_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace dialectid {

// ASCII case folding. Bytes >= 0x80 pass through untouched, so UTF-8
// sequences survive intact.
std::string casefold(std::string_view s);

// Collapses every run of ASCII whitespace to one space and trims both ends.
std::string normalize_whitespace(std::string_view s);

// A word is a maximal run of non-whitespace bytes.
std::vector<std::string> split_words(std::string_view s);
std::size_t count_words(std::string_view s);

// Number of UTF-8 code points (continuation bytes are not counted).
std::size_t utf8_length(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

// Splits one CSV row on commas; double-quoted fields may contain commas and
// "" escapes. Surrounding whitespace of unquoted fields is trimmed.
std::vector<std::string> split_csv_row(std::string_view row);
std::string csv_escape(std::string_view field);

inline constexpr std::uint64_t kFnv64Offset = 14695981039346656037ULL;
inline constexpr std::uint64_t kFnv64Prime = 1099511628211ULL;

inline std::uint64_t fnv1a64(std::string_view s,
                             std::uint64_t h = kFnv64Offset) {
  for (unsigned char c : s) {
    h ^= c;
    h *= kFnv64Prime;
  }
  return h;
}

struct Hash128 {
  std::uint64_t hi = 0;
  std::uint64_t lo = 0;
  friend bool operator==(const Hash128&, const Hash128&) = default;
};

struct Hash128Hasher {
  std::size_t operator()(const Hash128& h) const {
    return static_cast<std::size_t>(h.lo ^ (h.hi * 0x9e3779b97f4a7c15ULL));
  }
};

// FNV-1a with the 128-bit offset basis and prime.
Hash128 fnv1a128(std::string_view s);

std::string hex64(std::uint64_t v);

}  // namespace dialectid

#endif  // DIALECTID_TEXT_H_
