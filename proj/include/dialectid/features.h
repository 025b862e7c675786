#ifndef DIALECTID_FEATURES_H_
#define DIALECTID_FEATURES_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dialectid/cxg.h"

namespace dialectid {

inline constexpr std::uint32_t kDefaultHashDim = 30000;

// Sorted, strictly increasing indices with positive values.
struct SparseVector {
  std::vector<std::uint32_t> index;
  std::vector<double> value;

  std::size_t nnz() const { return index.size(); }
  double sum() const;
  double dot(std::span<const double> dense) const;

  // Builds from unordered (index, value) pairs, summing duplicates and
  // dropping zeros.
  static SparseVector from_pairs(std::vector<std::pair<std::uint32_t, double>> pairs);

  friend bool operator==(const SparseVector&, const SparseVector&) = default;
};

enum class SpaceKind { kCxg, kHashNgram, kFunctionWords };

struct FeatureSpace {
  SpaceKind kind = SpaceKind::kCxg;
  std::string grammar;  // kCxg only
  int n = 0;            // kHashNgram only
  std::uint32_t dim = 0;

  static FeatureSpace cxg(std::string grammar_name, std::uint32_t dim);
  static FeatureSpace hash_ngram(int n, std::uint32_t dim = kDefaultHashDim);
  static FeatureSpace function_words(std::uint32_t dim);

  // "cxg:<grammar>:<dim>", "ngram:<n>:<dim>" or "funct:<dim>".
  std::string id() const;
  static FeatureSpace parse(std::string_view id);

  friend bool operator==(const FeatureSpace&, const FeatureSpace&) = default;
};

struct FeatureVector {
  FeatureSpace space;
  SparseVector values;

  std::uint32_t dim() const { return space.dim; }
  // Indices below dim, sorted, values positive.
  bool well_formed() const;
};

FeatureVector cxg_vector(const Grammar& grammar,
                         std::span<const AnnotatedToken> sample);

// Index of one case-folded n-gram (words joined by a single space):
// FNV-1a 64 of its UTF-8 bytes modulo dim.
std::uint32_t ngram_index(std::span<const std::string> words, std::uint32_t dim);

// Sum of values equals max(0, |words| - n + 1). Stateless.
FeatureVector hash_ngram_vector(std::span<const std::string> words, int n,
                                std::uint32_t dim = kDefaultHashDim);

// Ordered, de-duplicated, case-folded word list.
class FunctionWordList {
 public:
  FunctionWordList() = default;
  explicit FunctionWordList(const std::vector<std::string>& words);
  static FunctionWordList load(const std::string& path);  // one word per line

  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }
  // Position of a case-folded word, or -1.
  long index_of(const std::string& folded) const;

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

FeatureVector function_word_vector(std::span<const std::string> words,
                                   const FunctionWordList& list);

// "sample_id space dim idx:val idx:val ..."
std::string format_vector_record(const std::string& sample_id,
                                 const FeatureVector& v);
std::pair<std::string, FeatureVector> parse_vector_record(std::string_view line);

std::string format_number(double v);

}  // namespace dialectid

#endif  // DIALECTID_FEATURES_H_
