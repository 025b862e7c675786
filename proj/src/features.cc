#include "dialectid/features.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

#include "dialectid/error.h"
#include "dialectid/text.h"

namespace dialectid {

double SparseVector::sum() const {
  double s = 0.0;
  for (double v : value) s += v;
  return s;
}

double SparseVector::dot(std::span<const double> dense) const {
  double s = 0.0;
  for (std::size_t k = 0; k < index.size(); ++k) s += value[k] * dense[index[k]];
  return s;
}

SparseVector SparseVector::from_pairs(
    std::vector<std::pair<std::uint32_t, double>> pairs) {
  std::sort(pairs.begin(), pairs.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  SparseVector v;
  for (const auto& [i, x] : pairs) {
    if (!v.index.empty() && v.index.back() == i) {
      v.value.back() += x;
    } else {
      v.index.push_back(i);
      v.value.push_back(x);
    }
  }
  std::size_t w = 0;
  for (std::size_t r = 0; r < v.index.size(); ++r) {
    if (v.value[r] != 0.0) {
      v.index[w] = v.index[r];
      v.value[w] = v.value[r];
      ++w;
    }
  }
  v.index.resize(w);
  v.value.resize(w);
  return v;
}

FeatureSpace FeatureSpace::cxg(std::string grammar_name, std::uint32_t dim) {
  if (grammar_name.empty() ||
      grammar_name.find_first_of(": \t") != std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument,
                "grammar name '" + grammar_name + "' cannot be used in a space id");
  }
  return {SpaceKind::kCxg, std::move(grammar_name), 0, dim};
}

FeatureSpace FeatureSpace::hash_ngram(int n, std::uint32_t dim) {
  if (n < 1 || n > 3) {
    throw Error(ErrorCode::kInvalidArgument, "n-gram order must be 1, 2 or 3");
  }
  if (dim == 0) throw Error(ErrorCode::kInvalidArgument, "hash dimension must be positive");
  return {SpaceKind::kHashNgram, "", n, dim};
}

FeatureSpace FeatureSpace::function_words(std::uint32_t dim) {
  return {SpaceKind::kFunctionWords, "", 0, dim};
}

std::string FeatureSpace::id() const {
  switch (kind) {
    case SpaceKind::kCxg: return "cxg:" + grammar + ":" + std::to_string(dim);
    case SpaceKind::kHashNgram:
      return "ngram:" + std::to_string(n) + ":" + std::to_string(dim);
    case SpaceKind::kFunctionWords: return "funct:" + std::to_string(dim);
  }
  return "";
}

FeatureSpace FeatureSpace::parse(std::string_view id) {
  const auto parts = split(id, ':');
  auto num = [&](const std::string& s) -> std::uint32_t {
    std::uint32_t v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
      throw Error(ErrorCode::kParse, "bad feature space id '" + std::string(id) + "'");
    }
    return v;
  };
  if (parts.size() == 3 && parts[0] == "cxg") return cxg(parts[1], num(parts[2]));
  if (parts.size() == 3 && parts[0] == "ngram") {
    return hash_ngram(static_cast<int>(num(parts[1])), num(parts[2]));
  }
  if (parts.size() == 2 && parts[0] == "funct") return function_words(num(parts[1]));
  throw Error(ErrorCode::kParse, "bad feature space id '" + std::string(id) + "'");
}

bool FeatureVector::well_formed() const {
  const auto& v = values;
  if (v.index.size() != v.value.size()) return false;
  for (std::size_t k = 0; k < v.index.size(); ++k) {
    if (v.index[k] >= space.dim || !(v.value[k] > 0.0)) return false;
    if (k > 0 && v.index[k] <= v.index[k - 1]) return false;
  }
  return true;
}

FeatureVector cxg_vector(const Grammar& grammar,
                         std::span<const AnnotatedToken> sample) {
  const auto counts = count_matches(grammar, sample);
  FeatureVector fv;
  fv.space = FeatureSpace::cxg(grammar.name(), static_cast<std::uint32_t>(grammar.size()));
  for (std::uint32_t i = 0; i < counts.size(); ++i) {
    if (counts[i] > 0) {
      fv.values.index.push_back(i);
      fv.values.value.push_back(counts[i]);
    }
  }
  return fv;
}

std::uint32_t ngram_index(std::span<const std::string> words, std::uint32_t dim) {
  std::uint64_t h = kFnv64Offset;
  for (std::size_t k = 0; k < words.size(); ++k) {
    if (k > 0) h = fnv1a64(" ", h);
    h = fnv1a64(casefold(words[k]), h);
  }
  return static_cast<std::uint32_t>(h % dim);
}

FeatureVector hash_ngram_vector(std::span<const std::string> words, int n,
                                std::uint32_t dim) {
  FeatureVector fv;
  fv.space = FeatureSpace::hash_ngram(n, dim);
  const std::size_t order = static_cast<std::size_t>(n);
  if (words.size() < order) return fv;
  std::vector<std::pair<std::uint32_t, double>> pairs;
  pairs.reserve(words.size() - order + 1);
  for (std::size_t i = 0; i + order <= words.size(); ++i) {
    pairs.emplace_back(ngram_index(words.subspan(i, order), dim), 1.0);
  }
  fv.values = SparseVector::from_pairs(std::move(pairs));
  return fv;
}

FunctionWordList::FunctionWordList(const std::vector<std::string>& words) {
  for (const auto& w : words) {
    std::string f = casefold(trim(w));
    if (f.empty() || index_.count(f)) continue;
    index_.emplace(f, static_cast<std::uint32_t>(words_.size()));
    words_.push_back(std::move(f));
  }
}

FunctionWordList FunctionWordList::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    words.push_back(t);
  }
  return FunctionWordList(words);
}

long FunctionWordList::index_of(const std::string& folded) const {
  const auto it = index_.find(folded);
  return it == index_.end() ? -1 : static_cast<long>(it->second);
}

FeatureVector function_word_vector(std::span<const std::string> words,
                                   const FunctionWordList& list) {
  FeatureVector fv;
  fv.space = FeatureSpace::function_words(static_cast<std::uint32_t>(list.size()));
  std::vector<std::pair<std::uint32_t, double>> pairs;
  for (const auto& w : words) {
    const long i = list.index_of(casefold(w));
    if (i >= 0) pairs.emplace_back(static_cast<std::uint32_t>(i), 1.0);
  }
  fv.values = SparseVector::from_pairs(std::move(pairs));
  return fv;
}

std::string format_number(double v) {
  if (std::isfinite(v) && v == std::floor(v) && std::fabs(v) < 1e15) {
    return std::to_string(static_cast<long long>(v));
  }
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

std::string format_vector_record(const std::string& sample_id,
                                 const FeatureVector& v) {
  std::string out = sample_id;
  out += ' ';
  out += v.space.id();
  out += ' ';
  out += std::to_string(v.space.dim);
  for (std::size_t k = 0; k < v.values.nnz(); ++k) {
    out += ' ';
    out += std::to_string(v.values.index[k]);
    out += ':';
    out += format_number(v.values.value[k]);
  }
  return out;
}

std::pair<std::string, FeatureVector> parse_vector_record(std::string_view line) {
  const auto fields = split_words(line);
  if (fields.size() < 3) {
    throw Error(ErrorCode::kParse, "vector record needs 'sample_id space dim'");
  }
  FeatureVector v;
  v.space = FeatureSpace::parse(fields[1]);
  if (std::to_string(v.space.dim) != fields[2]) {
    throw Error(ErrorCode::kParse, "vector record dim disagrees with its space");
  }
  for (std::size_t k = 3; k < fields.size(); ++k) {
    const auto& f = fields[k];
    const std::size_t colon = f.find(':');
    if (colon == std::string::npos) throw Error(ErrorCode::kParse, "bad entry '" + f + "'");
    std::uint32_t idx = 0;
    double val = 0.0;
    const auto r1 = std::from_chars(f.data(), f.data() + colon, idx);
    const auto r2 = std::from_chars(f.data() + colon + 1, f.data() + f.size(), val);
    if (r1.ec != std::errc() || r2.ec != std::errc() || r1.ptr != f.data() + colon ||
        r2.ptr != f.data() + f.size()) {
      throw Error(ErrorCode::kParse, "bad entry '" + f + "'");
    }
    v.values.index.push_back(idx);
    v.values.value.push_back(val);
  }
  // Written records are sorted and positive; anything else is corrupt.
  if (!v.well_formed()) {
    throw Error(ErrorCode::kParse, "vector record for '" + fields[0] + "' is out of range");
  }
  return {fields[0], std::move(v)};
}

}  // namespace dialectid
