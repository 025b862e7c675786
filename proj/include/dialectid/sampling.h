#ifndef DIALECTID_SAMPLING_H_
#define DIALECTID_SAMPLING_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dialectid/ingest.h"

namespace dialectid {

inline constexpr std::size_t kSampleWords = 1000;

enum class Split { kUnassigned, kTrain, kDev, kTest };

const char* split_name(Split s);  // "TRAIN", "DEV", "TEST", "UNASSIGNED"
Split parse_split(std::string_view name);

// Words [begin, end) of input document `doc` (index into the aggregate()
// input) that landed in a sample.
struct TokenSpan {
  std::size_t doc = 0;
  std::size_t begin = 0;
  std::size_t end = 0;
};

struct RegionSample {
  std::string sample_id;
  std::string region;
  Register reg = Register::kWeb;
  std::vector<std::string> tokens;
  Split split = Split::kUnassigned;
  std::vector<TokenSpan> provenance;  // not serialized
};

// Shuffles the documents with a seeded generator, concatenates their words
// and cuts exact `sample_words` chunks. A document straddling a boundary is
// split there; the final partial chunk is discarded. All documents must share
// one (country, register). Sample ids are "<region>-<REGISTER>-<nnnnnn>".
std::vector<RegionSample> aggregate(std::span<const GeoDocument> docs,
                                    std::uint64_t seed,
                                    std::size_t sample_words = kSampleWords);

struct SplitPlan {
  std::size_t dev_per_region = 2000;
  std::size_t max_train = 25000;
  std::size_t max_test = 5000;
  std::size_t min_train = 12000;
  std::size_t min_test = 2500;
  std::uint64_t seed = 0;

  // Throws Error(kInvalidArgument) when a cap is below its minimum.
  void validate() const;
};

// Seeded shuffle, then the first dev_per_region samples become DEV and the
// rest is divided train:test = 5:1 (test gets floor(rest / 6)) before
// truncation at the caps. Samples past the caps are dropped from the result.
// Throws Error(kInsufficientData) when either side ends up below its minimum.
std::vector<RegionSample> assign_splits(std::vector<RegionSample> samples,
                                        const SplitPlan& plan);

struct SplitCounts {
  std::size_t dev = 0;
  std::size_t train = 0;
  std::size_t test = 0;
};

// The sizes assign_splits would produce for `total` samples, with the same
// error behavior.
SplitCounts plan_split_counts(std::size_t total, const SplitPlan& plan);

// {sample_id, region, register, split, text}, one object per line. Text is
// the tokens joined by single spaces.
std::string to_ndjson(const RegionSample& sample);
RegionSample region_sample_from_ndjson(std::string_view line);

}  // namespace dialectid

#endif  // DIALECTID_SAMPLING_H_
