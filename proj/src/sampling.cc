#include "dialectid/sampling.h"

#include <cstdio>
#include <numeric>

#include "dialectid/error.h"
#include "dialectid/random.h"
#include "dialectid/text.h"
#include "json.hpp"

namespace dialectid {

const char* split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "TRAIN";
    case Split::kDev: return "DEV";
    case Split::kTest: return "TEST";
    case Split::kUnassigned: break;
  }
  return "UNASSIGNED";
}

Split parse_split(std::string_view name) {
  if (name == "TRAIN") return Split::kTrain;
  if (name == "DEV") return Split::kDev;
  if (name == "TEST") return Split::kTest;
  if (name == "UNASSIGNED") return Split::kUnassigned;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown split '" + std::string(name) + "'");
}

std::vector<RegionSample> aggregate(std::span<const GeoDocument> docs,
                                    std::uint64_t seed,
                                    std::size_t sample_words) {
  if (sample_words == 0) {
    throw Error(ErrorCode::kInvalidArgument, "sample size must be positive");
  }
  std::vector<RegionSample> samples;
  if (docs.empty()) return samples;
  const std::string& region = docs.front().country;
  const Register reg = docs.front().reg;
  for (const auto& d : docs) {
    if (d.country != region || d.reg != reg) {
      throw Error(ErrorCode::kInvalidArgument,
                  "aggregate() needs documents from one (country, register)");
    }
  }

  std::vector<std::size_t> order(docs.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);

  RegionSample current;
  auto start_sample = [&] {
    current = RegionSample();
    current.region = region;
    current.reg = reg;
    current.tokens.reserve(sample_words);
  };
  start_sample();
  for (std::size_t doc_index : order) {
    std::vector<std::string> words = split_words(docs[doc_index].text);
    std::size_t pos = 0;
    while (pos < words.size()) {
      const std::size_t take =
          std::min(words.size() - pos, sample_words - current.tokens.size());
      current.provenance.push_back({doc_index, pos, pos + take});
      for (std::size_t k = pos; k < pos + take; ++k) {
        current.tokens.push_back(std::move(words[k]));
      }
      pos += take;
      if (current.tokens.size() == sample_words) {
        char id[32];
        std::snprintf(id, sizeof(id), "-%06zu", samples.size());
        current.sample_id = region + "-" + register_name(reg) + id;
        samples.push_back(std::move(current));
        start_sample();
      }
    }
  }
  return samples;
}

void SplitPlan::validate() const {
  if (max_train < min_train || max_test < min_test) {
    throw Error(ErrorCode::kInvalidArgument,
                "split caps must be at least the minimums");
  }
}

SplitCounts plan_split_counts(std::size_t total, const SplitPlan& plan) {
  plan.validate();
  if (total < plan.dev_per_region ||
      total - plan.dev_per_region < plan.min_train + plan.min_test) {
    throw Error(ErrorCode::kInsufficientData,
                "only " + std::to_string(total) + " samples; need " +
                    std::to_string(plan.dev_per_region + plan.min_train +
                                   plan.min_test));
  }
  const std::size_t rest = total - plan.dev_per_region;
  SplitCounts c;
  c.dev = plan.dev_per_region;
  c.test = std::min(rest / 6, plan.max_test);
  c.train = std::min(rest - rest / 6, plan.max_train);
  if (c.train < plan.min_train || c.test < plan.min_test) {
    throw Error(ErrorCode::kInsufficientData,
                "split of " + std::to_string(total) + " samples gives " +
                    std::to_string(c.train) + " train / " +
                    std::to_string(c.test) + " test, below the minimums");
  }
  return c;
}

std::vector<RegionSample> assign_splits(std::vector<RegionSample> samples,
                                        const SplitPlan& plan) {
  const SplitCounts counts = plan_split_counts(samples.size(), plan);
  Rng rng(plan.seed);
  rng.shuffle(samples);

  const std::size_t rest = samples.size() - counts.dev;
  const std::size_t train_end = counts.dev + (rest - rest / 6);
  std::vector<RegionSample> out;
  out.reserve(counts.dev + counts.train + counts.test);
  std::size_t train = 0;
  std::size_t test = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (i < counts.dev) {
      samples[i].split = Split::kDev;
    } else if (i < train_end) {
      if (train++ >= counts.train) continue;
      samples[i].split = Split::kTrain;
    } else {
      if (test++ >= counts.test) continue;
      samples[i].split = Split::kTest;
    }
    out.push_back(std::move(samples[i]));
  }
  return out;
}

std::string to_ndjson(const RegionSample& sample) {
  nlohmann::ordered_json j;
  j["sample_id"] = sample.sample_id;
  j["region"] = sample.region;
  j["register"] = register_name(sample.reg);
  j["split"] = split_name(sample.split);
  j["text"] = join(sample.tokens, " ");
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

RegionSample region_sample_from_ndjson(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line.begin(), line.end());
    RegionSample s;
    s.sample_id = j.at("sample_id").get<std::string>();
    s.region = j.at("region").get<std::string>();
    s.reg = parse_register(j.at("register").get<std::string>());
    s.split = parse_split(j.at("split").get<std::string>());
    s.tokens = split_words(j.at("text").get<std::string>());
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("bad sample record: ") + e.what());
  }
}

}  // namespace dialectid
