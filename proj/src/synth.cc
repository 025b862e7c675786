#include "dialectid/synth.h"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "dialectid/error.h"
#include "dialectid/features.h"
#include "dialectid/random.h"
#include "dialectid/text.h"

namespace dialectid {
namespace {

constexpr const char* kTags[] = {"NOUN", "VERB", "ADJ", "ADV", "PRON", "ADP"};
constexpr const char* kSems[] = {"animate", "transfer", "artifact",
                                 "motion",  "place",    "time"};
constexpr std::size_t kNumTags = std::size(kTags);
constexpr std::size_t kNumSems = std::size(kSems);

std::string marker_word(std::size_t c) { return "mk" + std::to_string(c); }

std::string content_word(std::size_t tag, std::size_t sem, std::size_t j) {
  return casefold(kTags[tag]) + "-" + kSems[sem] + "-" + std::to_string(j);
}

std::size_t construction_length(const SynthUniverse& u, std::size_t c) {
  return u.min_length + c % (u.max_length - u.min_length + 1);
}

void check_universe(const SynthUniverse& u) {
  if (u.min_length < 1 || u.max_length < u.min_length || u.filler_words == 0 ||
      u.words_per_class == 0 || u.sample_words == 0) {
    throw Error(ErrorCode::kInvalidArgument, "malformed synthetic universe");
  }
}

// Inversion sampler for Binomial(n, p); consumes one uniform draw.
std::size_t binomial(Rng& rng, std::size_t n, double p) {
  if (p <= 0.0) return 0;
  if (p >= 1.0) return n;
  if (p > 0.5) return n - binomial(rng, n, 1.0 - p);
  const double q = 1.0 - p;
  const double s = p / q;
  const double a = static_cast<double>(n + 1) * s;
  double r = std::pow(q, static_cast<double>(n));
  double u = rng.uniform();
  std::size_t x = 0;
  while (u > r) {
    u -= r;
    ++x;
    if (x > n || r == 0.0) return std::min(x, n);
    r *= a / static_cast<double>(x) - s;
  }
  return x;
}

}  // namespace

std::string filler_word(std::size_t i) { return "f" + std::to_string(i); }

Grammar synth_grammar(const SynthUniverse& u, std::string name) {
  check_universe(u);
  std::vector<std::vector<SlotConstraint>> constructions;
  constructions.reserve(u.num_constructions);
  for (std::size_t c = 0; c < u.num_constructions; ++c) {
    std::vector<SlotConstraint> slots;
    slots.push_back(SlotConstraint::lexical(marker_word(c)));
    const std::size_t len = construction_length(u, c);
    for (std::size_t k = 1; k < len; ++k) {
      const std::size_t tag = (c * 7 + k) % kNumTags;
      const std::size_t sem = (c * 5 + k * 3) % kNumSems;
      switch ((c + k) % 3) {
        case 0: slots.push_back(SlotConstraint::syntactic(kTags[tag])); break;
        case 1: slots.push_back(SlotConstraint::semantic(kSems[sem])); break;
        default: slots.push_back(SlotConstraint::joint(kTags[tag], kSems[sem])); break;
      }
    }
    constructions.push_back(std::move(slots));
  }
  return Grammar::create(std::move(name), std::move(constructions));
}

Lexicon synth_lexicon(const SynthUniverse& u) {
  check_universe(u);
  Lexicon lex;
  for (std::size_t c = 0; c < u.num_constructions; ++c) {
    lex.add(marker_word(c), "MARK", std::nullopt);
  }
  for (std::size_t t = 0; t < kNumTags; ++t) {
    for (std::size_t s = 0; s < kNumSems; ++s) {
      for (std::size_t j = 0; j < u.words_per_class; ++j) {
        lex.add(content_word(t, s, j), kTags[t], std::string(kSems[s]));
      }
    }
  }
  for (std::size_t i = 0; i < u.filler_words; ++i) {
    lex.add(filler_word(i), "FILL", std::nullopt);
  }
  return lex;
}

namespace {

struct ResolvedProfile {
  std::vector<double> probs;         // per construction
  std::vector<double> filler_cdf;    // cumulative filler weights
};

ResolvedProfile resolve(const DialectProfile& p, Register reg,
                        const SynthUniverse& u) {
  auto construction_probs = p.construction_probs;
  auto bias = p.lexicon_bias;
  if (reg == Register::kSocial && p.register_shift) {
    for (const auto& [c, v] : p.register_shift->construction_probs) {
      construction_probs[c] = v;
    }
    for (const auto& [w, v] : p.register_shift->lexicon_bias) bias[w] = v;
  }
  ResolvedProfile r;
  r.probs.assign(u.num_constructions, 0.0);
  double expected_fraction = 0.0;
  for (const auto& [c, v] : construction_probs) {
    if (c >= u.num_constructions) {
      throw Error(ErrorCode::kInvalidProfile,
                  p.region + ": construction " + std::to_string(c) + " does not exist");
    }
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error(ErrorCode::kInvalidProfile,
                  p.region + ": probability of construction " + std::to_string(c) +
                      " is outside [0, 1]");
    }
    r.probs[c] = v;
    expected_fraction += v * static_cast<double>(construction_length(u, c));
  }
  if (expected_fraction > 0.9) {
    throw Error(ErrorCode::kInvalidProfile,
                p.region + ": construction instances would fill " +
                    format_number(expected_fraction * 100) + "% of each sample");
  }
  std::vector<double> weights(u.filler_words, 1.0);
  for (const auto& [w, v] : bias) {
    std::size_t i = 0;
    if (w.size() < 2 || w[0] != 'f' ||
        std::sscanf(w.c_str() + 1, "%zu", &i) != 1 || filler_word(i) != w ||
        i >= u.filler_words) {
      throw Error(ErrorCode::kInvalidProfile, p.region + ": '" + w + "' is not a filler word");
    }
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw Error(ErrorCode::kInvalidProfile, p.region + ": negative weight for '" + w + "'");
    }
    weights[i] = v;
  }
  double total = 0.0;
  r.filler_cdf.reserve(weights.size());
  for (double w : weights) {
    total += w;
    r.filler_cdf.push_back(total);
  }
  if (total <= 0.0) {
    throw Error(ErrorCode::kInvalidProfile, p.region + ": all filler weights are zero");
  }
  return r;
}

std::string pick_filler(Rng& rng, const std::vector<double>& cdf) {
  const double x = rng.uniform() * cdf.back();
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), x);
  const std::size_t i = std::min<std::size_t>(it - cdf.begin(), cdf.size() - 1);
  return filler_word(i);
}

}  // namespace

SynthCorpus generate(const std::vector<DialectProfile>& profiles,
                     std::size_t samples_per_region, std::uint64_t seed,
                     Register reg, const SynthUniverse& u) {
  check_universe(u);
  if (profiles.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "synthetic corpora need at least two profiles");
  }
  if (samples_per_region < 1) {
    throw Error(ErrorCode::kInvalidArgument, "samples_per_region must be at least 1");
  }
  SynthCorpus corpus;
  corpus.grammar = synth_grammar(u);
  corpus.lexicon = synth_lexicon(u);
  const std::uint64_t reg_salt = reg == Register::kWeb ? 0 : 1;

  for (std::size_t r = 0; r < profiles.size(); ++r) {
    const ResolvedProfile prof = resolve(profiles[r], reg, u);
    for (std::size_t s = 0; s < samples_per_region; ++s) {
      Rng rng(derive_seed(derive_seed(seed, r * 2 + reg_salt), s));
      // Unit codes: >= 0 is a construction id, -1 a filler word.
      std::vector<long> units;
      std::size_t instance_tokens = 0;
      for (std::size_t c = 0; c < u.num_constructions; ++c) {
        const std::size_t n = binomial(rng, u.sample_words, prof.probs[c]);
        const std::size_t len = construction_length(u, c);
        for (std::size_t k = 0; k < n && instance_tokens + len <= u.sample_words; ++k) {
          units.push_back(static_cast<long>(c));
          instance_tokens += len;
        }
      }
      units.insert(units.end(), u.sample_words - instance_tokens, -1);
      rng.shuffle(units);

      RegionSample sample;
      sample.region = profiles[r].region;
      sample.reg = reg;
      char id[32];
      std::snprintf(id, sizeof(id), "-synth-%06zu", s);
      sample.sample_id = sample.region + "-" + register_name(reg) + id;
      sample.tokens.reserve(u.sample_words);
      std::vector<std::uint32_t> starts;
      starts.reserve(units.size());
      for (long unit : units) {
        starts.push_back(static_cast<std::uint32_t>(sample.tokens.size()));
        if (unit < 0) {
          sample.tokens.push_back(pick_filler(rng, prof.filler_cdf));
          continue;
        }
        const auto& slots = corpus.grammar.constructions()[unit].slots;
        sample.tokens.push_back(*slots[0].lex);
        for (std::size_t k = 1; k < slots.size(); ++k) {
          const auto& slot = slots[k];
          const std::size_t j = rng.below(u.words_per_class);
          std::size_t tag = 0;
          std::size_t sem = 0;
          if (slot.syn) {
            tag = static_cast<std::size_t>(
                std::find(std::begin(kTags), std::end(kTags), *slot.syn) - std::begin(kTags));
          } else {
            tag = rng.below(kNumTags);
          }
          if (slot.sem) {
            sem = static_cast<std::size_t>(
                std::find(std::begin(kSems), std::end(kSems), *slot.sem) - std::begin(kSems));
          } else {
            sem = rng.below(kNumSems);
          }
          sample.tokens.push_back(content_word(tag, sem, j));
        }
      }
      corpus.samples.push_back(std::move(sample));
      corpus.unit_starts.push_back(std::move(starts));
    }
  }
  return corpus;
}

ProfilePreset parse_preset(std::string_view name) {
  if (name == "disjoint") return ProfilePreset::kDisjoint;
  if (name == "identical") return ProfilePreset::kIdentical;
  if (name == "graded") return ProfilePreset::kGraded;
  if (name == "concentrated") return ProfilePreset::kConcentrated;
  if (name == "spread") return ProfilePreset::kSpread;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown profile preset '" + std::string(name) + "'");
}

std::vector<DialectProfile> make_profiles(const std::vector<std::string>& regions,
                                          ProfilePreset preset,
                                          const SynthUniverse& u,
                                          std::uint64_t seed) {
  check_universe(u);
  const std::size_t nr = regions.size();
  const std::size_t nc = u.num_constructions;
  if (nr < 2) throw Error(ErrorCode::kInvalidArgument, "need at least two regions");
  if (nc < nr) {
    throw Error(ErrorCode::kInvalidArgument, "need at least one construction per region");
  }
  const double avg_len = (u.min_length + u.max_length) / 2.0;
  // Share of each sample's tokens that belongs to construction instances.
  const double budget = 0.3;
  std::vector<DialectProfile> profiles(nr);
  Rng rng(derive_seed(seed, 0x5eed));
  for (std::size_t r = 0; r < nr; ++r) {
    DialectProfile& p = profiles[r];
    p.region = regions[r];
    switch (preset) {
      case ProfilePreset::kDisjoint: {
        const std::size_t owned = (nc + nr - 1) / nr;
        const double prob = budget / (static_cast<double>(owned) * avg_len);
        for (std::size_t c = r; c < nc; c += nr) p.construction_probs[c] = prob;
        break;
      }
      case ProfilePreset::kIdentical: {
        const double prob = budget / (static_cast<double>(nc) * avg_len);
        for (std::size_t c = 0; c < nc; ++c) p.construction_probs[c] = prob;
        break;
      }
      case ProfilePreset::kGraded: {
        const double base = budget / (static_cast<double>(nc) * avg_len);
        for (std::size_t c = 0; c < nc; ++c) {
          p.construction_probs[c] = base * (0.6 + 0.8 * rng.uniform());
        }
        for (int k = 0; k < 20; ++k) {
          p.lexicon_bias[filler_word(rng.below(u.filler_words))] = 2.0;
        }
        break;
      }
      case ProfilePreset::kConcentrated: {
        const double background =
            0.8 * budget / (static_cast<double>(nc - nr) * avg_len);
        for (std::size_t c = nr; c < nc; ++c) p.construction_probs[c] = background;
        for (std::size_t c = 0; c < nr; ++c) p.construction_probs[c] = 0.0;
        p.construction_probs[r] = 0.01;
        break;
      }
      case ProfilePreset::kSpread: {
        const double base = 0.8 * budget / (static_cast<double>(nc) * avg_len);
        for (std::size_t c = 0; c < nc; ++c) {
          p.construction_probs[c] = c % nr == r ? 1.5 * base : base;
        }
        break;
      }
    }
  }
  return profiles;
}

void permute_social_signal(std::vector<DialectProfile>& profiles) {
  const std::size_t n = profiles.size();
  std::vector<std::map<std::size_t, double>> originals;
  for (const auto& p : profiles) originals.push_back(p.construction_probs);
  for (std::size_t r = 0; r < n; ++r) {
    const auto& next = originals[(r + 1) % n];
    RegisterShift shift;
    for (const auto& [c, v] : originals[r]) shift.construction_probs[c] = 0.0;
    for (const auto& [c, v] : next) shift.construction_probs[c] = v;
    if (profiles[r].register_shift) {
      shift.lexicon_bias = profiles[r].register_shift->lexicon_bias;
    }
    profiles[r].register_shift = std::move(shift);
  }
}

std::vector<GeoDocument> to_documents(const SynthCorpus& corpus,
                                      std::size_t mean_words, std::uint64_t seed,
                                      const std::string& month) {
  if (mean_words == 0) throw Error(ErrorCode::kInvalidArgument, "mean_words must be positive");
  std::vector<GeoDocument> docs;
  for (std::size_t s = 0; s < corpus.samples.size(); ++s) {
    const auto& sample = corpus.samples[s];
    const auto& starts = corpus.unit_starts[s];
    Rng rng(derive_seed(seed, s));
    const std::size_t n = sample.tokens.size();
    std::size_t pos = 0;
    std::size_t k = 0;
    while (pos < n) {
      const std::size_t target = pos + 1 + rng.below(2 * mean_words - 1);
      const auto it = std::lower_bound(starts.begin(), starts.end(),
                                       static_cast<std::uint32_t>(std::min(target, n)));
      const std::size_t end = it == starts.end() ? n : std::max<std::size_t>(*it, pos + 1);
      GeoDocument d;
      d.source_id = sample.sample_id + "-d" + std::to_string(k++);
      d.reg = sample.reg;
      d.country = sample.region;
      d.month = month;
      d.language = "en";
      if (d.reg == Register::kWeb) {
        d.domain_suffix = casefold(sample.region);
      } else {
        d.coordinates = Coordinates{0.0, 0.0};
      }
      std::vector<std::string> words(sample.tokens.begin() + pos, sample.tokens.begin() + end);
      d.word_count = words.size();
      d.text = join(words, " ");
      docs.push_back(std::move(d));
      pos = end;
    }
  }
  return docs;
}

}  // namespace dialectid
