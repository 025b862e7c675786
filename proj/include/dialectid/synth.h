#ifndef DIALECTID_SYNTH_H_
#define DIALECTID_SYNTH_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dialectid/cxg.h"
#include "dialectid/ingest.h"
#include "dialectid/sampling.h"

namespace dialectid {

// Replacement values applied when generating the SOCIAL register.
struct RegisterShift {
  std::map<std::size_t, double> construction_probs;
  std::map<std::string, double> lexicon_bias;
};

struct DialectProfile {
  std::string region;
  // Per-token emission probability of each construction; unlisted ids are 0.
  std::map<std::size_t, double> construction_probs;
  // Replacement sampling weights for filler words (default weight 1).
  std::map<std::string, double> lexicon_bias;
  std::optional<RegisterShift> register_shift;
};

// Shape of the synthetic language shared by all profiles.
struct SynthUniverse {
  std::size_t num_constructions = 40;
  std::size_t min_length = 2;
  std::size_t max_length = 4;
  std::size_t filler_words = 400;
  std::size_t words_per_class = 6;  // content words per (tag, sem) pair
  std::size_t sample_words = kSampleWords;
};

struct SynthCorpus {
  std::vector<RegionSample> samples;
  // Token offsets inside each sample where a filler word or a construction
  // instance begins; documents are only ever cut at these points.
  std::vector<std::vector<std::uint32_t>> unit_starts;
  Lexicon lexicon;
  Grammar grammar;
};

// The grammar every synthetic corpus of this universe is annotated against.
// Construction c starts with the marker word "mk<c>", so matches can only
// begin where an instance was injected.
Grammar synth_grammar(const SynthUniverse& universe, std::string name = "synth");
Lexicon synth_lexicon(const SynthUniverse& universe);
std::string filler_word(std::size_t i);

// Each sample has exactly universe.sample_words tokens. Construction c is
// injected Binomial(sample_words, p_c) times and the remaining positions are
// filler words drawn by lexicon weight; units are then shuffled. Throws
// Error(kInvalidProfile) for probabilities outside [0, 1], negative weights,
// unknown ids or fillers, or expected instance tokens above 90% of a sample.
SynthCorpus generate(const std::vector<DialectProfile>& profiles,
                     std::size_t samples_per_region, std::uint64_t seed,
                     Register reg = Register::kWeb,
                     const SynthUniverse& universe = {});

enum class ProfilePreset {
  kDisjoint,      // region r owns constructions c with c % R == r
  kIdentical,     // no signal
  kGraded,        // shared base rates with per-region multipliers and lexical taste
  kConcentrated,  // one indicator construction per region over a shared background
  kSpread,        // many weakly elevated constructions per region
};

ProfilePreset parse_preset(std::string_view name);

std::vector<DialectProfile> make_profiles(const std::vector<std::string>& regions,
                                          ProfilePreset preset,
                                          const SynthUniverse& universe,
                                          std::uint64_t seed);

// Gives each profile the construction rates of the next region in order for
// the SOCIAL register, so class signal does not transfer across registers.
void permute_social_signal(std::vector<DialectProfile>& profiles);

// Cuts every sample into documents of roughly mean_words words (uniform in
// [1, 2 * mean_words - 1], rounded up to the next unit start).
std::vector<GeoDocument> to_documents(const SynthCorpus& corpus,
                                      std::size_t mean_words, std::uint64_t seed,
                                      const std::string& month = "2018-01");

}  // namespace dialectid

#endif  // DIALECTID_SYNTH_H_
