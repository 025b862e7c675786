#include "dialectid/synth.h"

#include <gtest/gtest.h>

#include <cmath>

#include "dialectid/error.h"
#include "dialectid/text.h"

namespace dialectid {
namespace {

std::size_t count_token(const std::vector<std::string>& tokens, const std::string& w) {
  return static_cast<std::size_t>(std::count(tokens.begin(), tokens.end(), w));
}

TEST(SynthTest, GrammarAndLexiconAgree) {
  const SynthUniverse u;
  const Grammar g = synth_grammar(u);
  ASSERT_EQ(g.size(), u.num_constructions);
  const Lexicon lex = synth_lexicon(u);
  for (const auto& c : g.constructions()) {
    EXPECT_GE(c.slots.size(), u.min_length);
    EXPECT_LE(c.slots.size(), u.max_length);
    EXPECT_EQ(c.slots[0].kind, SlotKind::kLex);
  }
  EXPECT_NE(lex.find(filler_word(0)), nullptr);
}

TEST(SynthTest, InstanceCountsFollowTheBinomialMean) {
  SynthUniverse u;
  u.num_constructions = 4;
  DialectProfile a{"AA", {{0, 0.02}, {1, 0.005}}, {}, {}};
  DialectProfile b{"BB", {{2, 0.01}}, {}, {}};
  const SynthCorpus corpus = generate({a, b}, 500, 99, Register::kWeb, u);
  ASSERT_EQ(corpus.samples.size(), 1000u);
  double sum0 = 0, sum1 = 0;
  for (std::size_t s = 0; s < 500; ++s) {
    const auto& smp = corpus.samples[s];
    ASSERT_EQ(smp.tokens.size(), u.sample_words);
    ASSERT_EQ(smp.region, "AA");
    sum0 += count_token(smp.tokens, "mk0");
    sum1 += count_token(smp.tokens, "mk1");
    ASSERT_EQ(count_token(smp.tokens, "mk2"), 0u);
  }
  // Mean of 500 Binomial(1000, p): sd = sqrt(1000 p (1 - p) / 500).
  EXPECT_NEAR(sum0 / 500, 20.0, 3 * std::sqrt(1000 * 0.02 * 0.98 / 500));
  EXPECT_NEAR(sum1 / 500, 5.0, 3 * std::sqrt(1000 * 0.005 * 0.995 / 500));
}

TEST(SynthTest, MatchesOccurOnlyAtInjectedInstances) {
  const SynthUniverse u;
  const auto profiles = make_profiles({"AA", "BB", "CC"}, ProfilePreset::kGraded, u, 3);
  const SynthCorpus corpus = generate(profiles, 20, 5, Register::kWeb, u);
  for (const auto& s : corpus.samples) {
    const auto counts = count_matches(corpus.grammar, annotate(s.tokens, corpus.lexicon));
    for (std::size_t c = 0; c < counts.size(); ++c) {
      ASSERT_EQ(counts[c], count_token(s.tokens, "mk" + std::to_string(c)));
    }
  }
}

TEST(SynthTest, Deterministic) {
  const SynthUniverse u;
  const auto p = make_profiles({"AA", "BB"}, ProfilePreset::kDisjoint, u, 1);
  const auto x = generate(p, 5, 11, Register::kSocial, u);
  const auto y = generate(p, 5, 11, Register::kSocial, u);
  const auto z = generate(p, 5, 12, Register::kSocial, u);
  EXPECT_EQ(x.samples[3].tokens, y.samples[3].tokens);
  EXPECT_NE(x.samples[3].tokens, z.samples[3].tokens);
  EXPECT_EQ(x.samples[0].sample_id, "AA-SOCIAL-synth-000000");
}

ErrorCode generate_error(DialectProfile p) {
  DialectProfile other{"ZZ", {}, {}, {}};
  try {
    generate({p, other}, 1, 1);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kInternal;
}

TEST(SynthTest, RejectsInvalidProfiles) {
  EXPECT_EQ(generate_error({"AA", {{0, 1.5}}, {}, {}}), ErrorCode::kInvalidProfile);
  EXPECT_EQ(generate_error({"AA", {{0, -0.1}}, {}, {}}), ErrorCode::kInvalidProfile);
  EXPECT_EQ(generate_error({"AA", {{999, 0.1}}, {}, {}}), ErrorCode::kInvalidProfile);
  EXPECT_EQ(generate_error({"AA", {{0, 0.5}}, {}, {}}), ErrorCode::kInvalidProfile);
  EXPECT_EQ(generate_error({"AA", {}, {{"notafiller", 2.0}}, {}}), ErrorCode::kInvalidProfile);
  EXPECT_EQ(generate_error({"AA", {}, {{filler_word(1), -1.0}}, {}}), ErrorCode::kInvalidProfile);
  EXPECT_EQ(generate_error({"AA", {{0, 0.01}}, {}, {}}), ErrorCode::kInternal);  // valid
  EXPECT_THROW(generate({{"AA", {}, {}, {}}}, 1, 1), Error);
}

TEST(SynthTest, PermutedSocialSignalRotatesRates) {
  const SynthUniverse u;
  auto p = make_profiles({"AA", "BB", "CC"}, ProfilePreset::kDisjoint, u, 1);
  permute_social_signal(p);
  ASSERT_TRUE(p[0].register_shift.has_value());
  // AA's SOCIAL rates are BB's WEB rates, minus AA's own constructions.
  for (const auto& [c, prob] : p[0].register_shift->construction_probs) {
    if (prob > 0) {
      EXPECT_EQ(c % 3, 1u);
      EXPECT_EQ(p[1].construction_probs.at(c), prob);
    }
  }
}

TEST(SynthTest, DocumentsConcatenateBackToSamples) {
  const SynthUniverse u;
  const auto p = make_profiles({"AA", "BB"}, ProfilePreset::kGraded, u, 1);
  const SynthCorpus corpus = generate(p, 6, 2, Register::kWeb, u);
  const auto docs = to_documents(corpus, 150, 9);
  std::size_t d = 0;
  for (std::size_t s = 0; s < corpus.samples.size(); ++s) {
    std::vector<std::string> joined;
    std::size_t pos = 0;
    const auto& starts = corpus.unit_starts[s];
    while (d < docs.size() && docs[d].source_id.rfind(corpus.samples[s].sample_id, 0) == 0) {
      ASSERT_TRUE(std::binary_search(starts.begin(), starts.end(), pos)) << pos;
      const auto w = split_words(docs[d].text);
      EXPECT_EQ(docs[d].word_count, w.size());
      EXPECT_EQ(docs[d].country, corpus.samples[s].region);
      joined.insert(joined.end(), w.begin(), w.end());
      pos += w.size();
      ++d;
    }
    ASSERT_EQ(joined, corpus.samples[s].tokens);
  }
  EXPECT_EQ(d, docs.size());
}

TEST(SynthTest, PresetParsing) {
  EXPECT_EQ(parse_preset("spread"), ProfilePreset::kSpread);
  EXPECT_THROW(parse_preset("nope"), Error);
}

}  // namespace
}  // namespace dialectid
