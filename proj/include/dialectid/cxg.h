#ifndef DIALECTID_CXG_H_
#define DIALECTID_CXG_H_

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace dialectid {

inline constexpr std::string_view kUnknownTag = "UNK";

struct AnnotatedToken {
  std::string form;
  std::string syn;
  std::optional<std::string> sem;

  friend bool operator==(const AnnotatedToken&, const AnnotatedToken&) = default;
};

enum class SlotKind { kLex, kSyn, kSem, kSynSem };

struct SlotConstraint {
  SlotKind kind = SlotKind::kSyn;
  std::optional<std::string> lex;  // stored case-folded
  std::optional<std::string> syn;
  std::optional<std::string> sem;

  static SlotConstraint lexical(std::string_view form);
  static SlotConstraint syntactic(std::string_view tag);
  static SlotConstraint semantic(std::string_view cls);
  static SlotConstraint joint(std::string_view tag, std::string_view cls);

  // Exactly the fields required by `kind` are set.
  bool well_formed() const;

  // LEX:<form> | SYN:<tag> | SEM:<class> | SYNSEM:<tag>:<class>
  std::string to_string() const;

  friend bool operator==(const SlotConstraint&, const SlotConstraint&) = default;
};

bool slot_matches(const SlotConstraint& constraint, const AnnotatedToken& token);

struct Construction {
  std::size_t id = 0;
  std::vector<SlotConstraint> slots;

  std::string to_string() const;  // slots joined by " -- "
};

class Matcher;

// Immutable after creation; safe to share across threads.
class Grammar {
 public:
  Grammar();

  // Checks the invariants (non-empty well-formed slots, no duplicates),
  // assigns ids 0..n-1 in order and compiles the matcher.
  static Grammar create(std::string name,
                        std::vector<std::vector<SlotConstraint>> constructions);

  const std::string& name() const { return name_; }
  const std::vector<Construction>& constructions() const { return constructions_; }
  std::size_t size() const { return constructions_.size(); }
  bool empty() const { return constructions_.empty(); }
  const Matcher& matcher() const { return *matcher_; }

  // One construction per line, in id order.
  std::string to_text() const;

 private:
  std::string name_;
  std::vector<Construction> constructions_;
  std::shared_ptr<const Matcher> matcher_;
};

using Tagset = std::set<std::string>;

// Grammar file: one construction per line, slots separated by " -- ", '#'
// starts a comment. Throws ParseError (with the line) for malformed slots or
// SYN tags outside `tagset` (when given), and Error(kDuplicateConstruction)
// for a repeated construction.
Grammar parse_grammar(std::string_view text, std::string name = "grammar",
                      const Tagset* tagset = nullptr);
Grammar load_grammar(const std::string& path, std::string name = "",
                     const Tagset* tagset = nullptr);
Tagset load_tagset(const std::string& path);  // one tag per line

// Counts, for every construction, the start positions where all of its slots
// match contiguous tokens. Overlapping and nested matches all count.
//
// Constructions are bucketed by their first slot in four hash indexes (LEX,
// SYN, SEM, SYN+SEM); each token consults only the buckets its own
// (form, syn, sem) can hit and verifies the remaining slots by interned id.
class Matcher {
 public:
  explicit Matcher(const std::vector<Construction>& constructions);

  std::vector<std::uint32_t> count(std::span<const AnnotatedToken> tokens) const;

 private:
  static constexpr std::uint32_t kNone = UINT32_MAX;

  struct CompiledSlot {
    SlotKind kind;
    std::uint32_t a;  // lex, syn or sem id
    std::uint32_t b;  // sem id for kSynSem
  };
  struct TokenIds {
    std::uint32_t lex;
    std::uint32_t syn;
    std::uint32_t sem;
  };

  static std::uint32_t intern(std::unordered_map<std::string, std::uint32_t>& table,
                              const std::string& s);
  static std::uint32_t find(const std::unordered_map<std::string, std::uint32_t>& table,
                            const std::string& s);
  static bool slot_hit(const CompiledSlot& slot, const TokenIds& t);

  std::unordered_map<std::string, std::uint32_t> lex_ids_;
  std::unordered_map<std::string, std::uint32_t> syn_ids_;
  std::unordered_map<std::string, std::uint32_t> sem_ids_;
  std::vector<std::vector<CompiledSlot>> compiled_;
  std::vector<std::vector<std::uint32_t>> by_lex_;
  std::vector<std::vector<std::uint32_t>> by_syn_;
  std::vector<std::vector<std::uint32_t>> by_sem_;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> by_synsem_;
};

std::vector<std::uint32_t> count_matches(const Grammar& grammar,
                                         std::span<const AnnotatedToken> tokens);

// form -> (syn, sem). Keys are case-folded.
class Lexicon {
 public:
  struct Entry {
    std::string syn;
    std::optional<std::string> sem;
  };

  Lexicon() = default;
  void add(std::string_view form, std::string syn, std::optional<std::string> sem);
  const Entry* find(std::string_view form) const;
  std::size_t size() const { return entries_.size(); }

  // TSV "form<TAB>syn<TAB>sem", sem may be "-". Later duplicates win.
  static Lexicon parse(std::string_view text);
  static Lexicon load(const std::string& path);
  // Entries sorted by form.
  std::string to_tsv() const;

 private:
  std::unordered_map<std::string, Entry> entries_;
};

// Case-folded lookup; unknown words get syn UNK and no sem.
std::vector<AnnotatedToken> annotate(std::span<const std::string> words,
                                     const Lexicon& lexicon);

// Per-region mean of the per-sample construction totals, reported as the
// percentage deviation from the unweighted mean of the region means.
// Throws Error(kEmptyRegion) when a region has no samples.
std::map<std::string, double> relative_density(
    const std::map<std::string, std::vector<double>>& totals_by_region);

std::map<std::string, double> feature_density(
    const Grammar& grammar,
    const std::map<std::string, std::vector<std::vector<AnnotatedToken>>>&
        samples_by_region);

}  // namespace dialectid

#endif  // DIALECTID_CXG_H_
