#include "dialectid/cxg.h"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "dialectid/error.h"
#include "dialectid/text.h"

namespace dialectid {

SlotConstraint SlotConstraint::lexical(std::string_view form) {
  return {SlotKind::kLex, casefold(form), std::nullopt, std::nullopt};
}
SlotConstraint SlotConstraint::syntactic(std::string_view tag) {
  return {SlotKind::kSyn, std::nullopt, std::string(tag), std::nullopt};
}
SlotConstraint SlotConstraint::semantic(std::string_view cls) {
  return {SlotKind::kSem, std::nullopt, std::nullopt, std::string(cls)};
}
SlotConstraint SlotConstraint::joint(std::string_view tag, std::string_view cls) {
  return {SlotKind::kSynSem, std::nullopt, std::string(tag), std::string(cls)};
}

bool SlotConstraint::well_formed() const {
  auto set = [](const std::optional<std::string>& v) {
    return v.has_value() && !v->empty();
  };
  switch (kind) {
    case SlotKind::kLex: return set(lex) && !syn && !sem;
    case SlotKind::kSyn: return !lex && set(syn) && !sem;
    case SlotKind::kSem: return !lex && !syn && set(sem);
    case SlotKind::kSynSem: return !lex && set(syn) && set(sem);
  }
  return false;
}

std::string SlotConstraint::to_string() const {
  switch (kind) {
    case SlotKind::kLex: return "LEX:" + lex.value_or("");
    case SlotKind::kSyn: return "SYN:" + syn.value_or("");
    case SlotKind::kSem: return "SEM:" + sem.value_or("");
    case SlotKind::kSynSem:
      return "SYNSEM:" + syn.value_or("") + ":" + sem.value_or("");
  }
  return "";
}

bool slot_matches(const SlotConstraint& c, const AnnotatedToken& t) {
  switch (c.kind) {
    case SlotKind::kLex: return c.lex && casefold(t.form) == *c.lex;
    case SlotKind::kSyn: return c.syn && t.syn == *c.syn;
    case SlotKind::kSem: return c.sem && t.sem && *t.sem == *c.sem;
    case SlotKind::kSynSem:
      return c.syn && c.sem && t.syn == *c.syn && t.sem && *t.sem == *c.sem;
  }
  return false;
}

std::string Construction::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (i > 0) out += " -- ";
    out += slots[i].to_string();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Grammar

Grammar::Grammar() : matcher_(std::make_shared<Matcher>(constructions_)) {}

Grammar Grammar::create(std::string name,
                        std::vector<std::vector<SlotConstraint>> constructions) {
  Grammar g;
  g.name_ = std::move(name);
  std::unordered_set<std::string> seen;
  for (auto& slots : constructions) {
    if (slots.empty()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "construction " + std::to_string(g.constructions_.size()) +
                      " has no slots");
    }
    for (const auto& s : slots) {
      if (!s.well_formed()) {
        throw Error(ErrorCode::kInvalidArgument,
                    "malformed slot '" + s.to_string() + "'");
      }
    }
    Construction c{g.constructions_.size(), std::move(slots)};
    if (!seen.insert(c.to_string()).second) {
      throw Error(ErrorCode::kDuplicateConstruction,
                  "duplicate construction '" + c.to_string() + "'");
    }
    g.constructions_.push_back(std::move(c));
  }
  g.matcher_ = std::make_shared<Matcher>(g.constructions_);
  return g;
}

std::string Grammar::to_text() const {
  std::string out;
  for (const auto& c : constructions_) {
    out += c.to_string();
    out += '\n';
  }
  return out;
}

namespace {

bool has_space(std::string_view s) {
  return s.find_first_of(" \t") != std::string_view::npos;
}

SlotConstraint parse_slot(std::string_view text, int lineno,
                          const Tagset* tagset) {
  const std::size_t colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw ParseError(lineno, "slot '" + std::string(text) + "' has no kind prefix");
  }
  const std::string_view kind = text.substr(0, colon);
  const std::string_view value = text.substr(colon + 1);
  if (value.empty() || has_space(value)) {
    throw ParseError(lineno, "slot '" + std::string(text) + "' has a missing or malformed value");
  }
  auto check_tag = [&](std::string_view tag) {
    if (tagset != nullptr && !tagset->count(std::string(tag))) {
      throw ParseError(lineno, "tag '" + std::string(tag) + "' is not in the tagset");
    }
  };
  if (kind == "LEX") return SlotConstraint::lexical(value);
  if (kind == "SEM") {
    if (value.find(':') != std::string_view::npos) {
      throw ParseError(lineno, "SEM slot '" + std::string(text) + "' has extra fields");
    }
    return SlotConstraint::semantic(value);
  }
  if (kind == "SYN") {
    if (value.find(':') != std::string_view::npos) {
      throw ParseError(lineno, "SYN slot '" + std::string(text) + "' has extra fields");
    }
    check_tag(value);
    return SlotConstraint::syntactic(value);
  }
  if (kind == "SYNSEM") {
    const std::size_t sep = value.find(':');
    if (sep == std::string_view::npos || sep == 0 || sep + 1 == value.size() ||
        value.find(':', sep + 1) != std::string_view::npos) {
      throw ParseError(lineno, "SYNSEM slot '" + std::string(text) +
                                   "' needs exactly <tag>:<class>");
    }
    check_tag(value.substr(0, sep));
    return SlotConstraint::joint(value.substr(0, sep), value.substr(sep + 1));
  }
  throw ParseError(lineno, "unknown slot kind '" + std::string(kind) + "'");
}

}  // namespace

Grammar parse_grammar(std::string_view text, std::string name,
                      const Tagset* tagset) {
  std::vector<std::vector<SlotConstraint>> constructions;
  std::unordered_map<std::string, int> first_line;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = normalize_whitespace(line);
    if (body.empty()) continue;

    std::vector<SlotConstraint> slots;
    std::size_t start = 0;
    for (;;) {
      const std::size_t sep = body.find(" -- ", start);
      const std::string_view piece =
          std::string_view(body).substr(start, sep == std::string::npos
                                                   ? std::string::npos
                                                   : sep - start);
      if (piece.empty() || piece == "--") {
        throw ParseError(lineno, "empty slot");
      }
      slots.push_back(parse_slot(piece, lineno, tagset));
      if (sep == std::string::npos) break;
      start = sep + 4;
    }
    Construction probe{0, slots};
    const auto [it, fresh] = first_line.emplace(probe.to_string(), lineno);
    if (!fresh) {
      throw Error(ErrorCode::kDuplicateConstruction,
                  "line " + std::to_string(lineno) +
                      ": duplicate of the construction on line " +
                      std::to_string(it->second));
    }
    constructions.push_back(std::move(slots));
  }
  return Grammar::create(std::move(name), std::move(constructions));
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string stem(const std::string& path) {
  std::size_t slash = path.find_last_of('/');
  std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
  const std::size_t dot = base.find_last_of('.');
  if (dot != std::string::npos && dot > 0) base.erase(dot);
  return base;
}

}  // namespace

Grammar load_grammar(const std::string& path, std::string name,
                     const Tagset* tagset) {
  if (name.empty()) name = stem(path);
  return parse_grammar(read_file(path), std::move(name), tagset);
}

Tagset load_tagset(const std::string& path) {
  std::istringstream in(read_file(path));
  Tagset tags;
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (!t.empty() && t[0] != '#') tags.insert(t);
  }
  return tags;
}

// ---------------------------------------------------------------------------
// Matcher

std::uint32_t Matcher::intern(std::unordered_map<std::string, std::uint32_t>& table,
                              const std::string& s) {
  const auto [it, fresh] =
      table.emplace(s, static_cast<std::uint32_t>(table.size()));
  return it->second;
}

std::uint32_t Matcher::find(
    const std::unordered_map<std::string, std::uint32_t>& table,
    const std::string& s) {
  const auto it = table.find(s);
  return it == table.end() ? kNone : it->second;
}

bool Matcher::slot_hit(const CompiledSlot& slot, const TokenIds& t) {
  switch (slot.kind) {
    case SlotKind::kLex: return t.lex == slot.a;
    case SlotKind::kSyn: return t.syn == slot.a;
    case SlotKind::kSem: return t.sem == slot.a;
    case SlotKind::kSynSem: return t.syn == slot.a && t.sem == slot.b;
  }
  return false;
}

Matcher::Matcher(const std::vector<Construction>& constructions) {
  compiled_.reserve(constructions.size());
  for (const auto& c : constructions) {
    std::vector<CompiledSlot> slots;
    slots.reserve(c.slots.size());
    for (const auto& s : c.slots) {
      switch (s.kind) {
        case SlotKind::kLex:
          slots.push_back({s.kind, intern(lex_ids_, *s.lex), kNone});
          break;
        case SlotKind::kSyn:
          slots.push_back({s.kind, intern(syn_ids_, *s.syn), kNone});
          break;
        case SlotKind::kSem:
          slots.push_back({s.kind, intern(sem_ids_, *s.sem), kNone});
          break;
        case SlotKind::kSynSem:
          slots.push_back({s.kind, intern(syn_ids_, *s.syn), intern(sem_ids_, *s.sem)});
          break;
      }
    }
    compiled_.push_back(std::move(slots));
  }
  by_lex_.resize(lex_ids_.size());
  by_syn_.resize(syn_ids_.size());
  by_sem_.resize(sem_ids_.size());
  for (std::uint32_t id = 0; id < compiled_.size(); ++id) {
    const CompiledSlot& first = compiled_[id].front();
    switch (first.kind) {
      case SlotKind::kLex: by_lex_[first.a].push_back(id); break;
      case SlotKind::kSyn: by_syn_[first.a].push_back(id); break;
      case SlotKind::kSem: by_sem_[first.a].push_back(id); break;
      case SlotKind::kSynSem:
        by_synsem_[(static_cast<std::uint64_t>(first.a) << 32) | first.b].push_back(id);
        break;
    }
  }
}

std::vector<std::uint32_t> Matcher::count(
    std::span<const AnnotatedToken> tokens) const {
  std::vector<std::uint32_t> counts(compiled_.size(), 0);
  if (compiled_.empty() || tokens.empty()) return counts;

  std::vector<TokenIds> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) {
    TokenIds ti;
    ti.lex = lex_ids_.empty() ? kNone : find(lex_ids_, casefold(t.form));
    ti.syn = find(syn_ids_, t.syn);
    ti.sem = t.sem ? find(sem_ids_, *t.sem) : kNone;
    ids.push_back(ti);
  }

  const std::size_t n = ids.size();
  auto verify = [&](std::uint32_t cid, std::size_t start) {
    const auto& slots = compiled_[cid];
    if (start + slots.size() > n) return;
    for (std::size_t k = 1; k < slots.size(); ++k) {
      if (!slot_hit(slots[k], ids[start + k])) return;
    }
    ++counts[cid];
  };
  for (std::size_t i = 0; i < n; ++i) {
    const TokenIds& t = ids[i];
    if (t.lex != kNone) {
      for (std::uint32_t cid : by_lex_[t.lex]) verify(cid, i);
    }
    if (t.syn != kNone) {
      for (std::uint32_t cid : by_syn_[t.syn]) verify(cid, i);
    }
    if (t.sem != kNone) {
      for (std::uint32_t cid : by_sem_[t.sem]) verify(cid, i);
      if (t.syn != kNone && !by_synsem_.empty()) {
        const auto it =
            by_synsem_.find((static_cast<std::uint64_t>(t.syn) << 32) | t.sem);
        if (it != by_synsem_.end()) {
          for (std::uint32_t cid : it->second) verify(cid, i);
        }
      }
    }
  }
  return counts;
}

std::vector<std::uint32_t> count_matches(const Grammar& grammar,
                                         std::span<const AnnotatedToken> tokens) {
  return grammar.matcher().count(tokens);
}

// ---------------------------------------------------------------------------
// Lexicon

void Lexicon::add(std::string_view form, std::string syn,
                  std::optional<std::string> sem) {
  entries_[casefold(form)] = Entry{std::move(syn), std::move(sem)};
}

const Lexicon::Entry* Lexicon::find(std::string_view form) const {
  const auto it = entries_.find(casefold(form));
  return it == entries_.end() ? nullptr : &it->second;
}

Lexicon Lexicon::parse(std::string_view text) {
  Lexicon lex;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || line[0] == '#') continue;
    const auto f = split(line, '\t');
    if (f.size() != 3 || f[0].empty() || f[1].empty() || f[2].empty()) {
      throw ParseError(lineno, "expected 'form<TAB>syn<TAB>sem'");
    }
    std::optional<std::string> sem;
    if (f[2] != "-") sem = f[2];
    lex.add(f[0], f[1], std::move(sem));
  }
  return lex;
}

Lexicon Lexicon::load(const std::string& path) { return parse(read_file(path)); }

std::string Lexicon::to_tsv() const {
  std::vector<const std::pair<const std::string, Entry>*> rows;
  rows.reserve(entries_.size());
  for (const auto& e : entries_) rows.push_back(&e);
  std::sort(rows.begin(), rows.end(),
            [](const auto* a, const auto* b) { return a->first < b->first; });
  std::string out;
  for (const auto* r : rows) {
    out += r->first + '\t' + r->second.syn + '\t' + r->second.sem.value_or("-") + '\n';
  }
  return out;
}

std::vector<AnnotatedToken> annotate(std::span<const std::string> words,
                                     const Lexicon& lexicon) {
  std::vector<AnnotatedToken> out;
  out.reserve(words.size());
  for (const auto& w : words) {
    if (const auto* e = lexicon.find(w)) {
      out.push_back({w, e->syn, e->sem});
    } else {
      out.push_back({w, std::string(kUnknownTag), std::nullopt});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Feature density

std::map<std::string, double> relative_density(
    const std::map<std::string, std::vector<double>>& totals_by_region) {
  std::map<std::string, double> means;
  for (const auto& [region, totals] : totals_by_region) {
    if (totals.empty()) {
      throw Error(ErrorCode::kEmptyRegion, "region '" + region + "' has no samples");
    }
    double sum = 0.0;
    for (double t : totals) sum += t;
    means[region] = sum / static_cast<double>(totals.size());
  }
  double grand = 0.0;
  for (const auto& [region, m] : means) grand += m;
  if (!means.empty()) grand /= static_cast<double>(means.size());

  std::map<std::string, double> out;
  for (const auto& [region, m] : means) {
    out[region] = grand == 0.0 ? 0.0 : (m - grand) / grand * 100.0;
  }
  return out;
}

std::map<std::string, double> feature_density(
    const Grammar& grammar,
    const std::map<std::string, std::vector<std::vector<AnnotatedToken>>>&
        samples_by_region) {
  std::map<std::string, std::vector<double>> totals;
  for (const auto& [region, samples] : samples_by_region) {
    auto& t = totals[region];
    t.reserve(samples.size());
    for (const auto& s : samples) {
      const auto counts = count_matches(grammar, s);
      double sum = 0.0;
      for (auto c : counts) sum += c;
      t.push_back(sum);
    }
  }
  return relative_density(totals);
}

}  // namespace dialectid
