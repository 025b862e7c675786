#include "dialectid/pipeline.h"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "dialectid/classify.h"
#include "dialectid/cxg.h"
#include "dialectid/error.h"
#include "dialectid/features.h"
#include "dialectid/ingest.h"
#include "dialectid/mapping.h"
#include "dialectid/parallel.h"
#include "dialectid/random.h"
#include "dialectid/sampling.h"
#include "dialectid/synth.h"
#include "dialectid/text.h"
#include "dialectid/unmasking.h"
#include "json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace dialectid {

namespace {

constexpr Stage kAllStages[] = {
    Stage::kIngest,   Stage::kSynth,       Stage::kMap,     Stage::kSample,
    Stage::kFeaturize, Stage::kTrain,      Stage::kEval,    Stage::kCrossdomain,
    Stage::kDensity,  Stage::kUnmask,      Stage::kSimilarity,
};

enum class KeyKind { kString, kPath, kInt, kReal, kList, kGrammars };

struct KeyInfo {
  const char* key;
  KeyKind kind;
  const char* fallback;
};

const KeyInfo kSchema[] = {
    {"seed", KeyKind::kInt, ""},
    {"output_dir", KeyKind::kPath, "dialectid-out"},
    {"stages", KeyKind::kList, "all"},
    {"source", KeyKind::kString, "ingest"},
    {"jobs", KeyKind::kInt, "1"},
    // ingest
    {"web_dump", KeyKind::kPath, ""},
    {"social_dump", KeyKind::kPath, ""},
    {"tld_table", KeyKind::kPath, ""},
    {"tld_exclusions", KeyKind::kPath, ""},
    {"boilerplate", KeyKind::kPath, ""},
    {"cities", KeyKind::kPath, ""},
    {"language", KeyKind::kString, "en"},
    {"min_web_words", KeyKind::kInt, "40"},
    {"min_social_chars", KeyKind::kInt, "50"},
    {"city_radius_km", KeyKind::kReal, "50"},
    // map
    {"threshold", KeyKind::kInt, "15000000"},
    {"region_map", KeyKind::kPath, ""},
    // sample
    {"dev_per_region", KeyKind::kInt, "2000"},
    {"max_train", KeyKind::kInt, "25000"},
    {"max_test", KeyKind::kInt, "5000"},
    {"min_train", KeyKind::kInt, "12000"},
    {"min_test", KeyKind::kInt, "2500"},
    // featurize
    {"grammars", KeyKind::kGrammars, ""},
    {"lexicon", KeyKind::kPath, ""},
    {"tagset", KeyKind::kPath, ""},
    {"function_words", KeyKind::kPath, ""},
    {"feature_sets", KeyKind::kList, ""},
    {"hash_dim", KeyKind::kInt, "30000"},
    // classify
    {"c_grid", KeyKind::kList, "0.01,0.1,1,10"},
    {"svm_tolerance", KeyKind::kReal, "0.0001"},
    {"svm_max_epochs", KeyKind::kInt, "1000"},
    {"crossdomain_feature_sets", KeyKind::kList, ""},
    {"density_register", KeyKind::kString, "WEB"},
    {"unmask_rounds", KeyKind::kInt, "100"},
    {"unmask_feature_sets", KeyKind::kList, ""},
    {"unmask_registers", KeyKind::kList, "WEB,SOCIAL"},
    {"similarity_feature_set", KeyKind::kString, ""},
    {"similarity_register", KeyKind::kString, "WEB"},
    // synth
    {"synth_regions", KeyKind::kList, "ZA,NG,CA,US,IN,PK,MY,PH,GB,IE,PT,CH,AU,NZ"},
    {"synth_preset", KeyKind::kString, "graded"},
    {"synth_samples_per_region", KeyKind::kInt, "60"},
    {"synth_constructions", KeyKind::kInt, "40"},
    {"synth_social", KeyKind::kString, "shared"},
    {"synth_doc_words", KeyKind::kInt, "200"},
};

const KeyInfo* find_key(const std::string& key) {
  for (const auto& k : kSchema) {
    if (key == k.key) return &k;
  }
  return nullptr;
}

[[noreturn]] void config_error(const std::string& msg) {
  throw Error(ErrorCode::kConfig, msg);
}

std::vector<std::string> list_value(const std::string& v) {
  std::vector<std::string> out;
  for (const auto& part : split(v, ',')) {
    const std::string t = trim(part);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

long long parse_int(const std::string& key, const std::string& v) {
  long long x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) {
    config_error(key + ": '" + v + "' is not an integer");
  }
  return x;
}

double parse_real(const std::string& key, const std::string& v) {
  double x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(x)) {
    config_error(key + ": '" + v + "' is not a number");
  }
  return x;
}

std::string resolve_path(const std::string& base, const std::string& p) {
  if (p.empty() || base.empty() || fs::path(p).is_absolute()) return p;
  return (fs::path(base) / p).lexically_normal().string();
}

// name=path pairs in config order.
std::vector<std::pair<std::string, std::string>> grammar_entries(const std::string& v) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& item : list_value(v)) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == item.size()) {
      config_error("grammars: expected NAME=PATH, got '" + item + "'");
    }
    out.emplace_back(trim(item.substr(0, eq)), trim(item.substr(eq + 1)));
  }
  return out;
}

bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '-' || c == '_' || c == '.';
  });
}

}  // namespace

const char* stage_name(Stage s) {
  switch (s) {
    case Stage::kIngest: return "ingest";
    case Stage::kSynth: return "synth";
    case Stage::kMap: return "map";
    case Stage::kSample: return "sample";
    case Stage::kFeaturize: return "featurize";
    case Stage::kTrain: return "train";
    case Stage::kEval: return "eval";
    case Stage::kCrossdomain: return "crossdomain";
    case Stage::kDensity: return "density";
    case Stage::kUnmask: return "unmask";
    case Stage::kSimilarity: return "similarity";
  }
  return "?";
}

Stage parse_stage(std::string_view name) {
  for (Stage s : kAllStages) {
    if (name == stage_name(s)) return s;
  }
  throw Error(ErrorCode::kConfig, "unknown stage '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// RunConfig

bool RunConfig::is_known_key(const std::string& key) { return find_key(key) != nullptr; }

RunConfig RunConfig::parse(std::string_view text, const std::string& base_dir) {
  RunConfig cfg;
  int lineno = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      config_error("line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    const KeyInfo* info = find_key(key);
    if (!info) {
      config_error("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    if (info->kind == KeyKind::kPath) {
      value = resolve_path(base_dir, value);
    } else if (info->kind == KeyKind::kGrammars) {
      std::vector<std::string> parts;
      for (auto& [name, path] : grammar_entries(value)) {
        parts.push_back(name + "=" + resolve_path(base_dir, path));
      }
      value = join(parts, ",");
    }
    cfg.values_[key] = value;
  }
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), fs::path(path).parent_path().string());
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (!find_key(key)) config_error("unknown key '" + key + "'");
  values_[key] = trim(value);
}

bool RunConfig::has(const std::string& key) const {
  const auto it = values_.find(key);
  return it != values_.end() && !it->second.empty();
}

std::string RunConfig::get(const std::string& key) const {
  const KeyInfo* info = find_key(key);
  if (!info) config_error("unknown key '" + key + "'");
  const auto it = values_.find(key);
  if (it != values_.end() && !it->second.empty()) return it->second;
  return info->fallback;
}

std::vector<Stage> RunConfig::stages() const {
  std::set<Stage> wanted;
  for (const auto& name : list_value(get("stages"))) {
    if (name == "all") {
      for (Stage s : kAllStages) {
        if (s == Stage::kIngest && get("source") == "synth") continue;
        if (s == Stage::kSynth && get("source") != "synth") continue;
        wanted.insert(s);
      }
    } else {
      wanted.insert(parse_stage(name));
    }
  }
  return {wanted.begin(), wanted.end()};
}

void RunConfig::validate() const {
  if (!has("seed")) config_error("seed is mandatory");
  for (const auto& [key, value] : values_) {
    const KeyInfo* info = find_key(key);
    if (value.empty()) continue;
    switch (info->kind) {
      case KeyKind::kInt: {
        const long long v = parse_int(key, value);
        if (key != "seed" && v < 0) config_error(key + " must not be negative");
        break;
      }
      case KeyKind::kReal: parse_real(key, value); break;
      case KeyKind::kPath:
        if (key != "output_dir" && !fs::exists(value)) {
          config_error(key + ": path does not exist: " + value);
        }
        break;
      case KeyKind::kGrammars:
        for (const auto& [name, path] : grammar_entries(value)) {
          if (!valid_name(name)) config_error("grammars: bad name '" + name + "'");
          if (!fs::exists(path)) {
            config_error("grammars: path for " + name + " does not exist: " + path);
          }
        }
        break;
      default: break;
    }
  }
  for (const auto& c : list_value(get("c_grid"))) {
    if (parse_real("c_grid", c) <= 0) config_error("c_grid values must be positive");
  }
  if (list_value(get("c_grid")).empty()) config_error("c_grid is empty");
  const std::string source = get("source");
  if (source != "ingest" && source != "synth") {
    config_error("source must be 'ingest' or 'synth'");
  }
  // Name lookups throw kInvalidArgument; in a config they are config errors.
  auto named = [](const std::function<void()>& fn) {
    try {
      fn();
    } catch (const Error& e) {
      config_error(e.what());
    }
  };
  named([&] {
    parse_register(get("density_register"));
    parse_register(get("similarity_register"));
    for (const auto& r : list_value(get("unmask_registers"))) parse_register(r);
    parse_preset(get("synth_preset"));
  });
  if (get("synth_social") != "shared" && get("synth_social") != "permuted") {
    config_error("synth_social must be 'shared' or 'permuted'");
  }
  std::vector<Stage> requested;
  named([&] { requested = stages(); });
  if (requested.empty()) config_error("no stages requested");
  const bool wants_ingest =
      std::find(requested.begin(), requested.end(), Stage::kIngest) != requested.end();
  if (wants_ingest) {
    if (!has("web_dump") && !has("social_dump")) {
      config_error("ingest needs web_dump or social_dump");
    }
    if (has("web_dump") && !has("tld_table")) config_error("web_dump needs tld_table");
    if (has("social_dump") && !has("cities")) config_error("social_dump needs cities");
  }
  const auto fw = list_value(get("feature_sets"));
  std::set<std::string> grammar_names;
  for (const auto& [name, path] : grammar_entries(get("grammars"))) grammar_names.insert(name);
  for (const auto& name : fw) {
    if (name == "funct") {
      if (!has("function_words")) config_error("feature set funct needs function_words");
    } else if (name == "ngram1" || name == "ngram2" || name == "ngram3") {
    } else if (!grammar_names.count(name) && source != "synth") {
      config_error("feature set '" + name + "' is neither a grammar nor a known space");
    }
  }
  if (source != "synth" && !grammar_names.empty() && !has("lexicon")) {
    const bool featurize =
        std::find(requested.begin(), requested.end(), Stage::kFeaturize) != requested.end();
    if (featurize) config_error("grammar feature sets need a lexicon");
  }
}

// ---------------------------------------------------------------------------
// Pipeline

namespace {

std::string hash_hex(std::string_view data) {
  const Hash128 h = fnv1a128(data);
  return hex64(h.hi) + hex64(h.lo);
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string file_hash(const fs::path& p) { return hash_hex(read_file(p)); }

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

struct FeatureSet {
  std::string name;
  FeatureSpace space;
  std::shared_ptr<Grammar> grammar;  // cxg only
};

struct SampleMeta {
  std::string id;
  std::string region;
  Register reg = Register::kWeb;
  Split split = Split::kUnassigned;
};

class Runner {
 public:
  Runner(const RunConfig& cfg, const LogFn& log) : cfg_(cfg), log_(log) {
    out_ = cfg.get("output_dir");
    const char* env = std::getenv(kCacheDirEnv);
    cache_ = env && *env ? fs::path(env) : out_ / "cache";
    reports_ = out_ / "reports";
    seed_ = static_cast<std::uint64_t>(parse_int("seed", cfg.get("seed")));
    jobs_ = static_cast<int>(std::max<long long>(1, parse_int("jobs", cfg.get("jobs"))));
  }

  RunSummary run(std::vector<Stage> stages);

 private:
  void log(const std::string& s) const {
    if (log_) log_(s);
  }
  std::string rel(const fs::path& p) const {
    const fs::path r = p.lexically_proximate(out_);
    return r.generic_string();
  }

  fs::path docs_path() const { return cache_ / "docs.jsonl"; }
  fs::path inventory_path() const { return cache_ / "inventory.txt"; }
  fs::path samples_path() const { return cache_ / "samples.jsonl"; }
  fs::path index_path() const { return cache_ / "vectors" / "index.tsv"; }
  fs::path vector_path(const std::string& fs) const { return cache_ / "vectors" / (fs + ".vec"); }
  fs::path model_path(const std::string& fs, Register r) const {
    return cache_ / "models" / (fs + "-" + register_name(r) + ".json");
  }
  fs::path synth_dir() const { return cache_ / "synth"; }

  std::vector<std::pair<std::string, std::string>> grammar_paths() const;
  std::string lexicon_path() const;
  std::vector<FeatureSet> feature_sets() const;
  std::vector<std::string> feature_set_names() const;
  std::vector<std::string> named_sets(const std::string& key,
                                      const std::vector<std::string>& fallback) const;
  std::vector<std::string> similarity_sets() const;
  TrainOptions train_options() const;

  std::vector<std::string> stage_keys(Stage s) const;
  std::vector<fs::path> stage_inputs(Stage s) const;
  std::string input_hash(Stage s) const;

  void write(const fs::path& p, const std::string& content);
  std::vector<SampleMeta> read_index() const;
  RegisterData load_vectors(const std::string& fs_name) const;

  void run_ingest();
  void run_synth();
  void run_map();
  void run_sample();
  void run_featurize();
  void run_train();
  void run_eval();
  void run_crossdomain();
  void run_density();
  void run_unmask();
  void run_similarity();

  const RunConfig& cfg_;
  LogFn log_;
  fs::path out_;
  fs::path cache_;
  fs::path reports_;
  std::uint64_t seed_ = 0;
  int jobs_ = 1;
  std::vector<fs::path> written_;
  std::vector<std::string> warnings_;
};

std::vector<std::pair<std::string, std::string>> Runner::grammar_paths() const {
  if (cfg_.has("grammars")) return grammar_entries(cfg_.get("grammars"));
  if (cfg_.get("source") == "synth") {
    return {{"CxG-1", (synth_dir() / "CxG-1.txt").string()},
            {"CxG-2", (synth_dir() / "CxG-2.txt").string()}};
  }
  return {};
}

std::string Runner::lexicon_path() const {
  if (cfg_.has("lexicon")) return cfg_.get("lexicon");
  if (cfg_.get("source") == "synth") return (synth_dir() / "lexicon.tsv").string();
  return "";
}

std::vector<std::string> Runner::feature_set_names() const {
  auto names = list_value(cfg_.get("feature_sets"));
  if (!names.empty()) return names;
  for (const auto& [name, path] : grammar_paths()) names.push_back(name);
  if (cfg_.has("function_words")) names.push_back("funct");
  names.insert(names.end(), {"ngram1", "ngram2", "ngram3"});
  return names;
}

std::vector<std::string> Runner::named_sets(const std::string& key,
                                            const std::vector<std::string>& fallback) const {
  auto names = list_value(cfg_.get(key));
  if (names.empty()) names = fallback;
  const auto all = feature_set_names();
  for (const auto& n : names) {
    if (std::find(all.begin(), all.end(), n) == all.end()) {
      throw Error(ErrorCode::kConfig, key + ": '" + n + "' is not in feature_sets");
    }
  }
  return names;
}

std::vector<std::string> Runner::similarity_sets() const {
  const auto grammars = grammar_paths();
  return named_sets("similarity_feature_set",
                    {grammars.empty() ? feature_set_names().front() : grammars.back().first});
}

std::vector<FeatureSet> Runner::feature_sets() const {
  const auto grammars = grammar_paths();
  const std::uint32_t hash_dim =
      static_cast<std::uint32_t>(parse_int("hash_dim", cfg_.get("hash_dim")));
  std::optional<Tagset> tagset;
  if (cfg_.has("tagset")) tagset = load_tagset(cfg_.get("tagset"));
  std::vector<FeatureSet> out;
  for (const auto& name : feature_set_names()) {
    FeatureSet f;
    f.name = name;
    if (name == "ngram1" || name == "ngram2" || name == "ngram3") {
      f.space = FeatureSpace::hash_ngram(name.back() - '0', hash_dim);
    } else if (name == "funct") {
      const auto list = FunctionWordList::load(cfg_.get("function_words"));
      f.space = FeatureSpace::function_words(static_cast<std::uint32_t>(list.size()));
    } else {
      const auto it = std::find_if(grammars.begin(), grammars.end(),
                                   [&](const auto& g) { return g.first == name; });
      if (it == grammars.end()) {
        throw Error(ErrorCode::kConfig, "feature set '" + name + "' has no grammar");
      }
      f.grammar = std::make_shared<Grammar>(
          load_grammar(it->second, name, tagset ? &*tagset : nullptr));
      f.space = FeatureSpace::cxg(name, static_cast<std::uint32_t>(f.grammar->size()));
    }
    out.push_back(std::move(f));
  }
  return out;
}

TrainOptions Runner::train_options() const {
  TrainOptions o;
  o.c_grid.clear();
  for (const auto& c : list_value(cfg_.get("c_grid"))) o.c_grid.push_back(parse_real("c_grid", c));
  o.tolerance = parse_real("svm_tolerance", cfg_.get("svm_tolerance"));
  o.max_epochs = static_cast<int>(parse_int("svm_max_epochs", cfg_.get("svm_max_epochs")));
  o.seed = derive_seed(seed_, 0x7a11);
  o.jobs = jobs_;
  return o;
}

std::vector<std::string> Runner::stage_keys(Stage s) const {
  switch (s) {
    case Stage::kIngest:
      return {"web_dump", "social_dump", "tld_table", "tld_exclusions", "boilerplate",
              "cities", "language", "min_web_words", "min_social_chars", "city_radius_km"};
    case Stage::kSynth:
      return {"seed", "synth_regions", "synth_preset", "synth_samples_per_region",
              "synth_constructions", "synth_social", "synth_doc_words"};
    case Stage::kMap: return {"threshold", "region_map"};
    case Stage::kSample:
      return {"seed", "dev_per_region", "max_train", "max_test", "min_train", "min_test"};
    case Stage::kFeaturize:
      return {"feature_sets", "grammars", "lexicon", "tagset", "function_words", "hash_dim"};
    case Stage::kTrain:
    case Stage::kCrossdomain:
      return {"seed", "feature_sets", "crossdomain_feature_sets", "c_grid", "svm_tolerance",
              "svm_max_epochs"};
    case Stage::kEval: return {"feature_sets"};
    case Stage::kDensity: return {"density_register"};
    case Stage::kUnmask:
      return {"seed", "c_grid", "svm_tolerance", "svm_max_epochs", "unmask_rounds",
              "unmask_feature_sets", "unmask_registers"};
    case Stage::kSimilarity: return {"similarity_feature_set", "similarity_register"};
  }
  return {};
}

std::vector<fs::path> Runner::stage_inputs(Stage s) const {
  std::vector<fs::path> in;
  auto add_if = [&](const std::string& key) {
    if (cfg_.has(key)) in.emplace_back(cfg_.get(key));
  };
  auto add_vectors = [&](const std::vector<std::string>& names) {
    in.push_back(index_path());
    for (const auto& n : names) in.push_back(vector_path(n));
  };
  auto add_models = [&](const std::vector<std::string>& names) {
    for (const auto& n : names) {
      for (Register r : {Register::kWeb, Register::kSocial}) {
        if (fs::exists(model_path(n, r))) in.push_back(model_path(n, r));
      }
    }
  };
  switch (s) {
    case Stage::kIngest:
      for (const char* k : {"web_dump", "social_dump", "tld_table", "tld_exclusions",
                            "boilerplate", "cities"}) {
        add_if(k);
      }
      break;
    case Stage::kSynth: break;
    case Stage::kMap:
      in.push_back(docs_path());
      add_if("region_map");
      break;
    case Stage::kSample:
      in.push_back(docs_path());
      in.push_back(inventory_path());
      break;
    case Stage::kFeaturize:
      in.push_back(samples_path());
      for (const auto& [name, path] : grammar_paths()) in.emplace_back(path);
      if (!lexicon_path().empty()) in.emplace_back(lexicon_path());
      add_if("tagset");
      add_if("function_words");
      break;
    case Stage::kTrain: add_vectors(feature_set_names()); break;
    case Stage::kEval:
      add_vectors(feature_set_names());
      add_models(feature_set_names());
      break;
    case Stage::kCrossdomain: {
      const auto names = named_sets("crossdomain_feature_sets", feature_set_names());
      add_vectors(names);
      add_models(names);
      break;
    }
    case Stage::kDensity: {
      std::vector<std::string> names;
      for (const auto& [name, path] : grammar_paths()) names.push_back(name);
      add_vectors(names);
      break;
    }
    case Stage::kUnmask: add_vectors(named_sets("unmask_feature_sets", {})); break;
    case Stage::kSimilarity: {
      const auto names = similarity_sets();
      add_vectors(names);
      add_models(names);
      break;
    }
  }
  return in;
}

std::string Runner::input_hash(Stage s) const {
  std::string material = std::string(stage_name(s)) + "\n" + kVersion + "\n";
  for (const auto& k : stage_keys(s)) material += k + "=" + cfg_.get(k) + "\n";
  for (const auto& p : stage_inputs(s)) {
    if (!fs::exists(p)) {
      throw Error(ErrorCode::kStage, "missing input " + p.string() +
                                         "; run the stage that produces it first");
    }
    material += rel(p) + ":" + file_hash(p) + "\n";
  }
  return hash_hex(material);
}

void Runner::write(const fs::path& p, const std::string& content) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + p.string());
  out << content;
  out.close();
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + p.string());
  written_.push_back(p);
}

std::vector<SampleMeta> Runner::read_index() const {
  std::ifstream in(index_path());
  if (!in) throw Error(ErrorCode::kStage, "missing " + index_path().string() + "; run featurize");
  std::vector<SampleMeta> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, '\t');
    if (f.size() != 4) throw Error(ErrorCode::kParse, "malformed index line: " + line);
    out.push_back({f[0], f[1], parse_register(f[2]), parse_split(f[3])});
  }
  return out;
}

RegisterData Runner::load_vectors(const std::string& fs_name) const {
  const auto index = read_index();
  std::ifstream in(vector_path(fs_name));
  if (!in) {
    throw Error(ErrorCode::kStage, "missing vectors for " + fs_name + "; run featurize");
  }
  RegisterData data;
  std::string line;
  std::size_t i = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto [id, v] = parse_vector_record(line);
    if (i >= index.size() || index[i].id != id) {
      throw Error(ErrorCode::kStage, "vectors for " + fs_name + " are out of sync with the index");
    }
    const SampleMeta& m = index[i++];
    SplitData& sd = data[m.reg];
    Dataset* target = nullptr;
    switch (m.split) {
      case Split::kTrain: target = &sd.train; break;
      case Split::kDev: target = &sd.dev; break;
      case Split::kTest: target = &sd.test; break;
      case Split::kUnassigned: continue;
    }
    target->space_id = v.space.id();
    target->dim = v.space.dim;
    target->add(std::move(v.values), m.region);
  }
  if (i != index.size()) {
    throw Error(ErrorCode::kStage, "vectors for " + fs_name + " are out of sync with the index");
  }
  for (auto& [reg, sd] : data) {
    for (Dataset* d : {&sd.train, &sd.dev, &sd.test}) {
      const Dataset& ref = !sd.train.empty() ? sd.train : !sd.test.empty() ? sd.test : sd.dev;
      if (d->space_id.empty()) {
        d->space_id = ref.space_id;
        d->dim = ref.dim;
      }
    }
  }
  return data;
}

// -- stages ------------------------------------------------------------------

void Runner::run_ingest() {
  TldTable tlds;
  if (cfg_.has("tld_table")) {
    tlds = TldTable::load(cfg_.get("tld_table"), cfg_.get("tld_exclusions"));
  }
  std::optional<CityIndex> cities;
  if (cfg_.has("cities")) cities.emplace(CityIndex::load(cfg_.get("cities")));
  BoilerplateFilter boilerplate;
  if (cfg_.has("boilerplate")) boilerplate = BoilerplateFilter::load(cfg_.get("boilerplate"));
  IngestOptions opts;
  opts.min_web_words = parse_int("min_web_words", cfg_.get("min_web_words"));
  opts.min_social_chars = parse_int("min_social_chars", cfg_.get("min_social_chars"));
  opts.city_radius_km = parse_real("city_radius_km", cfg_.get("city_radius_km"));
  opts.language = cfg_.get("language");

  std::vector<GeoDocument> docs;
  std::ostringstream counts;
  counts << "register,seen,too_short,wrong_language,not_georeferenced,malformed,kept\n";
  for (Register reg : {Register::kWeb, Register::kSocial}) {
    const std::string key = reg == Register::kWeb ? "web_dump" : "social_dump";
    if (!cfg_.has(key)) continue;
    Ingestor ingestor(tlds, cities ? &*cities : nullptr, boilerplate, opts);
    std::ifstream in(cfg_.get(key));
    if (!in) throw Error(ErrorCode::kIo, "cannot open " + cfg_.get(key));
    for_each_ndjson_line(in, [&](std::string_view line, int) {
      std::optional<GeoDocument> doc;
      try {
        if (reg == Register::kWeb) {
          doc = ingestor.web(parse_web_record(line));
        } else {
          doc = ingestor.social(parse_social_record(line));
        }
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kParse) throw;
        ++ingestor.counters().seen;
        ++ingestor.counters().malformed;
      }
      if (doc) docs.push_back(std::move(*doc));
    });
    const auto& c = ingestor.counters();
    counts << register_name(reg) << ',' << c.seen << ',' << c.too_short << ','
           << c.wrong_language << ',' << c.not_georeferenced << ',' << c.malformed << ','
           << c.kept << '\n';
    log(std::string(register_name(reg)) + ": kept " + std::to_string(c.kept) + " of " +
        std::to_string(c.seen));
  }
  const std::size_t before = docs.size();
  docs = deduplicate(std::move(docs));
  log("dedup removed " + std::to_string(before - docs.size()) + " documents");
  counts << "DUPLICATES,,,,,," << before - docs.size() << '\n';
  std::string body;
  for (const auto& d : docs) body += to_ndjson(d) + '\n';
  write(docs_path(), body);
  write(reports_ / "ingest_counts.csv", counts.str());
}

void Runner::run_synth() {
  SynthUniverse u;
  u.num_constructions = parse_int("synth_constructions", cfg_.get("synth_constructions"));
  const auto regions = list_value(cfg_.get("synth_regions"));
  const std::size_t per_region =
      parse_int("synth_samples_per_region", cfg_.get("synth_samples_per_region"));
  const std::size_t doc_words = parse_int("synth_doc_words", cfg_.get("synth_doc_words"));
  auto profiles = make_profiles(regions, parse_preset(cfg_.get("synth_preset")), u, seed_);
  if (cfg_.get("synth_social") == "permuted") permute_social_signal(profiles);

  std::string body;
  SynthCorpus web = generate(profiles, per_region, derive_seed(seed_, 1), Register::kWeb, u);
  for (const auto& d : to_documents(web, doc_words, derive_seed(seed_, 2), "2017-03")) {
    body += to_ndjson(d) + '\n';
  }
  SynthCorpus social =
      generate(profiles, per_region, derive_seed(seed_, 1), Register::kSocial, u);
  for (const auto& d : to_documents(social, doc_words, derive_seed(seed_, 3), "2018-06")) {
    body += to_ndjson(d) + '\n';
  }
  write(docs_path(), body);

  // CxG-2 is the full grammar; CxG-1 keeps the first half of its constructions.
  const Grammar& full = web.grammar;
  std::vector<std::vector<SlotConstraint>> half;
  for (std::size_t c = 0; c < (full.size() + 1) / 2; ++c) {
    half.push_back(full.constructions()[c].slots);
  }
  write(synth_dir() / "CxG-1.txt", Grammar::create("CxG-1", half).to_text());
  write(synth_dir() / "CxG-2.txt", full.to_text());
  write(synth_dir() / "lexicon.tsv", web.lexicon.to_tsv());
  log("generated " + std::to_string(web.samples.size() + social.samples.size()) +
      " synthetic samples");
}

void Runner::run_map() {
  CorpusStats stats;
  std::ifstream in(docs_path());
  if (!in) throw Error(ErrorCode::kStage, "missing documents; run ingest or synth");
  for_each_ndjson_line(in, [&](std::string_view line, int) {
    stats.add(geo_document_from_ndjson(line));
  });
  const auto threshold = static_cast<std::uint64_t>(parse_int("threshold", cfg_.get("threshold")));
  const VarietyInventory inv = select_inventory(stats, threshold);
  std::ostringstream s;
  write_stats_csv(s, stats);
  write(reports_ / "corpus_stats.csv", s.str());
  std::ostringstream i;
  write_inventory(i, inv);
  write(inventory_path(), i.str());
  write(reports_ / "inventory.txt", i.str());
  if (cfg_.has("region_map")) {
    std::ifstream rm(cfg_.get("region_map"));
    const auto region_map = read_region_map(rm);
    std::ostringstream r;
    write_region_csv(r, stats, region_map);
    write(reports_ / "region_stats.csv", r.str());
  }
  log(std::to_string(inv.varieties.size()) + " varieties at threshold " +
      std::to_string(threshold));
}

void Runner::run_sample() {
  std::ifstream inv_in(inventory_path());
  if (!inv_in) throw Error(ErrorCode::kStage, "missing inventory; run map");
  const VarietyInventory inv = read_inventory(inv_in);
  std::map<std::pair<std::string, Register>, std::vector<GeoDocument>> groups;
  std::ifstream in(docs_path());
  if (!in) throw Error(ErrorCode::kStage, "missing documents; run ingest or synth");
  for_each_ndjson_line(in, [&](std::string_view line, int) {
    GeoDocument d = geo_document_from_ndjson(line);
    if (!inv.contains(d.country)) return;
    auto key = std::make_pair(d.country, d.reg);
    groups[key].push_back(std::move(d));
  });
  if (groups.empty()) throw Error(ErrorCode::kInsufficientData, "no variety passed the threshold");

  SplitPlan plan;
  plan.dev_per_region = parse_int("dev_per_region", cfg_.get("dev_per_region"));
  plan.max_train = parse_int("max_train", cfg_.get("max_train"));
  plan.max_test = parse_int("max_test", cfg_.get("max_test"));
  plan.min_train = parse_int("min_train", cfg_.get("min_train"));
  plan.min_test = parse_int("min_test", cfg_.get("min_test"));
  plan.validate();

  std::vector<std::pair<std::string, Register>> keys;
  for (const auto& [k, v] : groups) keys.push_back(k);
  std::vector<std::vector<RegionSample>> results(keys.size());
  parallel_for(keys.size(), jobs_, [&](std::size_t i) {
    const auto& [country, reg] = keys[i];
    const std::uint64_t salt = fnv1a64(country + ":" + register_name(reg));
    auto samples = aggregate(groups.at(keys[i]), derive_seed(seed_, salt));
    SplitPlan p = plan;
    p.seed = derive_seed(seed_, salt ^ 0x5911);
    try {
      results[i] = assign_splits(std::move(samples), p);
    } catch (const Error& e) {
      throw Error(e.code(), country + " " + register_name(reg) + ": " + e.what());
    }
  });

  std::string body;
  std::ostringstream counts;
  counts << "country,register,train,dev,test\n";
  for (std::size_t i = 0; i < keys.size(); ++i) {
    std::size_t n[4] = {0, 0, 0, 0};
    for (const auto& s : results[i]) {
      body += to_ndjson(s) + '\n';
      ++n[static_cast<int>(s.split)];
    }
    counts << keys[i].first << ',' << register_name(keys[i].second) << ','
           << n[static_cast<int>(Split::kTrain)] << ',' << n[static_cast<int>(Split::kDev)]
           << ',' << n[static_cast<int>(Split::kTest)] << '\n';
  }
  write(samples_path(), body);
  write(reports_ / "split_counts.csv", counts.str());
}

void Runner::run_featurize() {
  std::vector<RegionSample> samples;
  {
    std::ifstream in(samples_path());
    if (!in) throw Error(ErrorCode::kStage, "missing samples; run sample");
    for_each_ndjson_line(in, [&](std::string_view line, int) {
      samples.push_back(region_sample_from_ndjson(line));
    });
  }
  const auto sets = feature_sets();
  std::optional<Lexicon> lexicon;
  std::optional<FunctionWordList> fwords;
  for (const auto& f : sets) {
    if (f.grammar && !lexicon) {
      if (lexicon_path().empty()) throw Error(ErrorCode::kConfig, "grammar features need a lexicon");
      lexicon = Lexicon::load(lexicon_path());
    }
    if (f.space.kind == SpaceKind::kFunctionWords && !fwords) {
      fwords = FunctionWordList::load(cfg_.get("function_words"));
    }
  }
  std::vector<std::vector<AnnotatedToken>> annotated;
  if (lexicon) {
    annotated.resize(samples.size());
    parallel_for(samples.size(), jobs_, [&](std::size_t i) {
      annotated[i] = annotate(samples[i].tokens, *lexicon);
    });
  }
  std::string index;
  for (const auto& s : samples) {
    index += s.sample_id + '\t' + s.region + '\t' + register_name(s.reg) + '\t' +
             split_name(s.split) + '\n';
  }
  write(index_path(), index);
  for (const auto& f : sets) {
    std::vector<std::string> lines(samples.size());
    parallel_for(samples.size(), jobs_, [&](std::size_t i) {
      FeatureVector v;
      switch (f.space.kind) {
        case SpaceKind::kCxg: v = cxg_vector(*f.grammar, annotated[i]); break;
        case SpaceKind::kHashNgram:
          v = hash_ngram_vector(samples[i].tokens, f.space.n, f.space.dim);
          break;
        case SpaceKind::kFunctionWords: v = function_word_vector(samples[i].tokens, *fwords); break;
      }
      lines[i] = format_vector_record(samples[i].sample_id, v);
    });
    std::string body;
    for (const auto& l : lines) body += l + '\n';
    write(vector_path(f.name), body);
    log(f.name + ": " + std::to_string(samples.size()) + " vectors in " + f.space.id());
  }
}

void Runner::run_train() {
  const TrainOptions opts = train_options();
  std::ostringstream sel;
  sel << "feature_set,register,C,dev_f1,selected\n";
  for (const auto& name : feature_set_names()) {
    const RegisterData data = load_vectors(name);
    for (const auto& [reg, sd] : data) {
      TrainResult r = train(sd.train, sd.dev, opts);
      fs::create_directories(model_path(name, reg).parent_path());
      r.model.save(model_path(name, reg).string());
      written_.push_back(model_path(name, reg));
      for (const auto& [c, f1] : r.dev_f1) {
        sel << name << ',' << register_name(reg) << ',' << format_number(c) << ','
            << fixed(f1) << ',' << (c == r.model.c() ? 1 : 0) << '\n';
      }
      for (const auto& w : r.warnings) {
        warnings_.push_back(name + " " + register_name(reg) + ": " + w);
      }
      log(name + " " + register_name(reg) + ": C=" + format_number(r.model.c()));
    }
  }
  write(reports_ / "model_selection.csv", sel.str());
}

// One row per class with P/R/F1 column triples for each labeled report.
std::string side_by_side(const std::vector<std::pair<std::string, EvalReport>>& reports) {
  std::set<std::string> classes;
  for (const auto& [label, r] : reports) classes.insert(r.classes.begin(), r.classes.end());
  std::ostringstream out;
  out << "country";
  for (const auto& [label, r] : reports) {
    out << ",precision_" << label << ",recall_" << label << ",f1_" << label;
  }
  out << '\n';
  auto cells = [&](const ClassMetrics& m) {
    out << ',' << fixed(m.precision) << ',' << fixed(m.recall) << ',' << fixed(m.f1);
  };
  for (const auto& c : classes) {
    out << csv_escape(c);
    for (const auto& [label, r] : reports) {
      const auto it = std::find(r.classes.begin(), r.classes.end(), c);
      if (it == r.classes.end()) {
        out << ",,,";
      } else {
        cells(r.per_class[it - r.classes.begin()]);
      }
    }
    out << '\n';
  }
  out << "w. avg";
  for (const auto& [label, r] : reports) cells(r.weighted);
  out << '\n';
  return out.str();
}

void Runner::run_eval() {
  std::ostringstream table5;
  table5 << "feature_set,register,precision,recall,f1\n";
  for (const auto& name : feature_set_names()) {
    const RegisterData data = load_vectors(name);
    std::vector<std::pair<std::string, EvalReport>> reports;
    for (const auto& [reg, sd] : data) {
      const LinearModel model = LinearModel::load(model_path(name, reg).string());
      EvalReport r = evaluate(model, sd.test);
      const std::string tag = name + "_" + register_name(reg);
      table5 << name << ',' << register_name(reg) << ',' << fixed(r.weighted.precision) << ','
             << fixed(r.weighted.recall) << ',' << fixed(r.weighted.f1) << '\n';
      std::ostringstream conf;
      r.write_confusion_csv(conf);
      write(reports_ / ("confusion_" + tag + ".csv"), conf.str());
      write(reports_ / ("eval_" + tag + ".json"), r.to_json() + "\n");
      log(tag + ": weighted F1 " + fixed(r.weighted.f1));
      reports.emplace_back(register_name(reg), std::move(r));
    }
    write(reports_ / ("table6_" + name + ".csv"), side_by_side(reports));
  }
  write(reports_ / "table5_baseline.csv", table5.str());
}

void Runner::run_crossdomain() {
  const TrainOptions opts = train_options();
  std::ostringstream summary;
  summary << "feature_set,mode,train,test,precision,recall,f1\n";
  auto row = [&](const std::string& name, const char* mode, const std::string& tr,
                 const std::string& te, const EvalReport& r) {
    summary << name << ',' << mode << ',' << tr << ',' << te << ',' << fixed(r.weighted.precision)
            << ',' << fixed(r.weighted.recall) << ',' << fixed(r.weighted.f1) << '\n';
  };
  for (const auto& name : named_sets("crossdomain_feature_sets", feature_set_names())) {
    const RegisterData data = load_vectors(name);
    if (data.size() < 2) {
      throw Error(ErrorCode::kInsufficientData,
                  "cross-domain experiments need both registers (" + name + ")");
    }
    const LinearModel web = LinearModel::load(model_path(name, Register::kWeb).string());
    const LinearModel social = LinearModel::load(model_path(name, Register::kSocial).string());
    const EvalReport web_web = evaluate(web, data.at(Register::kWeb).test);
    const EvalReport social_social = evaluate(social, data.at(Register::kSocial).test);
    const EvalReport web_social = evaluate(web, data.at(Register::kSocial).test);
    const EvalReport social_web = evaluate(social, data.at(Register::kWeb).test);
    ExperimentConfig merged_cfg;
    merged_cfg.mode = ExperimentMode::kMerged;
    ExperimentResult merged = run_experiment(data, merged_cfg, opts);
    for (const auto& w : merged.warnings) warnings_.push_back(name + " merged: " + w);

    row(name, "within", "WEB", "WEB", web_web);
    row(name, "within", "SOCIAL", "SOCIAL", social_social);
    row(name, "cross", "WEB", "SOCIAL", web_social);
    row(name, "cross", "SOCIAL", "WEB", social_web);
    row(name, "merged", "ALL", "ALL", merged.report);
    write(reports_ / ("table7_crossdomain_" + name + ".csv"),
          side_by_side({{"trainWEB_testSOCIAL", web_social},
                        {"trainSOCIAL_testWEB", social_web}}));
    std::ostringstream t8;
    merged.report.write_class_csv(t8);
    write(reports_ / ("table8_merged_" + name + ".csv"), t8.str());
    log(name + ": cross F1 " + fixed(web_social.weighted.f1) + " / " +
        fixed(social_web.weighted.f1) + ", merged " + fixed(merged.report.weighted.f1));
  }
  write(reports_ / "crossdomain_summary.csv", summary.str());
}

void Runner::run_density() {
  const Register reg = parse_register(cfg_.get("density_register"));
  const auto grammars = grammar_paths();
  if (grammars.empty()) throw Error(ErrorCode::kConfig, "density needs at least one grammar");
  const auto index = read_index();
  std::vector<std::map<std::string, double>> columns;
  for (const auto& [name, path] : grammars) {
    std::ifstream in(vector_path(name));
    if (!in) throw Error(ErrorCode::kStage, "missing vectors for " + name + "; run featurize");
    std::map<std::string, std::vector<double>> totals;
    std::string line;
    std::size_t i = 0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto [id, v] = parse_vector_record(line);
      if (i >= index.size() || index[i].id != id) {
        throw Error(ErrorCode::kStage, "vectors for " + name + " are out of sync with the index");
      }
      const SampleMeta& m = index[i++];
      if (m.reg == reg) totals[m.region].push_back(v.values.sum());
    }
    if (totals.empty()) {
      throw Error(ErrorCode::kEmptyRegion,
                  std::string("no ") + register_name(reg) + " samples for density");
    }
    columns.push_back(relative_density(totals));
  }
  std::ostringstream out;
  out << "country";
  for (const auto& [name, path] : grammars) out << ',' << name;
  out << '\n';
  for (const auto& [region, v] : columns.front()) {
    out << region;
    for (const auto& col : columns) {
      const auto it = col.find(region);
      char buf[64];
      if (it != col.end()) {
        std::snprintf(buf, sizeof(buf), "%+.4f", it->second == 0.0 ? 0.0 : it->second);
      } else {
        buf[0] = '\0';
      }
      out << ',' << buf;
    }
    out << '\n';
  }
  write(reports_ / "table4_density.csv", out.str());
}

void Runner::run_unmask() {
  const TrainOptions opts = train_options();
  const int rounds = static_cast<int>(parse_int("unmask_rounds", cfg_.get("unmask_rounds")));
  std::vector<std::string> fallback;
  for (const auto& n : feature_set_names()) {
    if (n == "ngram1") fallback.push_back(n);
  }
  const auto grammars = grammar_paths();
  if (!grammars.empty()) fallback.insert(fallback.begin(), grammars.back().first);
  const auto names = named_sets("unmask_feature_sets", fallback);
  std::vector<Register> regs;
  for (const auto& r : list_value(cfg_.get("unmask_registers"))) regs.push_back(parse_register(r));
  for (const auto& name : names) {
    const RegisterData data = load_vectors(name);
    for (Register reg : regs) {
      const auto it = data.find(reg);
      if (it == data.end()) continue;
      const UnmaskingCurve curve =
          unmask(it->second.train, it->second.dev, it->second.test, rounds, opts);
      const std::string tag = name + "_" + register_name(reg);
      std::ostringstream c;
      write_curve_csv(c, curve);
      write(reports_ / ("unmask_" + tag + ".csv"), c.str());
      std::ostringstream r;
      write_removed_log(r, curve);
      write(reports_ / ("unmask_" + tag + "_removed.csv"), r.str());
      if (curve.exhausted) {
        warnings_.push_back(tag + ": feature space exhausted after " +
                            std::to_string(curve.rounds.size() - 1) + " rounds");
      }
      log(tag + ": F1 " + fixed(curve.rounds.front().f1) + " -> " +
          fixed(curve.rounds.back().f1) + " after " + std::to_string(curve.removed_total) +
          " removals");
    }
  }
}

void Runner::run_similarity() {
  const auto names = similarity_sets();
  const Register reg = parse_register(cfg_.get("similarity_register"));
  for (const auto& name : names) {
    const RegisterData data = load_vectors(name);
    const auto it = data.find(reg);
    if (it == data.end()) {
      throw Error(ErrorCode::kInsufficientData,
                  std::string("no ") + register_name(reg) + " data for similarity");
    }
    const LinearModel model = LinearModel::load(model_path(name, reg).string());
    const EvalReport r = evaluate(model, it->second.test);
    auto pairs = similarity_from_confusion(r.classes, r.confusion);
    std::stable_sort(pairs.begin(), pairs.end(), [](const PairCount& a, const PairCount& b) {
      if (a.count != b.count) return a.count > b.count;
      return std::tie(a.a, a.b) < std::tie(b.a, b.b);
    });
    std::ostringstream out;
    out << "variety_a,variety_b,confusions\n";
    for (const auto& p : pairs) out << p.a << ',' << p.b << ',' << p.count << '\n';
    write(reports_ / ("similarity_" + name + "_" + register_name(reg) + ".csv"), out.str());
  }
}

// -- manifest and driver -----------------------------------------------------

json load_manifest(const fs::path& p) {
  if (!fs::exists(p)) return json::object();
  try {
    return json::parse(read_file(p));
  } catch (const json::exception&) {
    return json::object();
  }
}

std::string config_hash(const RunConfig& cfg) {
  std::string material;
  for (const auto& [k, v] : cfg.values()) {
    // Where and how fast a run happens does not change what it computes.
    if (k == "jobs" || k == "stages" || k == "output_dir") continue;
    material += k + "=" + v + "\n";
  }
  return hash_hex(material);
}

RunSummary Runner::run(std::vector<Stage> stages) {
  std::sort(stages.begin(), stages.end());
  stages.erase(std::unique(stages.begin(), stages.end()), stages.end());
  fs::create_directories(out_);
  const fs::path manifest_path = out_ / "manifest.json";
  json manifest = load_manifest(manifest_path);
  manifest["tool"] = "dialectid";
  manifest["version"] = kVersion;
  manifest["seed"] = seed_;
  manifest["config_hash"] = config_hash(cfg_);
  if (!manifest.contains("stages")) manifest["stages"] = json::object();
  auto save_manifest = [&] {
    std::ofstream out(manifest_path, std::ios::trunc);
    out << manifest.dump(2, ' ', false, json::error_handler_t::replace) << '\n';
  };

  RunSummary summary;
  for (Stage s : stages) {
    const std::string name = stage_name(s);
    written_.clear();
    warnings_.clear();
    json& entry = manifest["stages"][name];
    try {
      const std::string in_hash = input_hash(s);
      bool unchanged = entry.is_object() && entry.value("status", "") == "complete" &&
                       entry.value("input_hash", "") == in_hash && entry.contains("outputs");
      if (unchanged) {
        for (const auto& [path, h] : entry["outputs"].items()) {
          const fs::path p = out_ / path;
          if (!fs::exists(p) || file_hash(p) != h.get<std::string>()) {
            unchanged = false;
            break;
          }
        }
      }
      if (unchanged) {
        log("[" + name + "] up to date");
        StageReport rep{s, true, {}};
        for (const auto& [path, h] : entry["outputs"].items()) rep.outputs.push_back(path);
        summary.stages.push_back(std::move(rep));
        continue;
      }
      log("[" + name + "] running");
      switch (s) {
        case Stage::kIngest: run_ingest(); break;
        case Stage::kSynth: run_synth(); break;
        case Stage::kMap: run_map(); break;
        case Stage::kSample: run_sample(); break;
        case Stage::kFeaturize: run_featurize(); break;
        case Stage::kTrain: run_train(); break;
        case Stage::kEval: run_eval(); break;
        case Stage::kCrossdomain: run_crossdomain(); break;
        case Stage::kDensity: run_density(); break;
        case Stage::kUnmask: run_unmask(); break;
        case Stage::kSimilarity: run_similarity(); break;
      }
      json outputs = json::object();
      StageReport rep{s, false, {}};
      for (const auto& p : written_) {
        outputs[rel(p)] = file_hash(p);
        rep.outputs.push_back(rel(p));
      }
      entry = json{{"status", "complete"},
                   {"input_hash", in_hash},
                   {"outputs", outputs},
                   {"warnings", warnings_},
                   {"partial", false}};
      for (const auto& w : warnings_) {
        summary.warnings.push_back(name + ": " + w);
        log("[" + name + "] warning: " + w);
      }
      summary.stages.push_back(std::move(rep));
      save_manifest();
    } catch (const Error& e) {
      json outputs = json::object();
      for (const auto& p : written_) {
        if (fs::exists(p)) outputs[rel(p)] = file_hash(p);
      }
      entry = json{{"status", "failed"},
                   {"error", e.what()},
                   {"outputs", outputs},
                   {"partial", !outputs.empty()}};
      save_manifest();
      throw Error(e.code(), "[" + name + "] " + e.what());
    } catch (const std::exception& e) {
      entry = json{{"status", "failed"}, {"error", e.what()}, {"partial", !written_.empty()}};
      save_manifest();
      throw Error(ErrorCode::kInternal, "[" + name + "] " + e.what());
    }
  }
  return summary;
}

}  // namespace

RunSummary run_pipeline(const RunConfig& config, std::vector<Stage> stages,
                        const LogFn& log) {
  config.validate();
  if (stages.empty()) stages = config.stages();
  Runner runner(config, log);
  return runner.run(std::move(stages));
}

}  // namespace dialectid
