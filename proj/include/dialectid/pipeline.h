#ifndef DIALECTID_PIPELINE_H_
#define DIALECTID_PIPELINE_H_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dialectid {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kCacheDirEnv = "DIALECTID_CACHE_DIR";

enum class Stage {
  kIngest,
  kSynth,
  kMap,
  kSample,
  kFeaturize,
  kTrain,
  kEval,
  kCrossdomain,
  kDensity,
  kUnmask,
  kSimilarity,
};

const char* stage_name(Stage s);
Stage parse_stage(std::string_view name);

// Key-value run configuration, one "key = value" per line, '#' comments.
// Relative paths in a file are resolved against the file's directory;
// values passed to set() are taken as given. See README for the schema.
class RunConfig {
 public:
  RunConfig() = default;

  static RunConfig parse(std::string_view text, const std::string& base_dir = "");
  static RunConfig load(const std::string& path);

  // Throws Error(kConfig) for unknown keys.
  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;
  // The explicit value or the schema default ("" when there is none).
  std::string get(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }

  // Seed present, numbers parse, names are known and every referenced input
  // path exists. Throws Error(kConfig).
  void validate() const;

  // The requested stages (key "stages"), "all" expanded, in dependency order.
  std::vector<Stage> stages() const;

  static bool is_known_key(const std::string& key);

 private:
  std::map<std::string, std::string> values_;
};

struct StageReport {
  Stage stage;
  bool skipped = false;  // inputs unchanged since the last complete run
  std::vector<std::string> outputs;
};

struct RunSummary {
  std::vector<StageReport> stages;
  std::vector<std::string> warnings;
};

using LogFn = std::function<void(const std::string&)>;

// Validates, then runs `stages` (or the configured list when empty) in
// dependency order. Each stage is recorded in <output_dir>/manifest.json;
// a failing stage is marked failed, with partial outputs flagged, and the
// error is rethrown with the stage name prefixed.
RunSummary run_pipeline(const RunConfig& config, std::vector<Stage> stages = {},
                        const LogFn& log = nullptr);

}  // namespace dialectid

#endif  // DIALECTID_PIPELINE_H_
