// Command-line driver. Everything goes through the C API.

#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dialectid/c_api.h"

namespace {

struct CommonArgs {
  std::string config;
  std::vector<std::string> overrides;
  int jobs = 0;
  std::string seed;
  std::string out;
  std::string threshold;
  std::vector<std::string> stages;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonArgs& a, bool with_stages) {
  cmd->add_option("-c,--config", a.config, "run configuration file")->required()->check(CLI::ExistingFile);
  cmd->add_option("-s,--set", a.overrides, "override a config key (key=value), repeatable");
  cmd->add_option("-j,--jobs", a.jobs, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", a.seed, "random seed");
  cmd->add_option("-o,--out", a.out, "output directory");
  cmd->add_option("--threshold", a.threshold, "inventory threshold in words per register");
  cmd->add_flag("-q,--quiet", a.quiet, "no progress output");
  if (with_stages) {
    cmd->add_option("--stages", a.stages, "stages to run (default: the config's list)")
        ->delimiter(',');
  }
}

void print_line(const char* line, void*) { std::fprintf(stderr, "%s\n", line); }

int fail(dlid_status st) {
  std::fprintf(stderr, "dialectid: %s: %s\n", dlid_status_string(st), dlid_last_error());
  return static_cast<int>(st);
}

int execute(const CommonArgs& a, const std::vector<std::string>& stages) {
  dlid_config* cfg = nullptr;
  dlid_status st = dlid_config_load(a.config.c_str(), &cfg);
  if (st != DLID_OK) return fail(st);
  auto set = [&](const std::string& k, const std::string& v) {
    if (st == DLID_OK) st = dlid_config_set(cfg, k.c_str(), v.c_str());
  };
  for (const auto& kv : a.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "dialectid: --set expects key=value, got '%s'\n", kv.c_str());
      dlid_config_free(cfg);
      return DLID_INVALID_ARGUMENT;
    }
    set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (a.jobs > 0) set("jobs", std::to_string(a.jobs));
  if (!a.seed.empty()) set("seed", a.seed);
  if (!a.out.empty()) set("output_dir", a.out);
  if (!a.threshold.empty()) set("threshold", a.threshold);
  if (st != DLID_OK) {
    dlid_config_free(cfg);
    return fail(st);
  }
  std::vector<const char*> names;
  for (const auto& s : stages) names.push_back(s.c_str());
  st = dlid_run(cfg, names.data(), names.size(), a.quiet ? nullptr : print_line, nullptr);
  dlid_config_free(cfg);
  return st == DLID_OK ? 0 : fail(st);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dialectid: national-variety identification from construction grammar features"};
  app.set_version_flag("--version", dlid_version());
  app.require_subcommand(1);

  CommonArgs args;
  const std::vector<std::pair<const char*, const char*>> stage_cmds = {
      {"ingest", "extract, geo-reference and deduplicate raw web and social dumps"},
      {"synth", "generate a synthetic multi-variety corpus"},
      {"map", "tabulate words per country and register and select the inventory"},
      {"sample", "cut fixed-size samples and assign train/dev/test splits"},
      {"featurize", "write feature vectors for every configured feature set"},
      {"train", "fit one linear model per feature set and register"},
      {"eval", "within-register evaluation reports"},
      {"crossdomain", "cross-register and merged-register experiments"},
      {"density", "relative construction density per variety"},
      {"unmask", "unmasking curves"},
      {"similarity", "confusion-based variety similarity"},
  };
  std::string chosen;
  for (const auto& [name, help] : stage_cmds) {
    CLI::App* cmd = app.add_subcommand(name, help);
    add_common(cmd, args, false);
    cmd->callback([&chosen, n = std::string(name)] { chosen = n; });
  }
  CLI::App* run = app.add_subcommand("run", "run the configured stages in dependency order");
  add_common(run, args, true);
  run->callback([&chosen] { chosen = "run"; });

  CLI11_PARSE(app, argc, argv);

  if (chosen == "run") return execute(args, args.stages);
  return execute(args, {chosen});
}
