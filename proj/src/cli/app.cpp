#include <map>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "wmdlab/cli/commands.hpp"
#include "wmdlab/cli/config.hpp"
#include "wmdlab/error.hpp"

namespace wmdlab::cli {

namespace {

struct FlagSpec {
  const char* key;
  const char* help;
};

const FlagSpec kValueFlags[] = {
    {"embeddings", "embedding file"},
    {"format", "embedding format: word2vec-binary or text"},
    {"method", "comma separated methods, e.g. wmd,wmd-tfidf,bow,tfidf-l1-l2"},
    {"norm", "normalisation for bare bow/tfidf: none, l1 or l2"},
    {"metric", "metric for bare bow/tfidf: l1 or l2"},
    {"classifier", "knn or wknn"},
    {"stopwords", "stopword file, one token per line"},
    {"dims", "comma separated target dimensions"},
    {"seed", "master seed"},
    {"workers", "worker threads (0: all available)"},
    {"out", "output directory"},
    {"folds", "folds to generate for datasets without fold files"},
    {"train-fraction", "train share of generated folds"},
    {"pairs", "sampled document pairs for correlations"},
    {"bin-width", "transport histogram bin width"},
    {"neighbors", "cross-split or leave-one-out"},
    {"base", "base method of the rel. column"},
};

const FlagSpec kSwitches[] = {
    {"clean", "remove duplicate documents first"},
    {"keep-oov", "keep words without embeddings for BOW and TF-IDF"},
    {"no-compute", "fail instead of computing missing distance caches"},
    {"renormalize", "L2-normalise embeddings after PCA"},
};

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"Word mover's distance experiments"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  std::string config_path;
  app.add_option("--config", config_path, "key = value config file; flags win");
  std::vector<std::string> dataset_values;
  auto* dataset_opt = app.add_option("--dataset", dataset_values, "corpus file (repeatable)");
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  for (const auto& f : kValueFlags) {
    options[f.key] = app.add_option(std::string("--") + f.key, values[f.key], f.help);
  }
  for (const auto& f : kSwitches) {
    options[f.key] = app.add_flag(std::string("--") + f.key, f.help);
  }

  std::map<std::string, void (*)(const RunConfig&)> commands{
      {"dists", cmd_dists}, {"eval", cmd_eval}, {"dedup", cmd_dedup},
      {"analyze", cmd_analyze}, {"project", cmd_project}};
  const std::map<std::string, std::string> descriptions{
      {"dists", "compute or reuse distance caches"},
      {"eval", "kNN / wkNN error reports"},
      {"dedup", "duplicate report and clean corpus"},
      {"analyze", "transport histogram, scatter and dimension study"},
      {"project", "PCA re-export of an embedding file"}};
  for (const auto& [name, fn] : commands) app.add_subcommand(name, descriptions.at(name));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    Settings settings;
    if (!config_path.empty()) settings = read_config_file(config_path);
    if (dataset_opt->count()) {
      std::string joined;
      for (const auto& d : dataset_values) joined += (joined.empty() ? "" : ",") + d;
      settings["dataset"] = joined;
    }
    for (const auto& f : kValueFlags) {
      if (options[f.key]->count()) settings[f.key] = values[f.key];
    }
    for (const auto& f : kSwitches) {
      if (options[f.key]->count()) settings[f.key] = "true";
    }
    const auto config = make_config(settings);
    const auto name = app.get_subcommands().front()->get_name();
    commands.at(name)(config);
    return 0;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
}

}  // namespace wmdlab::cli
