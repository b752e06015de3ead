#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "wmdlab/cli/config.hpp"

namespace wmdlab::cli {

/// Lower-case hex SHA-256 digests. Throws Io.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_text(std::string_view text);

/// Distance caches for every (dataset, fold, method).
void cmd_dists(const RunConfig& config);
/// Per-fold error CSV plus a JSON summary with mean, std and rel.
void cmd_eval(const RunConfig& config);
/// Duplicate report JSON and the deduplicated corpus.
void cmd_dedup(const RunConfig& config);
/// Transport histogram, WMD vs BOW scatter and per-dimension correlations.
void cmd_analyze(const RunConfig& config);
/// PCA re-export of the embedding file, one file per requested dimension.
void cmd_project(const RunConfig& config);

/// Parses arguments and runs one subcommand. Returns 0 on success and 1 on
/// any error, which is logged through the default spdlog logger.
int run(int argc, const char* const* argv);

}  // namespace wmdlab::cli
