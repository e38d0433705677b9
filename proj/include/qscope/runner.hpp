#pragma once

// Experiment orchestration behind the `qscope` command line.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "qscope/config.hpp"

namespace qscope {

inline const std::vector<std::string> kSubcommands{"forward", "synth", "reconstruct", "sweep", "probe", "all"};

// Worker count: QSCOPE_THREADS when set (>= 1), else the hardware concurrency.
unsigned worker_count();

// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

// Runs one subcommand with outputs under cfg.out_dir. Writes manifest.json
// last (temp file + rename) whether or not the stages succeed, and
// timings.json beside it. Returns 0 on success, 1 on stage failure, 2 for an
// unknown subcommand. Diagnostics go to `log`.
int run(const std::string& subcommand, const Config& cfg, std::ostream& log);

}  // namespace qscope
