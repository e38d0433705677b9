#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "qscope/config.hpp"
#include "qscope/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"qscope: coefficient recovery from internal data"};
  app.set_version_flag("--version", std::string(QSCOPE_VERSION));
  std::string subcommand, config_path, out_dir;
  std::uint64_t seed = 0;
  app.add_option("subcommand", subcommand, "forward | synth | reconstruct | sweep | probe | all")
      ->required()
      ->check(CLI::IsMember(qscope::kSubcommands));
  app.add_option("--config", config_path, "configuration file")->required();
  auto* out_opt = app.add_option("--out", out_dir, "output directory (overrides output.dir)");
  auto* seed_opt = app.add_option("--seed", seed, "random seed (overrides stability.seed)");
  CLI11_PARSE(app, argc, argv);

  qscope::Config cfg;
  try {
    cfg = qscope::load_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << config_path << ": " << e.what() << "\n";
    return 2;
  }
  if (*out_opt) cfg.out_dir = out_dir;
  if (*seed_opt) cfg.seed = seed;
  return qscope::run(subcommand, cfg, std::cerr);
}
