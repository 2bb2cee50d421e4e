#include "dlat/config.hpp"
#include "dlat/errors.hpp"
#include "dlat/runner.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

int main(int argc, char **argv) {
  CLI::App app{"Discrete Schrodinger operators on Z^3: resolvent, spectrum and dispersion experiments"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  const char *kinds[] = {"lap", "puiseux", "spectrum", "evolve", "decay", "scatter", "kg",
                         "appendix-a"};
  for (const char *k : kinds) {
    auto *sub = app.add_subcommand(k, std::string("run a '") + k + "' experiment");
    sub->add_option("--config", config_path, "JSON experiment config")->required();
    sub->add_option("--out", out_dir, "output directory (overrides output_dir)");
    sub->add_option("--seed", seed, "seed override");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  const std::string kind = app.get_subcommands().front()->get_name();
  try {
    auto cfg = dlat::load_config(config_path);
    if (dlat::to_string(cfg.kind) != kind)
      throw dlat::ConfigError("config is for '" + dlat::to_string(cfg.kind) + "', not '" + kind + "'",
                              "kind");
    if (seed)
      dlat::set_seed(cfg, *seed);
    if (!out_dir.empty())
      dlat::set_output_dir(cfg, out_dir);
    auto man = dlat::run_experiment(cfg);
    std::cout << man.to_json()["diagnostics"].dump() << "\n";
    for (const auto &[name, hash] : man.files)
      std::cout << hash << "  " << name << "\n";
    if (man.exit_code != 0)
      std::cerr << "error: " << man.error << "\n";
    return man.exit_code;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return dlat::exit_code_for(e);
  }
}
