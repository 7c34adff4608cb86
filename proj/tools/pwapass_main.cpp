#include <iostream>

#include <CLI11.hpp>

#include "pwapass/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"piecewise-affine passivity analysis and passification toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", gains_path;
  std::uint64_t seed_override = 0;
  bool have_seed = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "config file (JSON)")->required();
    sub->add_option("--out-dir", out_dir, "output directory");
    sub->add_option("--seed", seed_override, "override the simulation seed list")
        ->each([&](const std::string&) { have_seed = true; });
  };

  CLI::App* ap = app.add_subcommand("approximate", "build the PWA approximation and report per-cell bounds");
  add_common(ap);
  CLI::App* ck = app.add_subcommand("check-passivity", "certify open-loop passivity on the region");
  add_common(ck);
  CLI::App* pa = app.add_subcommand("passify", "synthesize passivating gains");
  add_common(pa);
  CLI::App* pn = app.add_subcommand("passify-networked", "synthesize gains for the lossy channel");
  add_common(pn);
  CLI::App* si = app.add_subcommand("simulate", "simulate the closed or open loop");
  add_common(si);
  si->add_option("--gains", gains_path, "gains file from a previous synthesis run");

  CLI11_PARSE(app, argc, argv);

  try {
    pwapass::cli::ProjectConfig cfg = pwapass::cli::load_config(config_path);
    if (have_seed) cfg.seeds = {seed_override};
    if (app.got_subcommand(ap)) return pwapass::cli::cmd_approximate(cfg, out_dir);
    if (app.got_subcommand(ck)) return pwapass::cli::cmd_run(cfg, "check", out_dir);
    if (app.got_subcommand(pa)) return pwapass::cli::cmd_run(cfg, "passify", out_dir);
    if (app.got_subcommand(pn)) return pwapass::cli::cmd_run(cfg, "netpassify", out_dir);
    if (app.got_subcommand(si)) return pwapass::cli::cmd_simulate(cfg, out_dir, gains_path);
  } catch (const pwapass::cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
