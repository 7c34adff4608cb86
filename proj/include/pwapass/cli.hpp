#pragma once

#include <optional>
#include <string>

#include "pwapass/sim.hpp"

namespace pwapass::cli {

// Declarative experiment description, one JSON file per run. See the README
// for the key-by-key format.
struct ProjectConfig {
  // system
  std::size_t n = 0, m = 0, s = 0;
  std::vector<std::string> f_sources, h_sources;
  Mat B1, D1, B2, D2;

  // partition
  int axis = 0;  // 0-based
  std::vector<double> breakpoints;
  Mat box;
  struct ManualCell {
    Mat E;
    Vec e;
  };
  std::vector<ManualCell> manual_cells;

  // channel (optional)
  std::optional<double> alpha, beta;
  std::uint64_t channel_seed = 1;

  // synthesis
  std::string mode = "passify";  // check | passify | netpassify | pwa-netpassify
  double tau = 1e-6;
  double tolerance = 1e-7;
  int refine_limit = 6;
  bool enforce_side_conditions = true;
  std::size_t samples = 10000;
  double safety_factor = 1.2;
  std::uint64_t sampling_seed = 20240801;

  // simulation (optional)
  bool has_simulation = false;
  Vec x0;
  std::size_t horizon = 100;
  std::string disturbance_kind = "zero";  // zero | expr | noise
  std::vector<std::string> disturbance_exprs;
  double noise_amplitude = 0.0;
  std::vector<std::uint64_t> seeds{1};
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

ProjectConfig load_config(const std::string& path);

model::NonlinearSystemSpec make_system(const ProjectConfig& cfg);
model::PolyhedralPartition make_partition(const ProjectConfig& cfg);

// Subcommand drivers; each returns the process exit code (0 success,
// 1 not-certified / dissipation violation, 2 configuration error).
int cmd_approximate(const ProjectConfig& cfg, const std::string& out_dir);
int cmd_run(const ProjectConfig& cfg, const std::string& mode, const std::string& out_dir);
int cmd_simulate(const ProjectConfig& cfg, const std::string& out_dir,
                 const std::string& gains_path);

// Static SVG line chart of one series against the step index, with a zero
// line; used for the dissipation-gap plots.
void write_svg_chart(const std::string& path, const std::vector<double>& series,
                     const std::string& title);

}  // namespace pwapass::cli
