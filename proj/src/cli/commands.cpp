#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "pwapass/cli.hpp"
#include "pwapass/linalg.hpp"
#include "pwapass/passivity.hpp"

namespace pwapass::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json matrix_json(const Mat& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

Mat matrix_from_json(const json& j) {
  const std::size_t rows = j.size();
  const std::size_t cols = rows ? j[0].size() : 0;
  Mat m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t k = 0; k < cols; ++k) m(i, k) = j[i][k].get<double>();
  return m;
}

sim::Disturbance make_disturbance(const ProjectConfig& cfg, std::uint64_t seed) {
  sim::Disturbance d;
  if (cfg.disturbance_kind == "zero") {
    d.kind = sim::Disturbance::Kind::kZero;
  } else if (cfg.disturbance_kind == "expr") {
    d.kind = sim::Disturbance::Kind::kExpr;
    for (const auto& src : cfg.disturbance_exprs) {
      try {
        d.exprs.push_back(expr::Expression::parse(src, {"k"}));
      } catch (const expr::ParseError& e) {
        throw ConfigError(std::string("disturbance: ") + e.what() + " at offset " +
                          std::to_string(e.offset()));
      }
    }
  } else {
    d.kind = sim::Disturbance::Kind::kNoise;
    d.amplitude = cfg.noise_amplitude;
    d.seed = seed;
  }
  return d;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path);
  os << text;
}

struct GainsData {
  std::vector<Mat> K, T;
  double q = 0, r = 0, h = 0;
  std::string mode;
};

void write_gains(const std::string& path, const model::PolyhedralPartition& part,
                 const GainsData& g) {
  json cells = json::array();
  for (std::size_t i = 0; i < part.size(); ++i) {
    json c;
    c["index"] = i;
    if (part.cell(i).axis >= 0) {
      c["lo"] = part.cell(i).lo;
      c["hi"] = part.cell(i).hi;
      c["axis"] = part.cell(i).axis + 1;
    }
    c["K"] = matrix_json(g.K[i]);
    c["T"] = matrix_json(g.T[i]);
    cells.push_back(c);
  }
  json out;
  out["mode"] = g.mode;
  out["q"] = g.q;
  out["r"] = g.r;
  out["h"] = g.h;
  out["cells"] = cells;
  std::ofstream os(path);
  os << out.dump(2) << "\n";
}

GainsData read_gains(const std::string& path, std::size_t expected_cells) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open gains file: " + path);
  json j;
  is >> j;
  GainsData g;
  g.mode = j.value("mode", "passify");
  g.q = j.value("q", 0.0);
  g.r = j.value("r", 0.0);
  g.h = j.value("h", 0.0);
  for (const auto& c : j.at("cells")) {
    g.K.push_back(matrix_from_json(c.at("K")));
    g.T.push_back(matrix_from_json(c.at("T")));
  }
  if (expected_cells && g.K.size() != expected_cells)
    throw ConfigError("gains file does not match the partition cell count");
  return g;
}

int simulate_and_emit(const model::NonlinearSystemSpec& sys,
                      const model::PolyhedralPartition& part, const ProjectConfig& cfg,
                      const GainsData* gains, bool with_channel,
                      const std::string& out_dir, std::ostream& log) {
  sim::SimulationConfig sc;
  sc.x0 = cfg.x0;
  sc.horizon = cfg.horizon;
  if (gains) {
    sc.gains = gains->K;
    sc.storage.kind = sim::Storage::Kind::kTinv;
    sc.storage.per_cell = gains->T;
  }
  if (with_channel && cfg.alpha)
    sc.channel = netpassify::GilbertElliottChannel(*cfg.alpha, *cfg.beta);

  int worst_exit = 0;
  for (std::uint64_t seed : cfg.seeds) {
    sc.channel_seed = seed;
    sc.disturbance = make_disturbance(cfg, seed);
    const sim::SimulationTrace trace = sim::run(&sys, part, sc);
    if (trace.steps.empty()) {
      log << "seed " << seed << ": trace empty (immediate region exit)\n";
      worst_exit = std::max(worst_exit, 1);
      continue;
    }
    const sim::DissipationReport rep = sim::dissipation_report(trace, 1e-9);
    const std::string tag = "seed" + std::to_string(seed);
    sim::write_csv(trace, sys.n(), sys.m(), sys.s(), out_dir + "/trace_" + tag + ".csv");
    std::vector<double> gaps, cgaps;
    for (const auto& st : trace.steps) {
      gaps.push_back(st.gap);
      if (st.conditional_gap) cgaps.push_back(*st.conditional_gap);
    }
    write_svg_chart(out_dir + "/dissipation_" + tag + ".svg", gaps,
                    "storage increment minus supply rate");
    if (!cgaps.empty())
      write_svg_chart(out_dir + "/dissipation_cond_" + tag + ".svg", cgaps,
                      "conditional storage increment minus supply rate");
    log << "seed " << seed << ": steps=" << trace.steps.size()
        << " max_gap=" << rep.max_gap << " violations=" << rep.violations;
    if (rep.conditional_evaluated)
      log << " max_cond_gap=" << rep.max_conditional_gap
          << " cond_violations=" << rep.conditional_violations;
    if (trace.truncated) log << " (truncated: " << trace.exit_reason << ")";
    log << "\n";
    // Channel runs certify the conditional expectation (the realized gap may
    // exceed zero on loss steps); deterministic runs certify the gap itself.
    const bool violated = with_channel ? rep.conditional_violations > 0
                                       : rep.violations > 0;
    if (violated) worst_exit = std::max(worst_exit, 1);
  }
  return worst_exit;
}

}  // namespace

int cmd_approximate(const ProjectConfig& cfg, const std::string& out_dir) {
  const model::NonlinearSystemSpec sys = make_system(cfg);
  const model::PolyhedralPartition part = make_partition(cfg);
  approx::SamplingOptions so{cfg.samples, cfg.safety_factor, cfg.sampling_seed};
  const approx::PwaApproximation pwa = approx::build_approximation(sys, part, so);

  fs::create_directories(out_dir);
  json cells = json::array();
  std::ostringstream txt;
  txt << "cell  range                         eps          delta\n";
  for (std::size_t i = 0; i < part.size(); ++i) {
    json c;
    c["index"] = i;
    c["cell"] = part.cell(i).describe();
    c["A"] = matrix_json(pwa.cells[i].A);
    c["a"] = pwa.cells[i].a;
    c["C"] = matrix_json(pwa.cells[i].C);
    c["c"] = pwa.cells[i].c;
    c["eps"] = pwa.cells[i].eps;
    c["delta"] = pwa.cells[i].delta;
    cells.push_back(c);
    char line[160];
    std::snprintf(line, sizeof(line), "%4zu  %-28s  %.6g  %.6g\n", i,
                  part.cell(i).describe().c_str(), pwa.cells[i].eps, pwa.cells[i].delta);
    txt << line;
  }
  json out;
  out["cells"] = cells;
  std::ofstream os(out_dir + "/approximation.json");
  os << out.dump(2) << "\n";
  write_text(out_dir + "/approximation.txt", txt.str());
  std::cout << txt.str();
  return 0;
}

int cmd_run(const ProjectConfig& cfg, const std::string& mode, const std::string& out_dir) {
  const model::NonlinearSystemSpec sys = make_system(cfg);
  const model::PolyhedralPartition part = make_partition(cfg);
  fs::create_directories(out_dir);
  std::ostringstream log;

  passify::SynthesisOptions opts;
  opts.solve.tau = cfg.tau;
  opts.solve.tolerance = cfg.tolerance;
  opts.sampling = {cfg.samples, cfg.safety_factor, cfg.sampling_seed};
  opts.refine_limit = cfg.refine_limit;
  opts.enforce_side_conditions = cfg.enforce_side_conditions;

  int exit_code = 0;
  if (mode == "check") {
    const approx::PwaApproximation pwa =
        approx::build_approximation(sys, part, opts.sampling);
    passivity::Theorem1Options topts;
    topts.solve = opts.solve;
    const auto result = passivity::check_passivity(sys, part, pwa, topts);
    json cert;
    if (std::holds_alternative<passivity::Theorem1Certificate>(result)) {
      const auto& c = std::get<passivity::Theorem1Certificate>(result);
      cert["certified"] = true;
      double worst = 1e300;
      for (const auto& pa : c.pairs) worst = std::min(worst, pa.lambda_margin);
      cert["worst_lambda_margin"] = worst;
      json pb = json::array();
      for (const auto& p : c.pbar) pb.push_back(matrix_json(p));
      cert["Pbar"] = pb;
      log << "certified: passivity holds on the region (worst Lambda margin " << worst
          << ")\n";
      if (cfg.has_simulation) {
        GainsData g;  // open loop, Pbar storage handled separately
        sim::SimulationConfig sc;
        sc.x0 = cfg.x0;
        sc.horizon = cfg.horizon;
        sc.storage.kind = sim::Storage::Kind::kPbar;
        sc.storage.per_cell = c.pbar;
        int worst_exit = 0;
        for (std::uint64_t seed : cfg.seeds) {
          sc.disturbance = make_disturbance(cfg, seed);
          const auto trace = sim::run(&sys, part, sc);
          if (trace.steps.empty()) continue;
          const auto rep = sim::dissipation_report(trace, 1e-9);
          sim::write_csv(trace, sys.n(), sys.m(), sys.s(),
                         out_dir + "/trace_seed" + std::to_string(seed) + ".csv");
          std::vector<double> gaps;
          for (const auto& st : trace.steps) gaps.push_back(st.gap);
          write_svg_chart(out_dir + "/dissipation_seed" + std::to_string(seed) + ".svg",
                          gaps, "storage increment minus supply rate");
          log << "seed " << seed << ": max_gap=" << rep.max_gap
              << " violations=" << rep.violations << "\n";
          if (rep.violations) worst_exit = 1;
        }
        exit_code = std::max(exit_code, worst_exit);
      }
    } else {
      const auto& nc = std::get<passivity::NotCertified>(result);
      cert["certified"] = false;
      cert["reason"] = nc.reason;
      cert["worst_pair"] = json::array({nc.worst_i, nc.worst_j});
      log << "not certified: " << nc.reason << "\n";
      exit_code = 1;
    }
    std::ofstream os(out_dir + "/certificate.json");
    os << cert.dump(2) << "\n";
  } else if (mode == "netpassify" && cfg.mode == "pwa-netpassify") {
    // the configured system is declared exactly piecewise affine; certify the
    // lossy closed loop through the corollary conditions (no residual terms)
    netpassify::GilbertElliottChannel ch(*cfg.alpha, *cfg.beta);
    approx::PwaApproximation pwa =
        approx::build_approximation(sys, part, {cfg.samples, 1.0, cfg.sampling_seed});
    for (auto& c : pwa.cells) {
      if (c.eps > 1e-9 || c.delta > 1e-9)
        throw ConfigError(
            "pwa-netpassify: the system is not piecewise affine on this "
            "partition (residuals detected); use mode netpassify");
      c.eps = 0.0;
      c.delta = 0.0;
    }
    netpassify::PwaSystem pwasys{&part, pwa, sys.B1(), sys.D1(), sys.B2(), sys.D2()};
    passify::SynthesisOptions opts2;
    opts2.solve.tau = cfg.tau;
    opts2.solve.tolerance = cfg.tolerance;
    const auto cor = netpassify::synthesize_pwa_networked(pwasys, ch, opts2);
    json cert;
    cert["certified"] = cor.has_value();
    if (!cor) {
      cert["reason"] = "corollary LMIs not feasible";
      log << "pwa-networked synthesis failed\n";
      std::ofstream os(out_dir + "/certificate.json");
      os << cert.dump(2) << "\n";
      write_text(out_dir + "/summary.txt", log.str());
      std::cout << log.str();
      return 1;
    }
    cert["worst_block_margin"] = cor->worst_block_margin;
    std::ofstream os(out_dir + "/certificate.json");
    os << cert.dump(2) << "\n";
    GainsData g;
    g.K = cor->K;
    g.T = cor->T;
    g.q = cor->q;
    g.h = cor->h;
    g.mode = "pwa-netpassify";
    write_gains(out_dir + "/gains.json", part, g);
    log << "pwa-networked synthesis ok over " << part.size() << " cells (margin "
        << cor->worst_block_margin << ")\n";
    if (cfg.has_simulation) {
      sim::SimulationConfig sc;
      sc.x0 = cfg.x0;
      sc.horizon = cfg.horizon;
      sc.gains = g.K;
      sc.storage.kind = sim::Storage::Kind::kTinv;
      sc.storage.per_cell = g.T;
      sc.channel = ch;
      int worst_exit = 0;
      sim::PwaDynamics pd{&pwa, sys.B1(), sys.D1(), sys.B2(), sys.D2()};
      for (std::uint64_t seed : cfg.seeds) {
        sc.channel_seed = seed;
        sc.disturbance = make_disturbance(cfg, seed);
        const auto trace = sim::run(pd, part, sc);
        if (trace.steps.empty()) continue;
        const auto rep = sim::dissipation_report(trace, 1e-9);
        sim::write_csv(trace, sys.n(), sys.m(), sys.s(),
                       out_dir + "/trace_seed" + std::to_string(seed) + ".csv");
        std::vector<double> cgaps;
        for (const auto& st : trace.steps)
          if (st.conditional_gap) cgaps.push_back(*st.conditional_gap);
        write_svg_chart(out_dir + "/dissipation_cond_seed" + std::to_string(seed) +
                            ".svg",
                        cgaps, "conditional storage increment minus supply rate");
        log << "seed " << seed << ": steps=" << trace.steps.size()
            << " max_cond_gap=" << rep.max_conditional_gap
            << " cond_violations=" << rep.conditional_violations << "\n";
        if (rep.conditional_violations) worst_exit = 1;
      }
      exit_code = std::max(exit_code, worst_exit);
    }
    write_text(out_dir + "/summary.txt", log.str());
    std::cout << log.str();
    return exit_code;
  } else if (mode == "passify" || mode == "netpassify") {
    std::optional<netpassify::GilbertElliottChannel> ch;
    if (mode == "netpassify") ch.emplace(*cfg.alpha, *cfg.beta);

    json cert;
    GainsData g;
    bool ok = false;
    model::PolyhedralPartition final_part = part;
    if (mode == "passify") {
      auto outc = passify::synthesize(sys, part, opts);
      ok = outc.ok();
      final_part = outc.partition;
      if (ok) {
        const auto& syn = *outc.synthesis;
        for (const auto& c : syn.cells) {
          g.K.push_back(c.K);
          g.T.push_back(c.T);
        }
        g.q = syn.q;
        g.r = syn.r;
        g.h = syn.h;
        g.mode = mode;
        cert["worst_block_margin"] = syn.worst_block_margin;
        cert["refined"] = outc.status == passify::SynthesisOutcome::Status::kRefined;
        log << "synthesis ok over " << final_part.size() << " cells (margin "
            << syn.worst_block_margin << ")\n";
      } else {
        cert["reason"] = outc.failure_reason;
        log << "synthesis failed: " << outc.failure_reason << "\n";
      }
    } else {
      auto outc = netpassify::synthesize_networked(sys, part, *ch, opts);
      ok = outc.ok();
      final_part = outc.partition;
      if (ok) {
        const auto& syn = *outc.synthesis;
        for (const auto& c : syn.cells) {
          g.K.push_back(c.K);
          g.T.push_back(c.T);
        }
        g.q = syn.q;
        g.r = syn.r;
        g.h = syn.h;
        g.mode = mode;
        cert["worst_block_margin"] = syn.worst_block_margin;
        cert["refined"] = outc.status == netpassify::NetworkedOutcome::Status::kRefined;
        log << "networked synthesis ok over " << final_part.size() << " cells (margin "
            << syn.worst_block_margin << ")\n";
      } else {
        cert["reason"] = outc.failure_reason;
        log << "networked synthesis failed: " << outc.failure_reason << "\n";
      }
    }
    cert["certified"] = ok;
    std::ofstream os(out_dir + "/certificate.json");
    os << cert.dump(2) << "\n";
    if (!ok) {
      exit_code = 1;
    } else {
      write_gains(out_dir + "/gains.json", final_part, g);
      if (cfg.has_simulation)
        exit_code = std::max(exit_code,
                             simulate_and_emit(sys, final_part, cfg, &g,
                                               mode == "netpassify", out_dir, log));
    }
  } else {
    throw ConfigError("unknown mode: " + mode);
  }

  write_text(out_dir + "/summary.txt", log.str());
  std::cout << log.str();
  return exit_code;
}

int cmd_simulate(const ProjectConfig& cfg, const std::string& out_dir,
                 const std::string& gains_path) {
  const model::NonlinearSystemSpec sys = make_system(cfg);
  const model::PolyhedralPartition part = make_partition(cfg);
  if (!cfg.has_simulation) throw ConfigError("simulate: config has no simulation block");
  fs::create_directories(out_dir);
  std::ostringstream log;
  int code = 0;
  if (gains_path.empty()) {
    // open loop, no storage diagnostics
    sim::SimulationConfig sc;
    sc.x0 = cfg.x0;
    sc.horizon = cfg.horizon;
    for (std::uint64_t seed : cfg.seeds) {
      sc.disturbance = make_disturbance(cfg, seed);
      if (cfg.alpha) {
        sc.channel = netpassify::GilbertElliottChannel(*cfg.alpha, *cfg.beta);
        sc.channel_seed = seed;
      }
      const auto trace = sim::run(&sys, part, sc);
      sim::write_csv(trace, sys.n(), sys.m(), sys.s(),
                     out_dir + "/trace_seed" + std::to_string(seed) + ".csv");
      log << "seed " << seed << ": steps=" << trace.steps.size()
          << (trace.truncated ? " truncated" : "") << "\n";
    }
  } else {
    const GainsData g = read_gains(gains_path, part.size());
    code = simulate_and_emit(sys, part, cfg, &g, g.mode == "netpassify", out_dir, log);
  }
  write_text(out_dir + "/summary.txt", log.str());
  std::cout << log.str();
  return code;
}

}  // namespace pwapass::cli
