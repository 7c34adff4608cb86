#include <fstream>

#include <json.hpp>

#include "pwapass/cli.hpp"

namespace pwapass::cli {

using nlohmann::json;

namespace {

Mat parse_matrix(const json& j, std::size_t rows, std::size_t cols, const std::string& name) {
  if (!j.is_array()) throw ConfigError(name + ": expected an array of rows");
  Mat m(rows, cols);
  if (j.size() != rows) throw ConfigError(name + ": expected " + std::to_string(rows) + " rows");
  for (std::size_t i = 0; i < rows; ++i) {
    const auto& row = j[i];
    if (!row.is_array() || row.size() != cols)
      throw ConfigError(name + ": row " + std::to_string(i) + " must have " +
                        std::to_string(cols) + " entries");
    for (std::size_t k = 0; k < cols; ++k) m(i, k) = row[k].get<double>();
  }
  return m;
}

Vec parse_vector(const json& j, const std::string& name) {
  if (!j.is_array()) throw ConfigError(name + ": expected an array");
  Vec v;
  for (const auto& e : j) v.push_back(e.get<double>());
  return v;
}

}  // namespace

ProjectConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    is >> j;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }

  ProjectConfig cfg;
  try {
    const auto& sys = j.at("system");
    cfg.n = sys.at("n").get<std::size_t>();
    cfg.m = sys.at("m").get<std::size_t>();
    cfg.s = sys.at("s").get<std::size_t>();
    for (const auto& e : sys.at("f")) cfg.f_sources.push_back(e.get<std::string>());
    for (const auto& e : sys.at("h")) cfg.h_sources.push_back(e.get<std::string>());
    cfg.B1 = parse_matrix(sys.at("B1"), cfg.n, cfg.m, "B1");
    cfg.D1 = parse_matrix(sys.at("D1"), cfg.n, cfg.s, "D1");
    cfg.B2 = parse_matrix(sys.at("B2"), cfg.s, cfg.m, "B2");
    cfg.D2 = parse_matrix(sys.at("D2"), cfg.s, cfg.s, "D2");

    const auto& part = j.at("partition");
    cfg.box = parse_matrix(part.at("box"), cfg.n, 2, "box");
    if (part.contains("cells")) {
      for (const auto& c : part.at("cells")) {
        ProjectConfig::ManualCell mc;
        const auto& erows = c.at("E");
        const std::size_t nr = erows.size();
        mc.E = parse_matrix(erows, nr, cfg.n, "cell E");
        mc.e = parse_vector(c.at("e"), "cell e");
        if (mc.e.size() != nr) throw ConfigError("cell: |e| must match rows of E");
        cfg.manual_cells.push_back(std::move(mc));
      }
    } else {
      cfg.axis = part.at("axis").get<int>() - 1;  // config is 1-based like x1..xn
      for (const auto& b : part.at("breakpoints")) cfg.breakpoints.push_back(b.get<double>());
    }

    if (j.contains("channel")) {
      const auto& ch = j.at("channel");
      cfg.alpha = ch.at("alpha").get<double>();
      cfg.beta = ch.at("beta").get<double>();
      if (ch.contains("seed")) cfg.channel_seed = ch.at("seed").get<std::uint64_t>();
    }

    if (j.contains("synthesis")) {
      const auto& sy = j.at("synthesis");
      if (sy.contains("mode")) cfg.mode = sy.at("mode").get<std::string>();
      if (sy.contains("tau")) cfg.tau = sy.at("tau").get<double>();
      if (sy.contains("tolerance")) cfg.tolerance = sy.at("tolerance").get<double>();
      if (sy.contains("refine_limit")) cfg.refine_limit = sy.at("refine_limit").get<int>();
      if (sy.contains("enforce_side_conditions"))
        cfg.enforce_side_conditions = sy.at("enforce_side_conditions").get<bool>();
      if (sy.contains("samples")) cfg.samples = sy.at("samples").get<std::size_t>();
      if (sy.contains("safety_factor"))
        cfg.safety_factor = sy.at("safety_factor").get<double>();
      if (sy.contains("sampling_seed"))
        cfg.sampling_seed = sy.at("sampling_seed").get<std::uint64_t>();
    }

    if (j.contains("simulation")) {
      cfg.has_simulation = true;
      const auto& si = j.at("simulation");
      cfg.x0 = parse_vector(si.at("x0"), "x0");
      if (cfg.x0.size() != cfg.n) throw ConfigError("x0: wrong dimension");
      cfg.horizon = si.at("horizon").get<std::size_t>();
      if (si.contains("disturbance")) {
        const auto& d = si.at("disturbance");
        if (d.is_string()) {
          const std::string v = d.get<std::string>();
          if (v == "zero") {
            cfg.disturbance_kind = "zero";
          } else {
            cfg.disturbance_kind = "expr";
            cfg.disturbance_exprs.assign(cfg.s, v);
          }
        } else if (d.is_array()) {
          cfg.disturbance_kind = "expr";
          for (const auto& e : d) cfg.disturbance_exprs.push_back(e.get<std::string>());
          if (cfg.disturbance_exprs.size() != cfg.s)
            throw ConfigError("disturbance: need one expression per output component");
        } else if (d.is_object()) {
          cfg.disturbance_kind = "noise";
          cfg.noise_amplitude = d.at("amplitude").get<double>();
        } else {
          throw ConfigError("disturbance: unrecognized form");
        }
      }
      if (si.contains("seeds")) {
        cfg.seeds.clear();
        for (const auto& e : si.at("seeds")) cfg.seeds.push_back(e.get<std::uint64_t>());
      }
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config validation failed: ") + e.what());
  }

  if (cfg.mode != "check" && cfg.mode != "passify" && cfg.mode != "netpassify" &&
      cfg.mode != "pwa-netpassify")
    throw ConfigError("synthesis.mode must be check|passify|netpassify|pwa-netpassify");
  if ((cfg.mode == "netpassify" || cfg.mode == "pwa-netpassify") && !cfg.alpha)
    throw ConfigError("mode " + cfg.mode + " requires a channel block");
  return cfg;
}

model::NonlinearSystemSpec make_system(const ProjectConfig& cfg) {
  std::vector<expr::Expression> f, h;
  auto parse_all = [&](const std::vector<std::string>& src,
                       std::vector<expr::Expression>& out, const char* what) {
    for (std::size_t i = 0; i < src.size(); ++i) {
      try {
        out.push_back(expr::Expression::parse(src[i]));
      } catch (const expr::ParseError& e) {
        throw ConfigError(std::string(what) + "[" + std::to_string(i + 1) +
                          "]: " + e.what() + " at offset " + std::to_string(e.offset()));
      }
    }
  };
  parse_all(cfg.f_sources, f, "f");
  parse_all(cfg.h_sources, h, "h");
  try {
    return model::NonlinearSystemSpec(cfg.n, cfg.m, cfg.s, std::move(f), std::move(h),
                                      cfg.B1, cfg.D1, cfg.B2, cfg.D2);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

model::PolyhedralPartition make_partition(const ProjectConfig& cfg) {
  try {
    if (!cfg.manual_cells.empty()) {
      std::vector<model::Cell> cells;
      for (const auto& mc : cfg.manual_cells) {
        model::Cell c;
        c.E_mem = mc.E;
        c.e_mem = mc.e;
        bool zero_e = true;
        for (double v : mc.e) zero_e = zero_e && v == 0.0;
        c.contains_origin = zero_e;
        c.E = mc.E;
        c.e = mc.e;
        cells.push_back(std::move(c));
      }
      return model::PolyhedralPartition(std::move(cells), cfg.box);
    }
    return model::grid_partition(cfg.axis, cfg.breakpoints, cfg.box);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace pwapass::cli
