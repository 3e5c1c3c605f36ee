#pragma once

// Command-line front end: configuration, orchestration, persistence, and plot
// emission for the laboratory modules.  One command per process; every run
// writes its resolved configuration and an artifact manifest with checksums
// next to its outputs.

#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "steklovlab/anosovgeo.hpp"
#include "steklovlab/core.hpp"
#include "steklovlab/modelgeo.hpp"
#include "steklovlab/oplab.hpp"
#include "steklovlab/recover.hpp"
#include "steklovlab/symcalc.hpp"
#include "steklovlab/tracelab.hpp"

namespace steklovlab::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

struct ExperimentConfig {
  std::string command;
  ordered_json params;  // resolved, validated key/value map
  fs::path out_dir = ".";
  std::uint64_t seed = 0;
  std::set<std::string> formats{"csv", "json"};
};

namespace detail {

inline const std::map<std::string, ordered_json>& command_defaults() {
  static const std::map<std::string, ordered_json> defaults = {
      {"spectrum",
       {{"model", "ball"}, {"n", 3}, {"kmax", 50}, {"L", 2.0}, {"lambda_kmax", 100},
        {"profile", json::array()}, {"q_poly", json::array()}}},
      {"weyl",
       {{"model", "ball"}, {"n", 3}, {"kmax", 200}, {"L", 2.0}, {"lambda_kmax", 100},
        {"profile", json::array()}, {"q_poly", json::array()}, {"spectrum_file", ""}}},
      {"trace",
       {{"model", "ball"}, {"n", 2}, {"kmax", 500}, {"L", 2.0}, {"lambda_kmax", 100},
        {"profile", json::array()}, {"q_poly", json::array()}, {"spectrum_file", ""},
        {"window_center", 0.0}, {"window_bandwidth", 0.0}, {"t_min", 1.0}, {"t_max", 14.0},
        {"step", 0.005}, {"threshold_factor", 5.0}}},
      {"geodesics", {{"W", 3}, {"collision_tol", 1e-9}}},
      {"xray",
       {{"W", 4}, {"basis_count", 20}, {"bump_width", 0.55}, {"samples", 256},
        {"ridge", 0.0}, {"noise", 0.0}}},
      {"recover",
       {{"kind", "conformal"}, {"n", 3}, {"W", 3}, {"basis_count", 12}, {"Jmax", 3},
        {"planted_order", 1}, {"amplitude", 0.1}, {"ridge", 0.0}, {"samples", 256}}},
      {"oplab",
       {{"b", "cos"}, {"k_order", 1}, {"N", 256}, {"t", std::numbers::pi},
        {"k_lo", 0}, {"k_hi", 0}}},
  };
  return defaults;
}

inline ordered_json resolve_params(const std::string& command, const fs::path& config_path,
                                   const std::vector<std::string>& overrides) {
  const auto& all = command_defaults();
  auto it = all.find(command);
  if (it == all.end()) throw precondition_error("unknown command: " + command);
  ordered_json params = it->second;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw precondition_error("cannot open config file: " + config_path.string());
    json file = json::parse(in);
    for (auto& [k, v] : file.items()) {
      if (k == "command") continue;
      if (!params.contains(k))
        throw precondition_error("unknown config key for " + command + ": " + k);
      params[k] = v;
    }
  }
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw precondition_error("--set expects key=value, got: " + kv);
    const std::string key = kv.substr(0, eq);
    const std::string raw = kv.substr(eq + 1);
    if (!params.contains(key))
      throw precondition_error("unknown config key for " + command + ": " + key);
    json val;
    try {
      val = json::parse(raw);
    } catch (...) {
      val = raw;  // plain string
    }
    params[key] = val;
  }
  return params;
}

inline modelgeo::RadialProfile profile_from(const json& coeffs) {
  if (coeffs.empty()) return modelgeo::RadialProfile::one();
  return modelgeo::RadialProfile::poly_in_one_minus_r(coeffs.get<std::vector<double>>());
}

inline std::function<double(double)> potential_from(const json& coeffs) {
  auto c = coeffs.get<std::vector<double>>();
  return [c](double r) {
    double u = 1.0 - r, p = 1.0, acc = 0.0;
    for (double cj : c) {
      acc += cj * p;
      p *= u;
    }
    return acc;
  };
}

inline modelgeo::SteklovSpectrum spectrum_from_params(const ordered_json& p) {
  const std::string model = p.at("model").get<std::string>();
  const int n = p.at("n").get<int>();
  const int kmax = p.at("kmax").get<int>();
  if (model == "ball") return modelgeo::ball_steklov_exact(n, kmax);
  if (model == "cylinder") {
    std::vector<double> lam;
    lam.push_back(0.0);
    for (int k = 1; k <= p.at("lambda_kmax").get<int>(); ++k) {
      lam.push_back(double(k) * k);
      lam.push_back(double(k) * k);
    }
    std::sort(lam.begin(), lam.end());
    return modelgeo::cylinder_steklov(p.at("L").get<double>(), lam);
  }
  if (model == "conformal")
    return modelgeo::radial_conformal_spectrum(profile_from(p.at("profile")), n, kmax);
  if (model == "potential")
    return modelgeo::radial_potential_spectrum(potential_from(p.at("q_poly")), n, kmax);
  throw precondition_error("invalid model: " + model);
}

/// Writes all artifacts plus resolved_config.json and manifest.json.
class RunWriter {
 public:
  RunWriter(const ExperimentConfig& cfg) : cfg_(cfg) {
    fs::create_directories(cfg.out_dir);
  }

  void emit(const std::string& name, const std::string& content) {
    const fs::path path = cfg_.out_dir / name;
    std::ofstream out(path, std::ios::binary);
    out << content;
    out.close();
    ordered_json a;
    a["path"] = name;
    a["bytes"] = content.size();
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(content.data(), content.size())));
    a["fnv1a64"] = buf;
    artifacts_.push_back(a);
  }

  void finalize() {
    ordered_json cfgj;
    cfgj["command"] = cfg_.command;
    cfgj["seed"] = cfg_.seed;
    cfgj["params"] = cfg_.params;
    emit("resolved_config.json", cfgj.dump(2) + "\n");
    ordered_json m;
    m["schema"] = "manifest/v1";
    m["command"] = cfg_.command;
    m["seed"] = cfg_.seed;
    m["thread_cap"] = thread_cap();
    m["artifacts"] = artifacts_;
    std::ofstream out(cfg_.out_dir / "manifest.json", std::ios::binary);
    out << m.dump(2) << "\n";
  }

 private:
  const ExperimentConfig& cfg_;
  ordered_json artifacts_ = ordered_json::array();
};

// ---------------------------------------------------------------------------
// Commands.
// ---------------------------------------------------------------------------

inline void cmd_spectrum(const ExperimentConfig& cfg, RunWriter& w) {
  auto spec = spectrum_from_params(cfg.params);
  if (cfg.formats.count("csv")) w.emit("spectrum.csv", modelgeo::to_csv(spec));
  if (cfg.formats.count("json")) w.emit("spectrum.json", modelgeo::to_json(spec).dump(2) + "\n");
}

inline void cmd_weyl(const ExperimentConfig& cfg, RunWriter& w) {
  modelgeo::SteklovSpectrum spec;
  const std::string file = cfg.params.at("spectrum_file").get<std::string>();
  if (!file.empty()) {
    std::ifstream in(file);
    if (!in) throw precondition_error("cannot open spectrum file: " + file);
    spec = modelgeo::spectrum_from_json(json::parse(in));
  } else {
    spec = spectrum_from_params(cfg.params);
  }
  const int n = cfg.params.at("n").get<int>();
  auto fit = tracelab::weyl_fit(spec, n);
  ordered_json j;
  j["schema"] = "weyl/v1";
  j["n"] = n;
  j["volume"] = fit.volume;
  j["leading"] = fit.leading;
  j["subleading"] = fit.subleading;
  w.emit("weyl.json", j.dump(2) + "\n");
}

inline void cmd_trace(const ExperimentConfig& cfg, RunWriter& w) {
  modelgeo::SteklovSpectrum spec;
  const std::string file = cfg.params.at("spectrum_file").get<std::string>();
  if (!file.empty()) {
    std::ifstream in(file);
    if (!in) throw precondition_error("cannot open spectrum file: " + file);
    spec = modelgeo::spectrum_from_json(json::parse(in));
  } else {
    spec = spectrum_from_params(cfg.params);
  }
  tracelab::GaussianWindow win = tracelab::GaussianWindow::for_spectrum(spec);
  if (cfg.params.at("window_center").get<double>() > 0.0)
    win.center = cfg.params.at("window_center").get<double>();
  if (cfg.params.at("window_bandwidth").get<double>() > 0.0)
    win.bandwidth = cfg.params.at("window_bandwidth").get<double>();
  if (win.bandwidth <= 0.0) win.bandwidth = 1.0;  // empty spectrum
  tracelab::TimeGrid grid{cfg.params.at("t_min").get<double>(),
                          cfg.params.at("t_max").get<double>(),
                          cfg.params.at("step").get<double>()};
  auto sig = tracelab::mollified_trace(spec, win, grid);
  auto peaks = tracelab::detect_peaks(sig, cfg.params.at("threshold_factor").get<double>());
  if (cfg.formats.count("csv")) w.emit("trace.csv", tracelab::to_csv(sig));
  if (cfg.formats.count("json")) w.emit("peaks.json", tracelab::to_json(peaks).dump(2) + "\n");
  if (cfg.formats.count("svg")) w.emit("trace.svg", tracelab::to_svg(sig));
}

inline void cmd_geodesics(const ExperimentConfig& cfg, RunWriter& w) {
  const auto g = anosovgeo::FuchsianGroup::regular_octagon();
  auto classes = anosovgeo::enumerate_classes(g, cfg.params.at("W").get<int>());
  if (cfg.formats.count("csv")) w.emit("classes.csv", anosovgeo::to_csv(classes));
  if (cfg.formats.count("json")) {
    auto collisions =
        anosovgeo::length_spectrum_report(classes, cfg.params.at("collision_tol").get<double>());
    ordered_json j;
    j["schema"] = "collisions/v1";
    j["tolerance"] = cfg.params.at("collision_tol").get<double>();
    j["count"] = collisions.size();
    auto arr = ordered_json::array();
    for (const auto& c : collisions)
      arr.push_back({{"first", c.first}, {"second", c.second}, {"gap", c.gap}});
    j["pairs"] = arr;
    w.emit("collisions.json", j.dump(2) + "\n");
  }
}

inline void cmd_xray(const ExperimentConfig& cfg, RunWriter& w) {
  const auto g = anosovgeo::FuchsianGroup::regular_octagon();
  auto classes = anosovgeo::enumerate_classes(g, cfg.params.at("W").get<int>());
  anosovgeo::BumpFieldBasis basis(
      g, anosovgeo::default_bump_basis(cfg.params.at("basis_count").get<int>(),
                                       cfg.params.at("bump_width").get<double>()));
  auto sys = anosovgeo::build_xray_system(g, basis, classes, cfg.params.at("samples").get<int>());
  w.emit("xray.json", anosovgeo::to_json(sys).dump(2) + "\n");

  // synthetic round trip with optional noise, seeded
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  Eigen::VectorXd x0(sys.design.cols());
  for (Eigen::Index i = 0; i < x0.size(); ++i) x0[i] = U(rng);
  Eigen::VectorXd v = sys.design * x0;
  const double noise = cfg.params.at("noise").get<double>();
  if (noise > 0.0) {
    std::normal_distribution<double> N(0.0, noise * v.norm() / std::sqrt(double(v.size())));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] += N(rng);
  }
  const auto x = anosovgeo::xray_invert(sys, v, cfg.params.at("ridge").get<double>());
  ordered_json j;
  j["schema"] = "xray-roundtrip/v1";
  j["relative_error"] = (x - x0).norm() / x0.norm();
  j["condition"] = sys.condition();
  j["smallest_singular_value"] = sys.smallest_singular_value();
  j["noise"] = noise;
  w.emit("roundtrip.json", j.dump(2) + "\n");
}

inline void cmd_recover(const ExperimentConfig& cfg, RunWriter& w) {
  const auto g = anosovgeo::FuchsianGroup::regular_octagon();
  auto classes = anosovgeo::enumerate_classes(g, cfg.params.at("W").get<int>());
  anosovgeo::BumpFieldBasis basis(
      g, anosovgeo::default_bump_basis(cfg.params.at("basis_count").get<int>()));
  const int samples = cfg.params.at("samples").get<int>();
  auto sys = anosovgeo::build_xray_system(g, basis, classes, samples);

  const auto kind = cfg.params.at("kind").get<std::string>() == "potential"
                        ? recover::Kind::potential
                        : recover::Kind::conformal;
  const int n = cfg.params.at("n").get<int>();
  const int Jmax = cfg.params.at("Jmax").get<int>();
  const int planted = cfg.params.at("planted_order").get<int>();
  const double amp = cfg.params.at("amplitude").get<double>();

  recover::SurfaceJet jetA{kind, {}};
  recover::SurfaceJet jetB{kind, {}};
  if (planted >= 0) {
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    Eigen::VectorXd coeffs(static_cast<Eigen::Index>(basis.size()));
    for (Eigen::Index i = 0; i < coeffs.size(); ++i) coeffs[i] = amp * U(rng);
    const std::size_t d = kind == recover::Kind::conformal
                              ? static_cast<std::size_t>(planted + 1)
                              : static_cast<std::size_t>(planted == 0 ? 0 : planted - 1);
    jetB.deriv.resize(d + 1);
    jetB.deriv[d] = coeffs;
  }
  recover::RecoverOptions opt;
  opt.ridge = cfg.params.at("ridge").get<double>();
  opt.samples = samples;
  auto rep = recover::run_pipeline(g, classes, basis, sys, jetA, jetB, n, Jmax, opt);
  w.emit("recover.json", recover::to_json(rep).dump(2) + "\n");
  std::fputs(recover::summary(rep).c_str(), stdout);
}

inline void cmd_oplab(const ExperimentConfig& cfg, RunWriter& w) {
  const std::string bname = cfg.params.at("b").get<std::string>();
  std::function<double(double)> b;
  if (bname == "cos") b = [](double x) { return std::cos(x); };
  else if (bname == "zero") b = [](double) { return 0.0; };
  else if (bname == "cos2") b = [](double x) { return std::cos(2.0 * x); };
  else throw precondition_error("invalid perturbation name: " + bname);
  const int N = cfg.params.at("N").get<int>();
  int k_lo = cfg.params.at("k_lo").get<int>();
  int k_hi = cfg.params.at("k_hi").get<int>();
  if (k_lo <= 0) k_lo = N / 8;
  if (k_hi <= 0) k_hi = N / 4;
  auto res = tracelab::return_operator_lab(b, cfg.params.at("k_order").get<int>(), N,
                                           cfg.params.at("t").get<double>(), k_lo, k_hi);
  ordered_json j;
  j["schema"] = "oplab/v1";
  j["N"] = N;
  j["k_lo"] = k_lo;
  j["k_hi"] = k_hi;
  j["mean_rel_deviation"] = res.mean_rel_deviation;
  auto per = ordered_json::array();
  for (std::size_t i = 0; i < res.frequencies.size(); ++i)
    per.push_back({{"k", res.frequencies[i]},
                   {"rel_deviation", res.rel_deviation[i]},
                   {"band_sup", res.band_sup[i]}});
  j["per_frequency"] = per;
  w.emit("oplab.json", j.dump(2) + "\n");
}

}  // namespace detail

/// Runs one command; returns the process exit code (0 ok, 2 precondition
/// failure, 3 numerical failure).
inline int run(const std::vector<std::string>& args) {
  CLI::App app{"steklov_lab: spectral-geometry laboratory"};
  app.require_subcommand(1);
  std::string config_path, out_dir = "steklov_out";
  std::vector<std::string> sets, formats;
  std::uint64_t seed = 0;
  app.add_option("--config", config_path, "JSON configuration file");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--set", sets, "override a config key (key=value, repeatable)");
  app.add_option("--seed", seed, "seed for stochastic experiments");
  app.add_option("--format", formats, "output formats (csv, json, svg; repeatable)");
  for (const auto& [name, unused] : detail::command_defaults())
    app.add_subcommand(name)->fallthrough();

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    ExperimentConfig cfg;
    cfg.command = app.get_subcommands().front()->get_name();
    cfg.params = detail::resolve_params(cfg.command, config_path, sets);
    cfg.out_dir = out_dir;
    cfg.seed = seed;
    if (!formats.empty()) cfg.formats = std::set<std::string>(formats.begin(), formats.end());
    for (const auto& f : cfg.formats)
      if (f != "csv" && f != "json" && f != "svg")
        throw precondition_error("unknown format: " + f);

    detail::RunWriter writer(cfg);
    if (cfg.command == "spectrum") detail::cmd_spectrum(cfg, writer);
    else if (cfg.command == "weyl") detail::cmd_weyl(cfg, writer);
    else if (cfg.command == "trace") detail::cmd_trace(cfg, writer);
    else if (cfg.command == "geodesics") detail::cmd_geodesics(cfg, writer);
    else if (cfg.command == "xray") detail::cmd_xray(cfg, writer);
    else if (cfg.command == "recover") detail::cmd_recover(cfg, writer);
    else if (cfg.command == "oplab") detail::cmd_oplab(cfg, writer);
    writer.finalize();
    return 0;
  } catch (const precondition_error& e) {
    std::fprintf(stderr, "precondition failure: %s\n", e.what());
    return 2;
  } catch (const numeric_error& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  }
}

}  // namespace steklovlab::cli
