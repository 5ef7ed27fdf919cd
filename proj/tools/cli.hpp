#pragma once

// Command-line front end. `dispatch` is kept separate from main() so the
// test suite can drive it with in-memory streams.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vrrw/vrrw.hpp"

namespace vrrw::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitDomain = 3;
inline constexpr int kExitIo = 4;

inline constexpr const char* kSeedVariable = "VRRW_SEED";

/// I/O failure, mapped to exit code 4.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::uint64_t default_seed() {
  if (const char* s = std::getenv(kSeedVariable)) {
    try {
      return std::stoull(s);
    } catch (const std::exception&) {
      throw Error(ErrorKind::Config, std::string(kSeedVariable) + " is not an unsigned integer");
    }
  }
  return 0;
}

inline std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorKind::Config, path + ": " + e.what());
  }
}

/// Runs `body` with an output stream: the file at `path`, or `fallback` when
/// the path is empty.
template <class Body>
void with_output(const std::string& path, std::ostream& fallback, Body&& body) {
  if (path.empty()) {
    body(fallback);
    return;
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  body(out);
  out.flush();
  if (!out) throw IoError("write failed for " + path);
}

inline void report_provenance(std::ostream& err, const std::optional<std::uint64_t>& seed,
                              std::uint64_t hash) {
  err << "seed=" << (seed ? std::to_string(*seed) : std::string("none"))
      << " config_hash=" << hex64(hash) << '\n';
}

inline std::vector<double> parse_vector(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorKind::Config, "cannot parse '" + item + "' as a number");
    }
  }
  return out;
}

inline ModelParameters build_model(int n, double alpha, double c) {
  return c > 0.0 ? ModelParameters::loop_model(n, alpha, c) : ModelParameters::complete(n, alpha);
}

// ---------------------------------------------------------------------------

struct EquilibriaArgs {
  int n = 3;
  double alpha = 2.0;
  double c = 0.0;
  std::string format = "text";
  unsigned threads = 1;
};

inline void write_equilibria_text(std::ostream& os, const std::vector<Equilibrium>& eqs) {
  os << "# support kind k t point leading_eigenvalue verdict\n";
  for (const auto& e : eqs) {
    const auto labels = e.support.labels();
    os << '{';
    for (std::size_t i = 0; i < labels.size(); ++i) os << (i ? "," : "") << labels[i];
    os << "} " << to_string(e.kind) << ' ';
    if (e.two_level) {
      os << e.two_level->k << ' ' << format_double(e.two_level->t);
    } else {
      os << "- -";
    }
    os << " (";
    for (int i = 0; i < e.point.size(); ++i) os << (i ? "," : "") << format_double(e.point[i]);
    os << ") " << format_double(leading_eigenvalue(e)) << ' '
       << (e.verdict ? to_string(*e.verdict) : "unclassified") << '\n';
  }
}

inline int run_equilibria(const EquilibriaArgs& a, std::ostream& out, std::ostream& err) {
  report_provenance(err, std::nullopt,
                    fnv1a(Json{{"cmd", "equilibria"}, {"n", a.n}, {"alpha", a.alpha}, {"c", a.c}}.dump()));
  const ModelParameters p = build_model(a.n, a.alpha, a.c);
  const auto eqs = classify_all(p, enumerate_all(a.n, a.alpha, a.c), a.threads);
  for (const auto& e : eqs) {
    if (e.verdict == Verdict::Marginal) {
      err << "warning: marginal spectrum at support of size " << e.support.size()
          << " (alpha at or near a critical value)\n";
    }
  }
  if (a.format == "json") {
    Json list = Json::array();
    for (const auto& e : eqs) list.push_back(equilibrium_to_json(e));
    out << list.dump(2) << '\n';
  } else {
    write_equilibria_text(out, eqs);
  }
  return kExitOk;
}

struct ThresholdArgs {
  double c = 0.0;
  int kmax = 10;
  std::string format = "text";
};

inline int run_thresholds(const ThresholdArgs& a, std::ostream& out, std::ostream& err) {
  report_provenance(err, std::nullopt,
                    fnv1a(Json{{"cmd", "thresholds"}, {"c", a.c}, {"kmax", a.kmax}}.dump()));
  if (!(a.c >= 0.0 && a.c < 1.0)) throw Error(ErrorKind::Domain, "loop weight c must lie in [0, 1)");
  const auto rows = threshold_table(a.c, a.kmax);
  if (a.format == "json") {
    Json list = Json::array();
    for (const auto& r : rows) list.push_back({{"k", r.k}, {"alpha_crit", r.alpha_crit}, {"c", r.loop_c}});
    out << list.dump(2) << '\n';
  } else {
    out << "k,alpha_crit,c\n";
    for (const auto& r : rows) out << r.k << ',' << format_double(r.alpha_crit) << ',' << format_double(r.loop_c) << '\n';
  }
  return kExitOk;
}

struct FlowArgs {
  int n = 3;
  double alpha = 2.0;
  double c = 0.0;
  std::string v0;
  double t_end = 10.0;
  double dt = 0.01;
  std::string out_path;
};

inline int run_flow(const FlowArgs& a, std::ostream& out, std::ostream& err) {
  report_provenance(err, std::nullopt,
                    fnv1a(Json{{"cmd", "flow"}, {"n", a.n}, {"alpha", a.alpha}, {"c", a.c},
                               {"v0", a.v0}, {"t", a.t_end}, {"dt", a.dt}}.dump()));
  const ModelParameters p = build_model(a.n, a.alpha, a.c);
  Vector v0;
  if (a.v0.empty()) {
    v0 = SimplexPoint::center(a.n).coords();
  } else {
    const auto xs = parse_vector(a.v0);
    if (static_cast<int>(xs.size()) != a.n) throw Error(ErrorKind::InvalidSize, "--v0 needs N values");
    v0 = Eigen::Map<const Vector>(xs.data(), a.n);
  }
  const auto traj = integrate_flow(p, SimplexPoint(v0), a.t_end, a.dt);
  with_output(a.out_path, out, [&](std::ostream& os) { write_flow_csv(os, traj); });
  return kExitOk;
}

struct SimulateArgs {
  std::string config;
  std::optional<int> n;
  std::optional<double> alpha;
  std::optional<double> c;
  std::optional<int> start;
  std::optional<std::uint64_t> horizon;
  std::optional<std::uint64_t> seed;
  std::string output = "sites";
  std::string out_path;
};

inline int run_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  // Config file first, flags on top.
  Json cfg = Json{{"model", {{"n", 3}, {"alpha", 2.0}, {"c", 0.0}}}, {"start", 1}, {"horizon", 1000}};
  if (!a.config.empty()) cfg.merge_patch(read_json_file(a.config));
  if (a.n) cfg["model"]["n"] = *a.n;
  if (a.alpha) cfg["model"]["alpha"] = *a.alpha;
  if (a.c) cfg["model"]["c"] = *a.c;
  if (a.start) cfg["start"] = *a.start;
  if (a.horizon) cfg["horizon"] = *a.horizon;
  const std::uint64_t seed = a.seed ? *a.seed : (cfg.contains("seed") ? cfg["seed"].get<std::uint64_t>() : default_seed());
  cfg["seed"] = seed;
  report_provenance(err, seed, fnv1a(cfg.dump()));

  const ModelParameters p = model_from_json(cfg.at("model"));
  const auto rec = simulate(p, cfg.at("start").get<int>() - 1, cfg.at("horizon").get<std::uint64_t>(), seed);
  with_output(a.out_path, out, [&](std::ostream& os) {
    if (a.output == "checkpoints") {
      write_checkpoints_csv(os, rec);
    } else if (rec.has_full_log()) {
      write_sites_csv(os, rec);
    } else {
      write_checkpoints_csv(os, rec);
    }
  });
  return kExitOk;
}

struct RubinArgs {
  int n = 3;
  double alpha = 2.0;
  std::string graph = "complete";
  int start = 1;
  std::uint64_t jumps = 100;
  std::optional<std::uint64_t> seed;
  std::string out_path;
};

inline int run_rubin(const RubinArgs& a, std::ostream& out, std::ostream& err) {
  const std::uint64_t seed = a.seed ? *a.seed : default_seed();
  report_provenance(err, seed,
                    fnv1a(Json{{"cmd", "rubin"}, {"n", a.n}, {"alpha", a.alpha}, {"graph", a.graph},
                               {"start", a.start}, {"jumps", a.jumps}, {"seed", seed}}.dump()));
  Graph g;
  if (a.graph == "complete") {
    g = Graph::complete(a.n);
  } else if (a.graph == "path") {
    g = Graph::path(a.n);
  } else if (a.graph == "star") {
    g = Graph::star(a.n - 1);
  } else {
    throw Error(ErrorKind::Config, "unknown graph '" + a.graph + "'");
  }
  if (!(a.alpha > 1.0)) throw Error(ErrorKind::Domain, "alpha must be > 1");
  const auto res = rubin_simulate(ClockConfig::power(std::move(g), a.alpha), a.start - 1, a.jumps, seed);
  if (res.ties > 0) err << "clock ties resampled: " << res.ties << '\n';
  with_output(a.out_path, out, [&](std::ostream& os) {
    os << "step,site,time\n";
    for (std::size_t k = 0; k < res.record.sites.size(); ++k)
      os << k << ',' << res.record.sites[k] + 1 << ',' << format_double(res.jump_times[k]) << '\n';
  });
  return kExitOk;
}

struct CampaignArgs {
  std::string config;
  std::string out_dir;
  std::string format = "csv";
  unsigned threads = 1;
  std::optional<std::uint64_t> replicas;
  std::optional<std::uint64_t> horizon;
  std::optional<std::uint64_t> seed;
};

/// One campaign per alpha when model.alpha is a list; a sweep summary with
/// the support-size frequencies is written next to the per-alpha files.
inline int run_campaign_cmd(const CampaignArgs& a, std::ostream& out, std::ostream& err) {
  Json cfg = read_json_file(a.config);
  if (a.replicas) cfg["replicas"] = *a.replicas;
  if (a.horizon) cfg["horizon"] = *a.horizon;
  if (a.seed) {
    cfg["base_seed"] = *a.seed;
  } else if (!cfg.contains("base_seed")) {
    cfg["base_seed"] = default_seed();
  }
  if (!cfg.contains("model")) throw Error(ErrorKind::Config, "campaign config needs a model");
  std::vector<double> alphas;
  if (cfg["model"].contains("alpha") && cfg["model"]["alpha"].is_array()) {
    alphas = cfg["model"]["alpha"].get<std::vector<double>>();
  } else {
    alphas.push_back(cfg["model"].value("alpha", 2.0));
  }
  if (a.format != "json" && a.format != "csv") throw Error(ErrorKind::Config, "format must be json or csv");

  std::filesystem::path dir(a.out_dir.empty() ? "." : a.out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  std::vector<CampaignResult> results;
  for (double alpha : alphas) {
    Json one = cfg;
    one["model"]["alpha"] = alpha;
    const ExperimentConfig ec_cfg = config_from_json(one);
    report_provenance(err, ec_cfg.base_seed, config_hash(ec_cfg));
    CampaignResult res = run_campaign(ec_cfg, a.threads);
    const std::string stem = alphas.size() == 1 ? "campaign" : "campaign_alpha_" + format_double(alpha);
    with_output((dir / (stem + "." + a.format)).string(), out, [&](std::ostream& os) {
      if (a.format == "json") {
        os << campaign_to_json(res).dump(2) << '\n';
      } else {
        write_campaign_csv(os, res);
      }
    });
    results.push_back(std::move(res));
  }

  const int n = cfg["model"].value("n", 0) > 0 ? cfg["model"]["n"].get<int>()
                                              : static_cast<int>(results.front().support_histogram.size()) - 1;
  with_output((dir / "sweep_summary.csv").string(), out, [&](std::ostream& os) {
    os << "alpha,replicas";
    for (int s = 1; s <= n; ++s) os << ",frac_support_" << s;
    os << '\n';
    for (std::size_t i = 0; i < results.size(); ++i) {
      os << format_double(alphas[i]) << ',' << results[i].replicas.size();
      for (int s = 1; s <= n; ++s) os << ',' << format_double(results[i].support_fraction(s));
      os << '\n';
    }
  });
  out << "wrote " << results.size() << " campaign(s) to " << dir.string() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

inline int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Strongly vertex-reinforced random walks: mean-field analysis and simulation", "vrrw"};
  app.require_subcommand(1);

  EquilibriaArgs eq;
  auto* eq_cmd = app.add_subcommand("equilibria", "Enumerate and classify all equilibria of the complete graph");
  eq_cmd->add_option("--n", eq.n, "Number of sites N (2..12)")->required();
  eq_cmd->add_option("--alpha", eq.alpha, "Reinforcement exponent alpha > 1")->required();
  eq_cmd->add_option("--c", eq.c, "Loop weight c >= 0 (0 = loop-free walk)");
  eq_cmd->add_option("--format", eq.format, "Output format")->check(CLI::IsMember({"text", "json"}));
  eq_cmd->add_option("--threads", eq.threads, "Worker threads for classification");

  ThresholdArgs th;
  auto* th_cmd = app.add_subcommand("thresholds", "Print the critical exponents for k = 2..kmax");
  th_cmd->add_option("--c", th.c, "Loop weight c in [0, 1)");
  th_cmd->add_option("--kmax", th.kmax, "Largest face size");
  th_cmd->add_option("--format", th.format, "Output format")->check(CLI::IsMember({"text", "json"}));

  FlowArgs fl;
  auto* fl_cmd = app.add_subcommand("flow", "Integrate the mean-field flow and write t, v_1..v_N, H as CSV");
  fl_cmd->add_option("--n", fl.n, "Number of sites N")->required();
  fl_cmd->add_option("--alpha", fl.alpha, "Reinforcement exponent alpha > 1")->required();
  fl_cmd->add_option("--c", fl.c, "Loop weight c >= 0");
  fl_cmd->add_option("--v0", fl.v0, "Initial point as comma-separated values (default: center)");
  fl_cmd->add_option("--t", fl.t_end, "Final time")->required();
  fl_cmd->add_option("--dt", fl.dt, "Step size");
  fl_cmd->add_option("--out", fl.out_path, "Output file (default: stdout)");

  SimulateArgs si;
  auto* si_cmd = app.add_subcommand("simulate", "Simulate the discrete walk");
  si_cmd->add_option("--config", si.config, "JSON config {model: {n, alpha, c}, start, horizon, seed}");
  si_cmd->add_option("--n", si.n, "Number of sites N");
  si_cmd->add_option("--alpha", si.alpha, "Reinforcement exponent alpha > 1");
  si_cmd->add_option("--c", si.c, "Loop weight c >= 0");
  si_cmd->add_option("--start", si.start, "Start site (1-based)");
  si_cmd->add_option("--horizon", si.horizon, "Number of steps");
  si_cmd->add_option("--seed", si.seed, std::string("Seed (default: $") + kSeedVariable + " or 0)");
  si_cmd->add_option("--output", si.output, "sites: (step, site) rows; checkpoints: (n, v_1..v_N) rows")
      ->check(CLI::IsMember({"sites", "checkpoints"}));
  si_cmd->add_option("--out", si.out_path, "Output file (default: stdout)");

  RubinArgs ru;
  auto* ru_cmd = app.add_subcommand("rubin", "Run the exponential-clock construction");
  ru_cmd->add_option("--n", ru.n, "Number of vertices");
  ru_cmd->add_option("--alpha", ru.alpha, "Weight exponent, w(l) = (l+1)^alpha");
  ru_cmd->add_option("--graph", ru.graph, "complete, path or star (center = vertex 1)")
      ->check(CLI::IsMember({"complete", "path", "star"}));
  ru_cmd->add_option("--start", ru.start, "Start vertex (1-based)");
  ru_cmd->add_option("--jumps", ru.jumps, "Number of jumps");
  ru_cmd->add_option("--seed", ru.seed, std::string("Seed (default: $") + kSeedVariable + " or 0)");
  ru_cmd->add_option("--out", ru.out_path, "Output file (default: stdout)");

  CampaignArgs ca;
  auto* ca_cmd = app.add_subcommand("campaign", "Run a Monte Carlo campaign (model.alpha may be a list)");
  ca_cmd->add_option("--config", ca.config, "Campaign JSON config")->required();
  ca_cmd->add_option("--out", ca.out_dir, "Output directory");
  ca_cmd->add_option("--format", ca.format, "Per-campaign output format")->check(CLI::IsMember({"json", "csv"}));
  ca_cmd->add_option("--threads", ca.threads, "Worker threads");
  ca_cmd->add_option("--replicas", ca.replicas, "Override replicas");
  ca_cmd->add_option("--horizon", ca.horizon, "Override horizon");
  ca_cmd->add_option("--seed", ca.seed, std::string("Override base seed (default: $") + kSeedVariable + ")");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    // Subcommand-level --help surfaces as CallForHelp from the subcommand.
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (*eq_cmd) return run_equilibria(eq, out, err);
    if (*th_cmd) return run_thresholds(th, out, err);
    if (*fl_cmd) return run_flow(fl, out, err);
    if (*si_cmd) return run_simulate(si, out, err);
    if (*ru_cmd) return run_rubin(ru, out, err);
    if (*ca_cmd) return run_campaign_cmd(ca, out, err);
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const Error& e) {
    err << e.what() << '\n';
    return kExitDomain;
  } catch (const Json::exception& e) {
    err << "config error: " << e.what() << '\n';
    return kExitDomain;
  }
  return kExitUsage;
}

}  // namespace vrrw::cli
