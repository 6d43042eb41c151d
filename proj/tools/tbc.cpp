#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tbc/tbc.hpp"

namespace {

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kIo = 3, kHypothesis = 4 };

struct Cli {
  std::string config;
  std::string out;
  std::string csv;
  std::string sample;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> reps;
  std::optional<std::size_t> points;
  std::optional<std::string> sizes;
  std::optional<std::string> kind;
  std::optional<double> resolution;
  std::optional<unsigned> threads;
  std::uint64_t replication = 0;
};

tbc::RunConfig load_config(const Cli& cli) {
  tbc::RunConfig cfg = cli.config.empty() ? tbc::parse_config("") : tbc::parse_config(tbc::read_text(cli.config));
  if (const char* env = std::getenv("TBC_SEED")) {
    try {
      cfg.seed = tbc::detail::parse_scalar<std::uint64_t>("TBC_SEED", env);
    } catch (const tbc::ConfigError&) {
      throw tbc::ConfigError(std::string("environment TBC_SEED: cannot parse '") + env + "'");
    }
  }
  if (cli.seed) cfg.seed = *cli.seed;
  if (!cli.out.empty()) cfg.out = cli.out;
  if (cli.threads) cfg.threads = *cli.threads;
  if (cli.reps) {
    cfg.estimate.reps = *cli.reps;
    cfg.clt.N = *cli.reps;
  }
  if (cli.points) {
    if (*cli.points == 0) throw tbc::ConfigError("option --points must be >= 1");
    cfg.estimate.M = *cli.points;
    cfg.clt.M = *cli.points;
  }
  if (cli.sizes) cfg.clt.sizes = tbc::detail::parse_list("--sizes", *cli.sizes);
  if (cli.kind) {
    try {
      cfg.estimate.kind = cfg.clt.kind = tbc::parse_kind(*cli.kind);
    } catch (const tbc::ContractViolation&) {
      throw tbc::ConfigError("option --kind: unknown functional '" + *cli.kind + "'");
    }
  }
  if (cli.resolution) cfg.oracle.resolution = *cli.resolution;
  return cfg;
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    tbc::write_text(path, text);
  }
}

int cmd_sample(const Cli& cli) {
  const tbc::RunConfig cfg = load_config(cli);
  const tbc::CylinderSample s = tbc::sample_tbc(cfg.params, cfg.seed, cli.replication);
  emit(cfg.out, tbc::to_json(s).dump(2) + "\n");
  return kOk;
}

int cmd_estimate(const Cli& cli) {
  const tbc::RunConfig cfg = load_config(cli);
  tbc::EstimatorSettings st;
  st.M = cfg.estimate.M;
  st.mc_seed = cfg.seed;
  std::vector<tbc::EstimateRow> rows;
  if (!cli.sample.empty()) {
    const tbc::CylinderSample s = tbc::load_sample(cli.sample);
    st.mc_seed = s.seed;
    st.mc_replication = s.replication_index;
    rows.push_back({s.params.s, s.replication_index, tbc::evaluate_functional(cfg.estimate.kind, s, st)});
  } else {
    if (cfg.estimate.reps == 0) throw tbc::ConfigError("config key 'estimate.reps' must be >= 1");
    rows.resize(cfg.estimate.reps);
    tbc::detail::parallel_for(cfg.estimate.reps, cfg.threads, [&](std::size_t j) {
      tbc::EstimatorSettings local = st;
      local.mc_replication = j;
      const tbc::CylinderSample s = tbc::sample_tbc(cfg.params, cfg.seed, j);
      rows[j] = {cfg.params.s, j, tbc::evaluate_functional(cfg.estimate.kind, s, local)};
    });
  }
  std::ostringstream os;
  tbc::write_estimate_csv(os, rows);
  emit(cfg.out, os.str());
  return kOk;
}

int cmd_clt(const Cli& cli) {
  const tbc::RunConfig cfg = load_config(cli);
  tbc::CampaignOptions opt;
  opt.M = cfg.clt.M;
  opt.threads = cfg.threads;
  opt.constants.intersect_pairs = cfg.clt.intersect_pairs;
  opt.constants.seed = cfg.seed;
  const tbc::CltReport rep = tbc::run_campaign(cfg.params, cfg.clt.kind, cfg.clt.sizes, cfg.clt.N, cfg.seed, opt);
  emit(cfg.out, tbc::to_json(rep).dump(2) + "\n");
  if (!cli.csv.empty()) {
    std::ostringstream os;
    tbc::write_clt_csv(os, rep);
    tbc::write_text(cli.csv, os.str());
  }
  std::cerr << tbc::kind_name(rep.kind) << " campaign (" << rep.model() << ")\n";
  for (const tbc::SizeBlock& b : rep.sizes)
    std::cerr << "  s=" << b.s << " N=" << b.N << " mean=" << b.mean << " var=" << b.variance << " ks=" << b.ks
              << " w1=" << b.w1 << "\n";
  if (rep.w1_slope) std::cerr << "  w1 log-log slope " << *rep.w1_slope << "\n";
  return kOk;
}

void print_table(std::ostream& os, const tbc::BoundReport& b) {
  os << "[" << tbc::kind_name(b.kind) << "]\n";
  auto row = [&](const char* name, double v) {
    os << "  " << std::left << std::setw(20) << name << std::setprecision(10) << v << "\n";
  };
  row("kappa_d", b.kappa_d);
  row("kappa_{d+1}", b.kappa_d1);
  row("R_h", b.R_h);
  row("R", b.R);
  row("hit_prob_point", b.hit_prob_point);
  row("expected_volume", b.expected_volume);
  row("cyl_hit_lower", b.cyl_hit_lower);
  row("cyl_hit_upper", b.cyl_hit_upper);
  row("iso_intensity_lower", b.iso_intensity_lower);
  row("iso_intensity_upper", b.iso_intensity_upper);
  row("tau", b.tau);
  row("c1", b.c1);
  row("c2", b.c2);
  row("c_dRT", b.c_dRT);
  row("wasserstein_c", b.wasserstein_c);
  row("variance_upper", b.variance_upper);
  os << "  lower <= upper: cyl_hit " << (b.cyl_hit_lower <= b.cyl_hit_upper ? "yes" : "no") << ", iso_intensity "
     << (b.iso_intensity_lower <= b.iso_intensity_upper ? "yes" : "no") << "\n";
}

int cmd_bounds(const Cli& cli) {
  const tbc::RunConfig cfg = load_config(cli);
  tbc::ConstantOptions opt;
  opt.intersect_pairs = cfg.clt.intersect_pairs;
  opt.seed = cfg.seed;
  tbc::json j;
  j["schema_version"] = tbc::kSchemaVersion;
  j["params"] = tbc::to_json(cfg.params);
  std::vector<tbc::BoundReport> reports{tbc::volume_clt_constants(cfg.params)};
  const double need = 6.0 * (cfg.params.max_scope() + cfg.params.r);
  if (cfg.params.s >= need) {
    reports.push_back(tbc::isolated_clt_constants(cfg.params, opt));
    reports.push_back(tbc::euler_clt_constants(cfg.params, opt));
  } else {
    j["counting_constants_skipped"] = "window hypothesis s >= 6(R_h + r) = " + std::to_string(need) + " not met";
  }
  j["reports"] = tbc::json::array();
  for (const auto& b : reports) j["reports"].push_back(tbc::to_json(b));
  if (cfg.out.empty() || cfg.out == "-") {
    for (const auto& b : reports) print_table(std::cout, b);
  } else {
    tbc::write_json(cfg.out, j);
    for (const auto& b : reports) print_table(std::cout, b);
  }
  return kOk;
}

int cmd_oracle(const Cli& cli) {
  const tbc::RunConfig cfg = load_config(cli);
  const tbc::CylinderSample s =
      cli.sample.empty() ? tbc::sample_tbc(cfg.params, cfg.seed, cli.replication) : tbc::load_sample(cli.sample);
  const double res = cfg.oracle.resolution > 0.0 ? cfg.oracle.resolution : s.params.r / 20.0;
  if (!(res > 0.0)) throw tbc::ConfigError("config key 'oracle.resolution' must be > 0 when r = 0");
  if (s.params.d + 1 > 3) throw tbc::ConfigError("config key 'model.d': the voxel oracle needs d <= 2");
  const tbc::FunctionalResult nerve = tbc::euler_characteristic(s);
  const tbc::VoxelOracleResult vox = tbc::euler_characteristic_voxel_oracle(s, res);
  tbc::json j;
  j["schema_version"] = tbc::kSchemaVersion;
  j["cylinders"] = s.cylinders.size();
  j["resolution"] = res;
  j["nerve"] = tbc::to_json(nerve);
  j["voxel"] = {{"chi", vox.chi}, {"unreliable", vox.unreliable}, {"occupied", vox.occupied}};
  j["agree"] = static_cast<double>(vox.chi) == nerve.value;
  emit(cfg.out, j.dump(2) + "\n");
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-bounded cylinder model: sampling, functionals, constants and CLT campaigns"};
  app.require_subcommand(1);
  Cli cli;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", cli.config, "INI configuration file");
    sub->add_option("--out", cli.out, "Output file (default: stdout)");
    sub->add_option("--seed", cli.seed, "Master seed (overrides TBC_SEED and the config)");
    sub->add_option("--reps", cli.reps, "Replications");
    sub->add_option("--points", cli.points, "Monte Carlo points for the volume");
    sub->add_option("--sizes", cli.sizes, "Comma-separated window sizes");
    sub->add_option("--kind", cli.kind, "Functional: volume, isolated or euler");
    sub->add_option("--threads", cli.threads, "Worker threads (0: all cores)");
  };
  CLI::App* sample = app.add_subcommand("sample", "Draw one realisation and write it as JSON");
  add_common(sample);
  sample->add_option("--replication", cli.replication, "Replication index");
  CLI::App* estimate = app.add_subcommand("estimate", "Evaluate a functional on replications (CSV)");
  add_common(estimate);
  estimate->add_option("--sample", cli.sample, "Evaluate a saved sample instead of drawing new ones");
  CLI::App* clt = app.add_subcommand("clt", "Run a CLT campaign and write the report as JSON");
  add_common(clt);
  clt->add_option("--csv", cli.csv, "Also write raw values as CSV");
  CLI::App* bounds = app.add_subcommand("bounds", "Closed-form probabilities and constants");
  add_common(bounds);
  CLI::App* oracle = app.add_subcommand("oracle", "Compare nerve and voxel Euler characteristics");
  add_common(oracle);
  oracle->add_option("--sample", cli.sample, "Saved sample to check");
  oracle->add_option("--replication", cli.replication, "Replication index");
  oracle->add_option("--resolution", cli.resolution, "Voxel edge length (default r/20)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    if (*sample) return cmd_sample(cli);
    if (*estimate) return cmd_estimate(cli);
    if (*clt) return cmd_clt(cli);
    if (*bounds) return cmd_bounds(cli);
    if (*oracle) return cmd_oracle(cli);
  } catch (const tbc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const tbc::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const tbc::HypothesisViolation& e) {
    std::cerr << "hypothesis violation: " << e.what() << "\n";
    return kHypothesis;
  } catch (const tbc::ContractViolation& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}
