#include "lindopt/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "lindopt/archive.hpp"
#include "lindopt/errors.hpp"
#include "lindopt/experiments.hpp"

namespace lindopt::cli {

namespace {

namespace fs = std::filesystem;

struct RunConfig {
  std::string command;
  std::string model = "kitaev";
  double tau = 1.0;
  int n_tau = 1;
  int sites = 4;
  int rank = 0;  // 0: natural Choi rank of the model channel
  int iters = 100;
  double gamma = 1.0;
  double alpha0 = 1.0;
  double alpha1 = 0.5;
  std::string directions = "canonical";
  std::uint64_t seed = 12345;
  int samples = 500;
  double choi_tol = 1e-10;
  std::string out_dir = "lindopt-out";
  std::vector<int> n_taus = {1, 2, 4, 8};
  std::vector<int> ranks;  // empty: model defaults
  int target_sites = 6;
  TrustRegionConfig tr;
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string());
    out << text;
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("rename failed for " + path.string());
}

class Csv {
 public:
  Csv(const std::string& schema, const std::string& header) {
    buf_ << "# lindopt-csv v1 " << schema << "\n" << header << "\n";
  }
  void row(const std::string& line) { buf_ << line << "\n"; }
  void save(const fs::path& path) const { write_text_atomic(path, buf_.str()); }

 private:
  std::ostringstream buf_;
};

Model parse_model(const std::string& name) {
  if (name == "kitaev") return Model::kitaev;
  if (name == "pspl") return Model::pspl;
  throw ConfigError("unknown model '" + name + "' (expected kitaev or pspl)");
}

DirectionKind parse_directions(const std::string& name) {
  if (name == "canonical") return DirectionKind::canonical;
  if (name == "projected-unit") return DirectionKind::projected_unit;
  throw ConfigError("unknown directions '" + name + "'");
}

int natural_rank(const LindbladModel& model, double tau, int n_tau) {
  const Dissipator d = lindblad::local_dissipator(model.jump_ops);
  const Matrix channel = lindblad::expm(tau / n_tau * d.matrix);
  return chanrep::choi_natural_rank(chanrep::superop_to_choi(Superoperator{channel, 2, 2}));
}

void validate(const RunConfig& c) {
  if (c.tau < 0) throw ConfigError("tau must be nonnegative");
  if (c.n_tau < 1) throw ConfigError("n-tau must be >= 1");
  if (c.sites < 2 || c.sites % 2 != 0) throw ConfigError("sites must be even and >= 2");
  if (c.rank < 0 || c.rank > 16) throw ConfigError("rank must lie in [1, 16] (0 selects the natural rank)");
  if (c.iters < 0) throw ConfigError("iters must be nonnegative");
  if (c.gamma <= 0) throw ConfigError("gamma must be positive");
  if (c.alpha0 <= 0 || c.alpha1 <= 0) throw ConfigError("alpha0 and alpha1 must be positive");
  if (c.samples < 1) throw ConfigError("samples must be >= 1");
  if (c.choi_tol <= 0 || c.choi_tol >= 1) throw ConfigError("choi-tol must lie in (0,1)");
  if (c.target_sites < 4 || c.target_sites % 2 != 0) throw ConfigError("target-sites must be even and >= 4");
}

struct Prepared {
  LindbladModel model;
  int rank;
  experiments::ProblemSetup setup;
};

Prepared prepare(const RunConfig& c, int n_tau, int rank_override = -1) {
  Prepared p{lindblad::make_model(parse_model(c.model), c.gamma), 0, {}};
  p.rank = rank_override > 0 ? rank_override : (c.rank > 0 ? c.rank : natural_rank(p.model, c.tau, n_tau));
  p.setup = experiments::make_problem(p.model, c.tau, n_tau, p.rank, c.sites, MetricParams{c.alpha0, c.alpha1},
                                      parse_directions(c.directions));
  return p;
}

TrustRegionConfig tr_config(const RunConfig& c, int iters) {
  TrustRegionConfig cfg = c.tr;
  cfg.max_outer = iters;
  return cfg;
}

void cmd_optimize(const RunConfig& c) {
  Prepared p = prepare(c, c.n_tau);
  const double baseline = splitting::trotter_error(p.model, c.tau, c.n_tau, c.sites);
  const OptimRecord rec = optim::trust_region_run(p.setup.objective, p.setup.ansatz, tr_config(c, c.iters));

  Csv csv("cost-history", "iter,cost,rho,delta,accepted");
  csv.row("0," + fmt(rec.cost_history[0]) + ",,,");
  for (size_t i = 0; i < rec.rho_history.size(); ++i)
    csv.row(std::to_string(i + 1) + "," + fmt(rec.cost_history[i + 1]) + "," + fmt(rec.rho_history[i]) + "," +
            fmt(rec.radius_history[i]) + "," + (rec.accepted[i] ? "1" : "0"));
  csv.save(fs::path(c.out_dir) / "cost_history.csv");

  IsometryArchive arc;
  arc.header.model = c.model;
  arc.header.tau = c.tau;
  arc.header.n_tau = static_cast<std::uint32_t>(c.n_tau);
  arc.header.sites = static_cast<std::uint32_t>(c.sites);
  arc.header.rank = static_cast<std::uint32_t>(p.rank);
  arc.header.layers = static_cast<std::uint32_t>(rec.final_isometries.layer_count());
  arc.header.alpha0 = c.alpha0;
  arc.header.alpha1 = c.alpha1;
  arc.isometries = rec.final_isometries;
  archive::save(arc, fs::path(c.out_dir) / "isometries.bin");

  nlohmann::ordered_json summary;
  summary["model"] = c.model;
  summary["tau"] = c.tau;
  summary["n_tau"] = c.n_tau;
  summary["sites"] = c.sites;
  summary["rank"] = p.rank;
  summary["iters"] = c.iters;
  summary["seed"] = c.seed;
  summary["alpha0"] = c.alpha0;
  summary["alpha1"] = c.alpha1;
  summary["directions"] = c.directions;
  summary["dof"] = rec.dof;
  summary["initial_cost"] = rec.initial_cost;
  summary["final_cost"] = rec.final_cost;
  summary["trotter_baseline"] = baseline;
  summary["stop_reason"] = rec.stop_reason;
  write_text_atomic(fs::path(c.out_dir) / "summary.json", summary.dump(2) + "\n");
}

void cmd_benchmark(const RunConfig& c) {
  Csv csv("benchmark", "n_tau,scheme,avg_error,n_samples,seed");
  for (int n_tau : c.n_taus) {
    Prepared p = prepare(c, n_tau);
    const Matrix trotter = splitting::exact_trotter_superop(p.model, c.tau, n_tau, c.sites);
    const double err_trotter = experiments::average_error(trotter, p.setup.exact, c.samples, c.seed);
    const OptimRecord rec = optim::trust_region_run(p.setup.objective, p.setup.ansatz, tr_config(c, c.iters));
    const Matrix riem = splitting::compose_global(rec.final_isometries, c.sites).matrix;
    const double err_riem = experiments::average_error(riem, p.setup.exact, c.samples, c.seed);
    csv.row(std::to_string(n_tau) + ",trotter," + fmt(err_trotter) + "," + std::to_string(c.samples) + "," +
            std::to_string(c.seed));
    csv.row(std::to_string(n_tau) + ",riemannian," + fmt(err_riem) + "," + std::to_string(c.samples) + "," +
            std::to_string(c.seed));
  }
  csv.save(fs::path(c.out_dir) / "benchmark.csv");
}

void cmd_ranks(const RunConfig& c) {
  std::vector<int> ranks = c.ranks;
  if (ranks.empty()) ranks = parse_model(c.model) == Model::pspl ? std::vector<int>{2, 5, 10, 16}
                                                                 : std::vector<int>{2, 4, 8, 16};
  const LindbladModel model = lindblad::make_model(parse_model(c.model), c.gamma);
  const RankStudyResult result =
      experiments::rank_study(model, c.tau, c.n_tau, ranks, c.iters, c.sites, c.tr, c.choi_tol);
  Csv csv("rank-study", "rank,cost_initial,cost_final,rank_before,rank_after");
  for (const auto& row : result.rows)
    csv.row(std::to_string(row.rank) + "," + fmt(row.initial_cost) + "," + fmt(row.final_cost) + "," +
            std::to_string(row.rank_before) + "," + std::to_string(row.rank_after));
  csv.save(fs::path(c.out_dir) / "ranks.csv");
}

void cmd_embed(const RunConfig& c) {
  Csv csv("embedding", "n_tau,sites,scheme,error");
  for (int n_tau : c.n_taus) {
    Prepared p = prepare(c, n_tau);
    const OptimRecord rec = optim::trust_region_run(p.setup.objective, p.setup.ansatz, tr_config(c, c.iters));
    const double src_trotter = splitting::trotter_error(p.model, c.tau, n_tau, c.sites);
    const double src_riem = rec.final_cost;
    const experiments::EmbedResult tgt =
        experiments::embed_larger_n(rec.final_isometries, p.model, c.tau, c.target_sites);
    csv.row(std::to_string(n_tau) + "," + std::to_string(c.sites) + ",trotter," + fmt(src_trotter));
    csv.row(std::to_string(n_tau) + "," + std::to_string(c.sites) + ",riemannian," + fmt(src_riem));
    csv.row(std::to_string(n_tau) + "," + std::to_string(c.target_sites) + ",trotter," + fmt(tgt.trotter_error));
    csv.row(std::to_string(n_tau) + "," + std::to_string(c.target_sites) + ",riemannian," + fmt(tgt.riemannian_error));
  }
  csv.save(fs::path(c.out_dir) / "embed.csv");
}

void cmd_metrics(const RunConfig& c) {
  const LindbladModel model = lindblad::make_model(parse_model(c.model), c.gamma);
  const experiments::MetricComparison cmp =
      experiments::metric_comparison(model, c.tau, c.n_tau, c.iters, c.sites, c.tr);
  Csv csv("metric-comparison", "variant,iter,cost");
  auto emit = [&](const char* name, const std::vector<double>& hist) {
    for (size_t i = 0; i < hist.size(); ++i) csv.row(std::string(name) + "," + std::to_string(i) + "," + fmt(hist[i]));
  };
  emit("euclidean-projected", cmp.euclidean_projected);
  emit("euclidean-canonical-dirs", cmp.euclidean_canonical_dirs);
  emit("canonical", cmp.canonical);
  csv.save(fs::path(c.out_dir) / "metrics.csv");
}

void cmd_converge(const RunConfig& c) {
  Prepared p = prepare(c, c.n_tau);  // resolves the rank once for all n_tau
  const LindbladModel model = p.model;
  const auto trajectories = experiments::convergence_study(model, c.tau, p.rank, c.n_taus, c.iters, c.sites, c.tr);
  Csv csv("convergence", "n_tau,iter,cost_norm");
  for (size_t t = 0; t < trajectories.size(); ++t)
    for (size_t i = 0; i < trajectories[t].size(); ++i)
      csv.row(std::to_string(c.n_taus[t]) + "," + std::to_string(i) + "," + fmt(trajectories[t][i]));
  csv.save(fs::path(c.out_dir) / "converge.csv");
}

int dispatch(const RunConfig& c) {
  validate(c);
  std::error_code ec;
  fs::create_directories(c.out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + c.out_dir);
  if (c.command == "optimize")
    cmd_optimize(c);
  else if (c.command == "benchmark")
    cmd_benchmark(c);
  else if (c.command == "ranks")
    cmd_ranks(c);
  else if (c.command == "embed")
    cmd_embed(c);
  else if (c.command == "metrics")
    cmd_metrics(c);
  else if (c.command == "converge")
    cmd_converge(c);
  else
    throw ConfigError("unknown command");
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
  RunConfig cfg;
  CLI::App app{"Riemannian optimization of nearest-neighbor Lindbladian splittings"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "Declarative key = value config file; flags win");

  app.add_option("--model", cfg.model, "Noise model: kitaev | pspl")->check(CLI::IsMember({"kitaev", "pspl"}));
  app.add_option("--tau", cfg.tau, "Final evolution time");
  app.add_option("--n-tau", cfg.n_tau, "Number of splitting time steps");
  app.add_option("--sites", cfg.sites, "System size N (even)");
  app.add_option("--rank", cfg.rank, "Channel rank R (0 selects the natural Choi rank)");
  app.add_option("--iters", cfg.iters, "Trust-region iterations");
  app.add_option("--gamma", cfg.gamma, "Noise strength");
  app.add_option("--alpha0", cfg.alpha0, "Metric parameter alpha0");
  app.add_option("--alpha1", cfg.alpha1, "Metric parameter alpha1");
  app.add_option("--directions", cfg.directions, "Hessian directions: canonical | projected-unit")
      ->check(CLI::IsMember({"canonical", "projected-unit"}));
  app.add_option("--seed", cfg.seed, "Sampling seed");
  app.add_option("--samples", cfg.samples, "Density-matrix samples for average errors");
  app.add_option("--choi-tol", cfg.choi_tol, "Relative threshold for numerical Choi ranks");
  app.add_option("--out-dir", cfg.out_dir, "Output directory");
  app.add_option("--n-taus", cfg.n_taus, "Time-step counts for sweep commands")->delimiter(',');
  app.add_option("--ranks", cfg.ranks, "Ranks for the rank study")->delimiter(',');
  app.add_option("--target-sites", cfg.target_sites, "Embedding target system size");
  app.add_option("--delta0", cfg.tr.delta0, "Initial trust radius (<=0: 0.1 sqrt(DOF))");
  app.add_option("--delta-max", cfg.tr.delta_max, "Trust radius cap (<=0: sqrt(DOF))");
  app.add_option("--rho-accept", cfg.tr.rho_accept, "Step acceptance threshold");
  app.add_option("--rho-good", cfg.tr.rho_good, "Radius expansion threshold");
  app.add_option("--shrink", cfg.tr.shrink, "Radius contraction factor");
  app.add_option("--grow", cfg.tr.grow, "Radius expansion factor");
  app.add_option("--cg-kappa", cfg.tr.cg_kappa, "Inner CG residual factor");
  app.add_option("--cg-theta", cfg.tr.cg_theta, "Inner CG residual exponent");
  app.add_option("--hess-fd-step", cfg.tr.hess_fd_step, "Hessian finite-difference step");
  app.add_option("--threads", cfg.tr.threads, "Worker threads (0: hardware)");

  app.add_subcommand("optimize", "Trust-region optimization run");
  app.add_subcommand("benchmark", "Average-error comparison against the splitting");
  app.add_subcommand("ranks", "Rank sweep with Choi ranks before/after optimization");
  app.add_subcommand("embed", "Evaluate optimized isometries in a larger system");
  app.add_subcommand("metrics", "Compare metric/direction combinations");
  app.add_subcommand("converge", "Normalized cost trajectories per time-step count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  cfg.command = app.get_subcommands().front()->get_name();

  try {
    return dispatch(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("lindopt");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace lindopt::cli
