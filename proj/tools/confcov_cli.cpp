#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "confcov/confcov.hpp"

namespace {

using namespace confcov;

double parse_df_flag(const std::string& s) {
  if (s == "inf" || s == "infinity") return kInfDf;
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  detail::require(used == s.size(), ErrorCode::InvalidArgument, "bad degrees of freedom '" + s + "'");
  return v;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  detail::require(static_cast<bool>(in), ErrorCode::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

SymmetricMatrix read_symmetric(const std::string& path) {
  const Matrix m = read_matrix(path);
  detail::require(m.rows() == m.cols(), ErrorCode::ShapeError, path + ": expected a square matrix");
  return SymmetricMatrix(m);
}

struct SimulateArgs {
  std::string scenario = "block";
  Index p = 100;
  Index n = 50;
  double nu = 1.0;
  std::string df1 = "inf";
  std::string df2 = "inf";
  std::string link = "linear";
  std::uint64_t seed = 0;
  std::string out_dir = ".";
};

void run_simulate(const SimulateArgs& a) {
  const auto kind = parse_scenario_kind(a.scenario);
  detail::require(kind.has_value(), ErrorCode::InvalidArgument, "unknown scenario '" + a.scenario + "'");
  const auto link = parse_link(a.link);
  detail::require(link.has_value(), ErrorCode::InvalidArgument, "unknown link '" + a.link + "'");
  ScenarioSpec spec{*kind, a.p, a.n, a.nu, parse_df_flag(a.df1), parse_df_flag(a.df2), *link, a.seed};
  const GroundTruth gt = make_ground_truth(spec);
  const DataMatrix x = sample_dataset(gt, a.n + 1, spec.df1, spec.link, derive_seed(a.seed, {2}));
  std::filesystem::create_directories(a.out_dir);
  const std::filesystem::path dir(a.out_dir);
  write_matrix((dir / "X.csv").string(), x.values());
  write_matrix((dir / "sigma.csv").string(), gt.sigma.values());
  write_matrix((dir / "omega.csv").string(), gt.omega.values());
  write_matrix((dir / "gamma.csv").string(), gt.gamma);
}

struct EstimateArgs {
  std::string input;
  std::string output;
  std::string method = "rsvp";
  Index m = 0;
  Index b = 50;
  std::uint64_t seed = 0;
  std::string ell = "0";
  Index kmax = -1;
};

void run_estimate(const EstimateArgs& a) {
  const DataMatrix x(read_matrix(a.input));
  const Index m = a.m > 0 ? a.m : default_subsample_size(x.cols());
  CovEstimate est;
  if (a.method == "rsvp") {
    est = rsvp(x);
  } else if (a.method == "rsvp-split") {
    est = rsvp_split(x, {m, 1, a.seed, SubsampleMode::Split});
  } else if (a.method == "rsvp-sub") {
    est = rsvp_sub(x, {m, a.b, a.seed, SubsampleMode::Sub});
  } else if (a.method == "empirical") {
    est = empirical_covariance(x);
  } else if (a.method == "pca-removal") {
    Index ell = 0;
    if (a.ell == "bai-ng") {
      ell = a.kmax >= 0 ? bai_ng_select(x, a.kmax) : bai_ng_select(x);
      std::cerr << "bai-ng selected ell = " << ell << "\n";
    } else {
      std::size_t used = 0;
      ell = static_cast<Index>(std::stoll(a.ell, &used));
      detail::require(used == a.ell.size(), ErrorCode::InvalidArgument, "bad --ell '" + a.ell + "'");
    }
    est = pca_removal(x, ell);
  } else {
    detail::fail(ErrorCode::InvalidArgument, "unknown method '" + a.method + "'");
  }
  write_matrix(a.output, est.matrix.values());
}

struct GraphArgs {
  std::string input;
  std::string output;
  std::string precision;
  double lambda = 1e-6;
  std::string rule = "and";
  double tol = 1e-10;
  Index max_iter = 100000;
};

void run_graph(const GraphArgs& a) {
  const SymmetricMatrix est = read_symmetric(a.input);
  detail::require(a.rule == "and" || a.rule == "or", ErrorCode::InvalidArgument, "rule must be 'and' or 'or'");
  const CigResult cig = cig_estimate(est, a.lambda, a.rule == "and" ? CombineRule::And : CombineRule::Or,
                                     {a.tol, a.max_iter});
  std::string text = "j,k\n";
  for (const auto& [j, k] : cig.edges) text += std::to_string(j) + ',' + std::to_string(k) + '\n';
  write_text(a.output, text);
  if (!a.precision.empty()) write_matrix(a.precision, cig.precision_proxy.values());
}

struct PcArgs {
  std::string input;
  std::string output;
  double tau = 0.1;
  Index max_cond_size = 3;
};

void run_pc(const PcArgs& a) {
  const SymmetricMatrix est = read_symmetric(a.input);
  const Cpdag g = pc_algorithm(est, a.tau, a.max_cond_size);
  std::string text = "from,to,type\n";
  for (const auto& [from, to] : g.directed) text += std::to_string(from) + ',' + std::to_string(to) + ",directed\n";
  for (const auto& [j, k] : g.undirected) text += std::to_string(j) + ',' + std::to_string(k) + ",undirected\n";
  write_text(a.output, text);
  for (const auto& [j, k] : g.conflicts) {
    std::cerr << "warning: conflicting orientation for " << j << " - " << k << ", left undirected\n";
  }
}

struct ExperimentArgs {
  std::string config;
  std::string output;
  Index parallelism = 0;
};

void run_experiment_cmd(const ExperimentArgs& a) {
  ExperimentConfig config = parse_experiment_config(read_file(a.config));
  if (a.parallelism > 0) config.parallelism = a.parallelism;
  run_experiment(config, a.output);
}

struct DiagnosticsArgs {
  std::string sigma;
  std::string gamma;
  std::string output;
};

void run_diagnostics(const DiagnosticsArgs& a) {
  const SymmetricMatrix sigma = read_symmetric(a.sigma);
  const Matrix gamma = read_matrix(a.gamma);
  const Diagnostics d = population_diagnostics(GroundTruth(sigma, gamma));
  nlohmann::json j;
  j["gamma_l"] = d.gamma_l;
  j["gamma_u"] = d.gamma_u;
  j["sigma_l"] = d.sigma_l;
  j["sigma_u"] = d.sigma_u;
  j["rho1"] = d.rho1;
  j["rho2"] = d.rho2;
  j["eta"] = std::vector<double>(d.eta.data(), d.eta.data() + d.eta.size());
  j["s"] = d.s;
  j["rank_deficient_loadings"] = d.rank_deficient_loadings;
  const std::string text = j.dump(2) + "\n";
  if (a.output.empty()) {
    std::cout << text;
  } else {
    write_text(a.output, text);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"confcov: covariance estimation under latent confounding"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Sample a scenario; writes X.csv (n+1 rows), sigma.csv, omega.csv, gamma.csv");
  simulate->add_option("--scenario", sim.scenario, "block|block2|toeplitz|toeplitz2|erdos_renyi");
  simulate->add_option("--p", sim.p, "dimension");
  simulate->add_option("--n", sim.n, "sample size n (n+1 rows are written)");
  simulate->add_option("--nu", sim.nu, "confounder strength");
  simulate->add_option("--df1", sim.df1, "idiosyncratic degrees of freedom or 'inf'");
  simulate->add_option("--df2", sim.df2, "loading degrees of freedom or 'inf'");
  simulate->add_option("--link", sim.link, "linear|max_linear");
  simulate->add_option("--seed", sim.seed);
  simulate->add_option("--out-dir", sim.out_dir)->required();

  EstimateArgs est;
  auto* estimate = app.add_subcommand("estimate", "Estimate the idiosyncratic covariance from a data matrix");
  estimate->add_option("--input", est.input)->required()->check(CLI::ExistingFile);
  estimate->add_option("--output", est.output)->required();
  estimate->add_option("--method", est.method, "rsvp|rsvp-split|rsvp-sub|pca-removal|empirical");
  estimate->add_option("--m", est.m, "subsample size (default round(2 sqrt(p)))");
  estimate->add_option("--b", est.b, "number of subsamples for rsvp-sub");
  estimate->add_option("--seed", est.seed);
  estimate->add_option("--ell", est.ell, "components to remove, or 'bai-ng'");
  estimate->add_option("--kmax", est.kmax, "upper bound for bai-ng");

  GraphArgs gr;
  auto* graph = app.add_subcommand("graph", "Nodewise-Lasso conditional independence graph");
  graph->add_option("--input", gr.input)->required()->check(CLI::ExistingFile);
  graph->add_option("--output", gr.output)->required();
  graph->add_option("--precision", gr.precision, "also write the precision proxy matrix");
  graph->add_option("--lambda", gr.lambda);
  graph->add_option("--rule", gr.rule, "and|or");
  graph->add_option("--tol", gr.tol);
  graph->add_option("--max-iter", gr.max_iter);

  PcArgs pa;
  auto* pc = app.add_subcommand("pc", "PC algorithm on a covariance estimate; writes a CPDAG edge list");
  pc->add_option("--input", pa.input)->required()->check(CLI::ExistingFile);
  pc->add_option("--output", pa.output)->required();
  pc->add_option("--tau", pa.tau, "partial correlation threshold in (0, 1)");
  pc->add_option("--max-cond-size", pa.max_cond_size);

  ExperimentArgs ex;
  auto* experiment = app.add_subcommand("experiment", "Run a simulation sweep from a JSON config");
  experiment->add_option("--config", ex.config)->required()->check(CLI::ExistingFile);
  experiment->add_option("--output", ex.output, "results CSV (overrides output_path)");
  experiment->add_option("--parallelism", ex.parallelism, "worker count (CONFCOV_THREADS wins)");

  DiagnosticsArgs di;
  auto* diagnostics = app.add_subcommand("diagnostics", "Population diagnostics for sigma and gamma as JSON");
  diagnostics->add_option("--sigma", di.sigma)->required()->check(CLI::ExistingFile);
  diagnostics->add_option("--gamma", di.gamma)->required()->check(CLI::ExistingFile);
  diagnostics->add_option("--output", di.output, "JSON path (stdout if omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate) run_simulate(sim);
    if (*estimate) run_estimate(est);
    if (*graph) run_graph(gr);
    if (*pc) run_pc(pa);
    if (*experiment) run_experiment_cmd(ex);
    if (*diagnostics) run_diagnostics(di);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
