#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "confcov/estimators.hpp"
#include "confcov/io.hpp"
#include "confcov/metrics.hpp"
#include "confcov/nodewise.hpp"
#include "confcov/simulation.hpp"

namespace confcov {

enum class EllChoice { Fixed, Oracle, BaiNg };

struct MethodSpec {
  Method kind = Method::Rsvp;
  EllChoice ell_choice = EllChoice::Fixed;
  Index ell = 0;
  std::optional<Index> m;  ///< nullopt: rule of thumb round(2 sqrt(p))
  Index b = 1;
  std::optional<Index> kmax;
};

struct ExperimentConfig {
  std::vector<ScenarioKind> scenarios;
  std::vector<Index> p_grid;
  std::vector<Index> n_grid;
  std::vector<double> nu_grid;
  std::vector<double> df1_grid{kInfDf};
  std::vector<double> df2_grid{kInfDf};
  std::vector<Link> links{Link::Linear};
  std::vector<MethodSpec> methods;
  Index replications = 1;
  std::uint64_t base_seed = 0;
  Index parallelism = 1;
  std::string output_path;
  bool graph_inversion = false;
  double lambda = 1e-6;
  bool record_runtime = false;  ///< off by default so output is a pure function of the config
};

struct ResultRow {
  std::string scenario;
  Index p = 0;
  Index n = 0;
  Index q = 0;
  double nu = 0.0;
  double df1 = kInfDf;
  double df2 = kInfDf;
  std::string link;
  std::string method;
  std::string method_param;
  std::uint64_t seed = 0;
  std::optional<double> rho_cov;
  std::optional<double> rho_prec;
  std::optional<double> kappa_frob;
  std::optional<double> resid_frob;
  double runtime_ms = 0.0;
  std::string error;
};

inline constexpr const char* kResultsHeader =
    "scenario,p,n,q,nu,df1,df2,link,method,method_param,seed,rho_cov,rho_prec,kappa_frob,"
    "resid_frob,runtime_ms,error";

namespace detail {

using json = nlohmann::json;

[[noreturn]] inline void config_fail(const std::string& path, const std::string& message) {
  fail(ErrorCode::ConfigInvalid, path + ": " + message);
}

inline void reject_unknown(const json& obj, const std::string& path,
                           std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) config_fail(path, "expected an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) config_fail(path + "." + key, "unknown field");
  }
}

inline const json& required(const json& obj, const std::string& path, const char* key) {
  if (!obj.contains(key)) config_fail(path + "." + key, "missing required field");
  return obj.at(key);
}

inline Index parse_count(const json& v, const std::string& path, Index min_value) {
  if (!v.is_number_integer()) config_fail(path, "expected an integer");
  const auto value = v.get<std::int64_t>();
  if (value < min_value) config_fail(path, "must be >= " + std::to_string(min_value));
  return static_cast<Index>(value);
}

inline double parse_df(const json& v, const std::string& path) {
  double df = 0.0;
  if (v.is_string() && (v.get<std::string>() == "inf" || v.get<std::string>() == "infinity")) {
    df = kInfDf;
  } else if (v.is_number()) {
    df = v.get<double>();
  } else {
    config_fail(path, "expected a number or \"inf\"");
  }
  if (!is_allowed_df(df)) config_fail(path, "must be one of 1,2,3,5,10,20,50,100,inf");
  return df;
}

template <class Fn>
auto parse_list(const json& obj, const std::string& path, const char* key, Fn&& parse_item) {
  const json& v = required(obj, path, key);
  const std::string field = path + "." + key;
  if (!v.is_array() || v.empty()) config_fail(field, "expected a nonempty array");
  std::vector<decltype(parse_item(v.at(0), field))> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(parse_item(v.at(i), field + "[" + std::to_string(i) + "]"));
  return out;
}

/// A scalar or an array of scalars, expanded into a list.
inline std::vector<json> as_list(const json& v) {
  if (v.is_array()) return std::vector<json>(v.begin(), v.end());
  return {v};
}

inline std::vector<MethodSpec> parse_method(const json& obj, const std::string& path) {
  if (!obj.is_object()) config_fail(path, "expected an object");
  const json& kind_v = required(obj, path, "kind");
  if (!kind_v.is_string()) config_fail(path + ".kind", "expected a string");
  const std::string kind = kind_v.get<std::string>();
  std::vector<MethodSpec> out;

  if (kind == "rsvp" || kind == "empirical") {
    reject_unknown(obj, path, {"kind"});
    MethodSpec spec;
    spec.kind = kind == "rsvp" ? Method::Rsvp : Method::Empirical;
    out.push_back(spec);
  } else if (kind == "pca-removal") {
    reject_unknown(obj, path, {"kind", "ell", "kmax"});
    std::optional<Index> kmax;
    if (obj.contains("kmax")) kmax = parse_count(obj.at("kmax"), path + ".kmax", 0);
    const auto ells = as_list(required(obj, path, "ell"));
    if (ells.empty()) config_fail(path + ".ell", "expected at least one value");
    for (std::size_t i = 0; i < ells.size(); ++i) {
      const std::string field = path + ".ell[" + std::to_string(i) + "]";
      MethodSpec spec;
      spec.kind = Method::PcaRemoval;
      spec.kmax = kmax;
      if (ells[i].is_string() && ells[i].get<std::string>() == "oracle") {
        spec.ell_choice = EllChoice::Oracle;
      } else if (ells[i].is_string() && ells[i].get<std::string>() == "bai-ng") {
        spec.ell_choice = EllChoice::BaiNg;
      } else {
        spec.ell = parse_count(ells[i], field, 0);
      }
      out.push_back(spec);
    }
  } else if (kind == "rsvp-split" || kind == "rsvp-sub") {
    const bool sub = kind == "rsvp-sub";
    if (sub) {
      reject_unknown(obj, path, {"kind", "m", "b"});
    } else {
      reject_unknown(obj, path, {"kind", "m"});
    }
    Index b = 1;
    if (sub) b = parse_count(required(obj, path, "b"), path + ".b", 1);
    const auto ms = as_list(required(obj, path, "m"));
    if (ms.empty()) config_fail(path + ".m", "expected at least one value");
    for (std::size_t i = 0; i < ms.size(); ++i) {
      MethodSpec spec;
      spec.kind = sub ? Method::RsvpSub : Method::RsvpSplit;
      spec.b = b;
      if (!(ms[i].is_string() && ms[i].get<std::string>() == "rule-of-thumb")) {
        spec.m = parse_count(ms[i], path + ".m[" + std::to_string(i) + "]", 3);
      }
      out.push_back(spec);
    }
  } else {
    config_fail(path + ".kind", "unknown method '" + kind + "'");
  }
  return out;
}

}  // namespace detail

/// Parse and validate an experiment config. Errors are ConfigInvalid with the field path.
inline ExperimentConfig parse_experiment_config(const nlohmann::json& j) {
  using namespace detail;
  const std::string root = "config";
  reject_unknown(j, root,
                 {"scenarios", "p_grid", "n_grid", "nu_grid", "df1_grid", "df2_grid", "links", "methods",
                  "replications", "base_seed", "parallelism", "output_path", "graph_inversion", "lambda",
                  "record_runtime"});
  ExperimentConfig c;
  c.scenarios = parse_list(j, root, "scenarios", [](const json& v, const std::string& path) {
    if (!v.is_string()) config_fail(path, "expected a scenario name");
    const auto kind = parse_scenario_kind(v.get<std::string>());
    if (!kind) config_fail(path, "unknown scenario '" + v.get<std::string>() + "'");
    return *kind;
  });
  c.p_grid = parse_list(j, root, "p_grid", [](const json& v, const std::string& path) { return parse_count(v, path, 2); });
  c.n_grid = parse_list(j, root, "n_grid", [](const json& v, const std::string& path) { return parse_count(v, path, 2); });
  c.nu_grid = parse_list(j, root, "nu_grid", [](const json& v, const std::string& path) {
    if (!v.is_number() || v.get<double>() < 0.0) config_fail(path, "expected a number >= 0");
    return v.get<double>();
  });
  if (j.contains("df1_grid")) c.df1_grid = parse_list(j, root, "df1_grid", parse_df);
  if (j.contains("df2_grid")) c.df2_grid = parse_list(j, root, "df2_grid", parse_df);
  if (j.contains("links")) {
    c.links = parse_list(j, root, "links", [](const json& v, const std::string& path) {
      const auto link = v.is_string() ? parse_link(v.get<std::string>()) : std::nullopt;
      if (!link) config_fail(path, "expected \"linear\" or \"max_linear\"");
      return *link;
    });
  }
  const auto nested = parse_list(j, root, "methods", parse_method);
  for (const auto& group : nested) c.methods.insert(c.methods.end(), group.begin(), group.end());

  c.replications = parse_count(required(j, root, "replications"), root + ".replications", 1);
  const json& seed = required(j, root, "base_seed");
  if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<std::int64_t>() >= 0)) {
    config_fail(root + ".base_seed", "expected a non-negative integer");
  }
  c.base_seed = seed.get<std::uint64_t>();
  if (j.contains("parallelism")) c.parallelism = parse_count(j.at("parallelism"), root + ".parallelism", 1);
  if (j.contains("output_path")) {
    if (!j.at("output_path").is_string()) config_fail(root + ".output_path", "expected a string");
    c.output_path = j.at("output_path").get<std::string>();
  }
  if (j.contains("graph_inversion")) {
    if (!j.at("graph_inversion").is_boolean()) config_fail(root + ".graph_inversion", "expected a boolean");
    c.graph_inversion = j.at("graph_inversion").get<bool>();
  }
  if (j.contains("lambda")) {
    if (!j.at("lambda").is_number() || j.at("lambda").get<double>() < 0.0) {
      config_fail(root + ".lambda", "expected a number >= 0");
    }
    c.lambda = j.at("lambda").get<double>();
  }
  if (j.contains("record_runtime")) {
    if (!j.at("record_runtime").is_boolean()) config_fail(root + ".record_runtime", "expected a boolean");
    c.record_runtime = j.at("record_runtime").get<bool>();
  }
  return c;
}

inline ExperimentConfig parse_experiment_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    detail::fail(ErrorCode::ConfigInvalid, std::string("config: invalid JSON: ") + e.what());
  }
  return parse_experiment_config(j);
}

/// CONFCOV_THREADS, when set to a positive integer, overrides the config.
inline Index effective_parallelism(const ExperimentConfig& config) {
  if (const char* env = std::getenv("CONFCOV_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<Index>(v);
  }
  return config.parallelism;
}

/// One simulation cell: a point of the scenario x p x n x nu x df1 x df2 x link grid.
struct ExperimentCell {
  ScenarioKind kind;
  Index p;
  Index n;
  double nu;
  double df1;
  double df2;
  Link link;
};

inline std::vector<ExperimentCell> expand_cells(const ExperimentConfig& c) {
  std::vector<ExperimentCell> cells;
  for (auto kind : c.scenarios)
    for (auto p : c.p_grid)
      for (auto n : c.n_grid)
        for (auto nu : c.nu_grid)
          for (auto df1 : c.df1_grid)
            for (auto df2 : c.df2_grid)
              for (auto link : c.links) cells.push_back({kind, p, n, nu, df1, df2, link});
  return cells;
}

namespace detail {

inline std::string sanitize_csv(std::string s) {
  for (char& ch : s) {
    if (ch == ',') ch = ';';
    if (ch == '\n' || ch == '\r') ch = ' ';
    if (ch == '"') ch = '\'';
  }
  return s;
}

inline std::string format_df(double df) { return std::isinf(df) ? "inf" : format_double(df); }

inline std::string format_optional(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

/// Estimate for one method. `label` receives the method_param column text.
inline CovEstimate run_method(const MethodSpec& spec, const DataMatrix& x, Index q, std::uint64_t seed,
                              std::string& label) {
  switch (spec.kind) {
    case Method::Rsvp:
      return rsvp(x);
    case Method::Empirical:
      return empirical_covariance(x);
    case Method::PcaRemoval: {
      Index ell = spec.ell;
      if (spec.ell_choice == EllChoice::Fixed) {
        label = "ell=" + std::to_string(ell);
      } else if (spec.ell_choice == EllChoice::Oracle) {
        ell = q;
        label = "ell=oracle:" + std::to_string(ell);
      } else {
        label = "ell=bai-ng";
        ell = spec.kmax ? bai_ng_select(x, *spec.kmax) : bai_ng_select(x);
        label += ":" + std::to_string(ell);
      }
      return pca_removal(x, ell);
    }
    case Method::RsvpSplit:
    case Method::RsvpSub: {
      const Index m = spec.m.value_or(default_subsample_size(x.cols()));
      SubsampleConfig cfg;
      cfg.m = m;
      cfg.seed = seed;
      label = "m=" + std::to_string(m);
      if (spec.kind == Method::RsvpSub) {
        cfg.mode = SubsampleMode::Sub;
        cfg.b = spec.b;
        label += ";b=" + std::to_string(spec.b);
        return rsvp_sub(x, cfg);
      }
      cfg.mode = SubsampleMode::Split;
      return rsvp_split(x, cfg);
    }
    case Method::Spectral:
      break;
  }
  fail(ErrorCode::InvalidArgument, "method not supported in experiments");
}

inline std::string static_label(const MethodSpec& spec, Index p) {
  switch (spec.kind) {
    case Method::PcaRemoval:
      if (spec.ell_choice == EllChoice::Oracle) return "ell=oracle";
      if (spec.ell_choice == EllChoice::BaiNg) return "ell=bai-ng";
      return "ell=" + std::to_string(spec.ell);
    case Method::RsvpSplit:
      return "m=" + std::to_string(spec.m.value_or(default_subsample_size(p)));
    case Method::RsvpSub:
      return "m=" + std::to_string(spec.m.value_or(default_subsample_size(p))) + ";b=" + std::to_string(spec.b);
    default:
      return "";
  }
}

/// All method rows for one (cell, replication); never throws.
inline std::vector<ResultRow> run_cell(const ExperimentConfig& config, const ExperimentCell& cell,
                                       std::uint64_t cell_seed) {
  ResultRow base;
  base.scenario = std::string(to_string(cell.kind));
  base.p = cell.p;
  base.n = cell.n;
  base.q = latent_dimension(cell.kind);
  base.nu = cell.nu;
  base.df1 = cell.df1;
  base.df2 = cell.df2;
  base.link = std::string(to_string(cell.link));
  base.seed = cell_seed;

  std::vector<ResultRow> rows;
  std::optional<GroundTruth> gt;
  std::optional<DataMatrix> x;
  std::string setup_error;
  try {
    ScenarioSpec spec{cell.kind, cell.p, cell.n, cell.nu, cell.df1, cell.df2, cell.link, derive_seed(cell_seed, {1})};
    gt = make_ground_truth(spec);
    // n + 1 observations so the centred data has rank n
    x = sample_dataset(*gt, cell.n + 1, cell.df1, cell.link, derive_seed(cell_seed, {2}));
  } catch (const std::exception& e) {
    setup_error = e.what();
  }

  for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
    const MethodSpec& spec = config.methods[mi];
    ResultRow row = base;
    row.method = std::string(to_string(spec.kind));
    row.method_param = static_label(spec, cell.p);
    if (!setup_error.empty()) {
      row.error = sanitize_csv(setup_error);
      rows.push_back(std::move(row));
      continue;
    }
    const auto start = std::chrono::steady_clock::now();
    try {
      const CovEstimate est = run_method(spec, *x, base.q, derive_seed(cell_seed, {3, mi}), row.method_param);
      row.rho_cov = offdiag_correlation(gt->sigma, est.matrix);
      const ScaleFit fit = best_kappa_frobenius(gt->sigma, est.matrix);
      row.kappa_frob = fit.kappa;
      row.resid_frob = fit.residual;
      if (config.graph_inversion) {
        const CigResult cig = cig_estimate(est.matrix, config.lambda, CombineRule::And);
        row.rho_prec = offdiag_correlation(gt->omega, cig.precision_proxy);
      }
    } catch (const std::exception& e) {
      row.error = sanitize_csv(e.what());
    }
    if (config.record_runtime) {
      row.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace detail

/// Runs every (cell, replication) on `threads` workers. Rows come back ordered by
/// (cell, replication, method) whatever the schedule.
inline std::vector<ResultRow> run_experiment_rows(const ExperimentConfig& config, Index threads) {
  const auto cells = expand_cells(config);
  const std::size_t reps = static_cast<std::size_t>(config.replications);
  const std::size_t tasks = cells.size() * reps;
  std::vector<std::vector<ResultRow>> slots(tasks);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next++; t < tasks; t = next++) {
      const std::size_t cell = t / reps;
      const std::size_t rep = t % reps;
      slots[t] = detail::run_cell(config, cells[cell], derive_seed(config.base_seed, {cell, rep}));
    }
  };
  const auto workers = static_cast<std::size_t>(std::max<Index>(1, threads));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < std::min(workers, std::max<std::size_t>(tasks, 1)); ++i) pool.emplace_back(worker);
  }

  std::vector<ResultRow> rows;
  rows.reserve(tasks * config.methods.size());
  for (auto& slot : slots)
    for (auto& row : slot) rows.push_back(std::move(row));
  return rows;
}

inline std::string results_csv(const std::vector<ResultRow>& rows) {
  using detail::format_df;
  using detail::format_optional;
  std::string out = kResultsHeader;
  out += '\n';
  for (const auto& r : rows) {
    out += r.scenario + ',' + std::to_string(r.p) + ',' + std::to_string(r.n) + ',' + std::to_string(r.q) + ',' +
           format_double(r.nu) + ',' + format_df(r.df1) + ',' + format_df(r.df2) + ',' + r.link + ',' + r.method +
           ',' + r.method_param + ',' + std::to_string(r.seed) + ',' + format_optional(r.rho_cov) + ',' +
           format_optional(r.rho_prec) + ',' + format_optional(r.kappa_frob) + ',' + format_optional(r.resid_frob) +
           ',' + format_double(r.runtime_ms) + ',' + r.error + '\n';
  }
  return out;
}

/// Run the sweep and write the results CSV to `output_path` (falls back to the config's path).
inline void run_experiment(const ExperimentConfig& config, const std::string& output_path = {}) {
  const std::string path = output_path.empty() ? config.output_path : output_path;
  detail::require(!path.empty(), ErrorCode::ConfigInvalid, "config.output_path: no output path given");
  write_text(path, results_csv(run_experiment_rows(config, effective_parallelism(config))));
}

}  // namespace confcov
