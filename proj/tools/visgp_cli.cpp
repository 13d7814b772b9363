// Copyright 2026 The visgp Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end: graph, fit, predict, simulate, covsel-check.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "json.hpp"
#include "visgp/covsel.hpp"
#include "visgp/error.hpp"
#include "visgp/estimate.hpp"
#include "visgp/io.hpp"
#include "visgp/log.hpp"
#include "visgp/predict.hpp"
#include "visgp/simulate.hpp"
#include "visgp/visgraph.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace visgp;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitGeometry = 3;
constexpr int kExitNoConvergence = 4;
constexpr int kExitOther = 1;

// Raised when input points fall outside the domain.
struct OutsideDomain : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Loaded {
  PolygonDomain domain;
  io::Observations obs;
  VisibilityGraph graph;
};

void require(const std::string& value, const char* what) {
  if (value.empty()) throw Error(ErrorCode::InvalidInput, std::string("missing ") + what);
}

void check_inside(std::span<const Point2> pts, const PolygonDomain& dom, const char* what) {
  std::ostringstream bad;
  int count = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (point_in_domain(pts[i], dom)) continue;
    if (count < 20) bad << (count ? "; " : "") << "#" << i << " (" << pts[i].x << ", " << pts[i].y << ")";
    ++count;
  }
  if (count > 0) {
    throw OutsideDomain(std::to_string(count) + " " + what + " outside the domain: " + bad.str() +
                        (count > 20 ? "; ..." : ""));
  }
}

// Builds the visibility graph, reusing the on-disk adjacency when its content
// hash matches.
Loaded load_graph(const io::RunConfig& cfg) {
  require(cfg.domain_path, "--domain");
  require(cfg.data_path, "--data");
  const std::string domain_bytes = io::read_file(cfg.domain_path);
  Loaded l{io::load_domain(cfg.domain_path), io::load_observations(cfg.data_path), {}};
  check_inside(l.obs.points, l.domain, "observations");

  const std::uint64_t hash = adjacency_content_hash(l.obs.points, domain_bytes, cfg.d_max);
  char name[40];
  std::snprintf(name, sizeof name, "adjacency-%016llx.bin", static_cast<unsigned long long>(hash));
  const fs::path cache = fs::path(cfg.cache_dir) / name;
  log::StageTimer timer("neighbor_finding");
  if (auto adj = load_adjacency_cache(cache, hash)) {
    log::info("cache hit", "path=" + cache.string());
    l.graph = VisibilityGraph{l.obs.points, std::move(*adj), cfg.d_max};
    return l;
  }
  log::info("cache miss", "path=" + cache.string());
  l.graph = build_visibility_graph(l.obs.points, l.domain, cfg.d_max);
  fs::create_directories(cfg.cache_dir);
  save_adjacency_cache(cache, l.graph, hash);
  return l;
}

RegressionData regression_data(const Loaded& l) {
  RegressionData d;
  d.y = l.obs.y;
  d.X = l.obs.X;
  d.points = l.obs.points;
  d.decomp = decompose(l.graph.adjacency);
  return d;
}

int cmd_graph(const io::RunConfig& cfg, const fs::path& out_dir) {
  const Loaded l = load_graph(cfg);
  const ChordalDecomposition d = decompose(l.graph.adjacency);
  const CompletionReport rep = completion_diagnostics(d, l.graph, l.domain);
  const std::size_t n = l.graph.points.size();
  const std::size_t edges = l.graph.adjacency.edge_count();
  const double pairs = n > 1 ? 0.5 * static_cast<double>(n) * static_cast<double>(n - 1) : 1.0;

  std::size_t largest = 0;
  for (const auto& c : d.cliques) largest = std::max(largest, c.size());
  json report{{"vertices", n},
              {"edges", edges},
              {"complete", static_cast<double>(edges) == pairs},
              {"added_edges", rep.added},
              {"added_ratio", edges ? static_cast<double>(rep.added) / static_cast<double>(edges) : 0.0},
              {"distorting_edges", rep.distorting},
              {"ratio_histogram", rep.histogram},
              {"cliques", d.cliques.size()},
              {"largest_clique", largest}};
  io::write_file(out_dir / "decomposition.json", decomposition_to_json(d).dump() + "\n");
  io::write_file(out_dir / "graph_report.json", report.dump(2) + "\n");
  std::cout << "vertices=" << n << " edges=" << edges << " complete=" << (report["complete"].get<bool>() ? 1 : 0)
            << " added_edges=" << rep.added << " added_ratio=" << report["added_ratio"].get<double>()
            << " distorting=" << rep.distorting << " cliques=" << d.cliques.size() << " largest_clique=" << largest
            << "\n";
  std::cout << "geodesic/euclidean ratio histogram [1,1.1) [1.1,1.25) [1.25,1.5) [1.5,2) [2,inf):";
  for (auto h : rep.histogram) std::cout << ' ' << h;
  std::cout << "\n";
  return kExitOk;
}

int cmd_fit(const io::RunConfig& cfg, const fs::path& out_dir) {
  const Loaded l = load_graph(cfg);
  const RegressionData data = regression_data(l);
  const LikelihoodOptions lopts = cfg.likelihood();
  const ParamVector init = initial_params(data, l.domain.diameter());
  io::FitRecord rec;
  rec.model = lopts.model;
  rec.covariates = l.obs.covariates;
  {
    log::StageTimer timer("model_fitting");
    if (cfg.fit_method == "sgd") {
      rec.fit = fit_sgd(data, init, cfg.sgd, lopts);
    } else {
      rec.fit = fit_full(data, init, lopts, FullFitOptions{cfg.gtol, cfg.max_iter});
    }
  }
  io::write_file(out_dir / "fit.json", io::fit_to_json(rec).dump(2) + "\n");
  io::write_file(out_dir / "fit_trace.csv", io::trace_csv(rec.fit.trace));
  const auto& p = rec.fit.params;
  std::cout << "method=" << to_string(rec.fit.method) << " converged=" << (rec.fit.converged ? 1 : 0)
            << " loglik=" << rec.fit.loglik << " sigma2=" << p.sigma2 << " phi=" << p.phi << " tau2=" << p.tau2
            << "\n";
  if (!rec.fit.converged) {
    std::cerr << "fit did not converge (grad_norm=" << rec.fit.grad_norm << "); artifacts written\n";
    return kExitNoConvergence;
  }
  return kExitOk;
}

int cmd_predict(const io::RunConfig& cfg, const fs::path& fit_path, const fs::path& sites_path, const fs::path& output,
                bool prior_fallback) {
  require(sites_path.string(), "--sites");
  const Loaded l = load_graph(cfg);
  const io::FitRecord rec = io::fit_from_json(json::parse(io::read_file(fit_path)));
  if (rec.covariates != l.obs.covariates) throw Error(ErrorCode::InvalidInput, "data covariates differ from the fit");
  const io::Sites sites = io::load_sites(sites_path, rec.covariates);
  check_inside(sites.points, l.domain, "prediction sites");

  PredictOptions popts;
  popts.strategy = parse_strategy(cfg.strategy);
  popts.k = cfg.k;
  popts.level = cfg.level;
  popts.prior_fallback = prior_fallback;
  std::vector<Prediction> preds;
  {
    log::StageTimer timer("prediction");
    preds = predict_sites(sites.points, sites.X, l.graph, &l.domain, DataView{l.obs.y, l.obs.X, l.obs.points},
                          rec.fit.params, rec.model, popts);
  }
  io::write_file(output, io::predictions_csv(sites.points, preds));
  const auto missing = std::count_if(preds.begin(), preds.end(),
                                     [](const Prediction& p) { return p.status == PredictStatus::NoNeighbors; });
  std::cout << "sites=" << preds.size() << " no_neighbors=" << missing << " output=" << output.string() << "\n";
  return kExitOk;
}

struct SimArgs {
  std::string scenario = "fork";
  int n = 250;
  double nugget_sd = 0.1;
  std::string holdout = "checkerboard";
  double fraction = 0.2;
  int replicates = 20;
  int pool_size = 20000;
  std::vector<std::string> methods = {"visGP-NC", "visGP-MP", "visGP-PW", "EuclideanGP"};
};

int cmd_simulate(const io::RunConfig& cfg, const SimArgs& a, const fs::path& output) {
  SimScenario sc;
  sc.domain = parse_scenario_domain(a.scenario);
  if (sc.domain == ScenarioDomain::Custom) {
    require(cfg.domain_path, "--domain for a custom scenario");
    sc.custom = io::load_domain(cfg.domain_path);
  }
  sc.n = a.n;
  sc.nugget_sd = a.nugget_sd;
  if (a.holdout == "checkerboard") {
    sc.holdout.kind = HoldoutKind::Checkerboard;
  } else if (a.holdout == "random") {
    sc.holdout.kind = HoldoutKind::RandomFraction;
    sc.holdout.fraction = a.fraction;
  } else {
    throw Error(ErrorCode::InvalidInput, "holdout must be 'checkerboard' or 'random'");
  }
  sc.replicates = a.replicates;
  sc.seed = cfg.seed;
  sc.pool_size = a.pool_size;
  sc.k = cfg.k;
  sc.fit = cfg.fit_method == "sgd" ? FitMethod::GraphSGD : FitMethod::FullMLE;
  sc.sgd = cfg.sgd;
  sc.model = cfg.model();
  std::vector<SimMethod> methods;
  for (const auto& m : a.methods) methods.push_back(parse_sim_method(m));

  const SimReport report = run_scenario(sc, methods);
  io::write_file(output, io::sim_report_csv(report));
  fs::path reps = output;
  reps.replace_extension(".replicates.csv");
  io::write_file(reps, io::sim_replicates_csv(report));
  std::cout << io::sim_report_csv(report);
  int failures = 0;
  for (const auto& r : report.rows) failures += r.failures;
  if (failures > 0) std::cerr << failures << " method-replicate runs failed; see " << reps.string() << "\n";
  return kExitOk;
}

struct CheckArgs {
  int n = 12;
  std::string graph = "random";
  double edge_prob = 0.3;
  double tol = 1e-8;
  std::string matrix_out;
};

int cmd_covsel_check(const io::RunConfig& cfg, const CheckArgs& a) {
  if (a.n < 2 || a.n > 200) throw Error(ErrorCode::InvalidInput, "covsel-check needs 2 <= n <= 200");
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Point2> pts(static_cast<std::size_t>(a.n));
  for (auto& p : pts) p = {u(rng), u(rng)};
  const CovarianceModel model{CovFamily::Matern, 1.0, 3.0, 1.5, 0.01};
  const Eigen::MatrixXd K = cov_matrix(pts, model, true);

  BitMatrix adj(a.n);
  if (a.graph == "complete") {
    adj = complete_graph(pts).adjacency;
  } else if (a.graph == "cycle") {
    for (int i = 0; i < a.n; ++i) adj.set_symmetric(i, (i + 1) % a.n);
  } else if (a.graph == "random" || a.graph == "chordal") {
    std::bernoulli_distribution edge(a.edge_prob);
    for (int i = 0; i < a.n; ++i) {
      for (int j = 0; j < i; ++j) {
        if (edge(rng)) adj.set_symmetric(i, j);
      }
    }
    if (a.graph == "chordal") adj = chordal_completion(adj).adjacency;
  } else {
    throw Error(ErrorCode::InvalidInput, "graph must be complete, cycle, random or chordal");
  }

  const CovSelResult ips = covsel_ips(K, adj, IpsOptions{a.tol * 1e-2, 2000});
  const double entry = constrained_residual(ips.L, K, adj);
  const double zeros = off_graph_precision(ips.L, adj);
  const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(ips.L).eigenvalues().minCoeff();
  bool ok = entry < a.tol && zeros < a.tol && min_eig > 0;
  std::cout << "n=" << a.n << " graph=" << a.graph << " edges=" << adj.edge_count() << " ips_sweeps=" << ips.ips_iterations
            << "\nentry_residual=" << entry << "\noff_graph_precision=" << zeros << "\nmin_eigenvalue=" << min_eig
            << "\n";
  if (is_chordal(adj)) {
    const CovSelResult closed = covsel_chordal(K, perfect_ordering(adj));
    const double agree = (closed.L - ips.L).cwiseAbs().maxCoeff();
    std::cout << "closed_form_agreement=" << agree << "\n";
    ok = ok && agree < a.tol;
  }
  if (!a.matrix_out.empty()) {
    io::write_file(a.matrix_out + ".csv", io::matrix_csv(ips.L));
    io::write_matrix_binary(a.matrix_out + ".bin", ips.L);
  }
  std::cout << (ok ? "PASS" : "FAIL") << "\n";
  return ok ? kExitOk : kExitOther;
}

// Finds --config ahead of the main parse so file values become defaults that
// explicit flags then override.
io::RunConfig prescan_config(int argc, char** argv) {
  io::RunConfig cfg;
  for (int i = 1; i < argc; ++i) {
    std::string arg = argv[i];
    std::string path;
    if (arg == "--config" && i + 1 < argc) path = argv[i + 1];
    if (arg.rfind("--config=", 0) == 0) path = arg.substr(9);
    if (path.empty()) continue;
    try {
      cfg = json::parse(io::read_file(path)).get<io::RunConfig>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::InvalidInput, "config " + path + ": " + e.what());
    }
  }
  return cfg;
}

int run(int argc, char** argv) {
  io::RunConfig cfg = prescan_config(argc, argv);
  CLI::App app{"Visibility-graph Gaussian process kriging on polygon domains"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path, log_level = "info", out_dir = ".";
  int workers = 0;
  double d_max = 0.0;

  app.add_option("--config", config_path, "JSON config; flags override its values");
  app.add_option("--log-level", log_level, "debug, info, warn, error or off")->capture_default_str();
  app.add_option("--workers", workers, "Thread cap (0 = all cores)");
  app.add_option("--out-dir", out_dir, "Directory for artifacts")->capture_default_str();
  app.add_option("--domain", cfg.domain_path, "GeoJSON polygon or ring_id,x,y CSV");
  app.add_option("--data", cfg.data_path, "CSV with x,y,value[,covariate_*]");
  app.add_option("--family", cfg.family, "exponential or matern")->capture_default_str();
  app.add_option("--nu", cfg.nu, "Matern smoothness")->capture_default_str();
  app.add_option("--k", cfg.k, "Neighbor count")->capture_default_str();
  app.add_option("--d-max", d_max, "Maximum edge length (0 = none)");
  app.add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
  app.add_option("--cache-dir", cfg.cache_dir, "Adjacency cache directory")->capture_default_str();
  app.add_option("--nngp-threshold", cfg.nngp_threshold, "Blocks larger than this use NNGP")->capture_default_str();
  app.add_option("--nngp-neighbors", cfg.nngp_neighbors, "NNGP conditioning set size")->capture_default_str();

  auto* graph = app.add_subcommand("graph", "Build, complete and decompose the visibility graph");

  auto* fit = app.add_subcommand("fit", "Fit covariance parameters");
  fit->add_option("--method", cfg.fit_method, "full or sgd")->capture_default_str();
  fit->add_option("--gtol", cfg.gtol, "Gradient-norm tolerance for full fits")->capture_default_str();
  fit->add_option("--max-iter", cfg.max_iter, "Iteration cap for full fits")->capture_default_str();
  fit->add_option("--sgd-alpha", cfg.sgd.alpha, "RMSProp step size")->capture_default_str();
  fit->add_option("--sgd-decay", cfg.sgd.decay, "RMSProp decay")->capture_default_str();
  fit->add_option("--sgd-epsilon", cfg.sgd.epsilon, "RMSProp epsilon")->capture_default_str();
  fit->add_option("--sgd-epochs", cfg.sgd.epochs, "Epochs (0 = about 5000 clique steps)")->capture_default_str();
  fit->add_option("--sgd-seed", cfg.sgd.seed, "Shuffle seed")->capture_default_str();

  auto* predict = app.add_subcommand("predict", "Krige at new sites");
  std::string fit_path, sites_path, pred_out;
  bool prior_fallback = false;
  predict->add_option("--fit", fit_path, "Fit JSON (default <out-dir>/fit.json)");
  predict->add_option("--sites", sites_path, "CSV with x,y[,covariate_*]");
  predict->add_option("--strategy", cfg.strategy, "nc, mp or pw")->capture_default_str();
  predict->add_option("--level", cfg.level, "Interval level")->capture_default_str();
  predict->add_option("--output", pred_out, "Predictions CSV (default <out-dir>/predictions.csv)");
  predict->add_flag("--prior-fallback", prior_fallback, "Use the prior at sites with no visible data");

  auto* simulate = app.add_subcommand("simulate", "Run a simulation scenario");
  SimArgs sim;
  std::string sim_out;
  simulate->add_option("--scenario", sim.scenario, "fork, u, figure8 or custom")->capture_default_str();
  simulate->add_option("--n", sim.n, "Sample size")->capture_default_str();
  simulate->add_option("--nugget-sd", sim.nugget_sd, "Noise standard deviation")->capture_default_str();
  simulate->add_option("--holdout", sim.holdout, "checkerboard or random")->capture_default_str();
  simulate->add_option("--fraction", sim.fraction, "Test fraction for random holdout")->capture_default_str();
  simulate->add_option("--replicates", sim.replicates, "Replicate count")->capture_default_str();
  simulate->add_option("--pool-size", sim.pool_size, "Candidate point pool size")->capture_default_str();
  simulate->add_option("--methods", sim.methods, "Subset of visGP-NC visGP-MP visGP-PW EuclideanGP");
  simulate->add_option("--fit-method", cfg.fit_method, "full or sgd")->capture_default_str();
  simulate->add_option("--output", sim_out, "Report CSV (default <out-dir>/sim_report.csv)");

  auto* check = app.add_subcommand("covsel-check", "Verify covariance selection on a random instance");
  CheckArgs chk;
  check->add_option("--n", chk.n, "Matrix size (<= 200)")->capture_default_str();
  check->add_option("--graph", chk.graph, "complete, cycle, random or chordal")->capture_default_str();
  check->add_option("--edge-prob", chk.edge_prob, "Edge probability for random graphs")->capture_default_str();
  check->add_option("--tol", chk.tol, "Residual tolerance")->capture_default_str();
  check->add_option("--matrix-out", chk.matrix_out, "Write L as <prefix>.csv and <prefix>.bin");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  if (log_level == "debug") log::set_level(log::Level::Debug);
  else if (log_level == "info") log::set_level(log::Level::Info);
  else if (log_level == "warn") log::set_level(log::Level::Warn);
  else if (log_level == "error") log::set_level(log::Level::Error);
  else if (log_level == "off") log::set_level(log::Level::Off);
  else throw Error(ErrorCode::InvalidInput, "unknown log level '" + log_level + "'");
#ifdef _OPENMP
  if (workers > 0) omp_set_num_threads(workers);
#endif
  if (d_max > 0) cfg.d_max = d_max;
  cfg.validate();
  const fs::path out = out_dir;

  if (*graph) return cmd_graph(cfg, out);
  if (*fit) return cmd_fit(cfg, out);
  if (*predict) {
    return cmd_predict(cfg, fit_path.empty() ? out / "fit.json" : fs::path(fit_path), sites_path,
                       pred_out.empty() ? out / "predictions.csv" : fs::path(pred_out), prior_fallback);
  }
  if (*simulate) return cmd_simulate(cfg, sim, sim_out.empty() ? out / "sim_report.csv" : fs::path(sim_out));
  return cmd_covsel_check(cfg, chk);
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const OutsideDomain& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitGeometry;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.code()) {
      case ErrorCode::InvalidInput:
      case ErrorCode::InvalidGeometry:
      case ErrorCode::InvalidParam:
        return kExitInput;
      case ErrorCode::NoConvergence:
        return kExitNoConvergence;
      default:
        return kExitOther;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitOther;
  }
}
