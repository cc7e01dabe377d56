// Experiment orchestration: build problem/consensus/schedule from a RunConfig,
// run trial ensembles on a worker pool (DZO_THREADS caps it), persist traces
// and aggregates, and drive the kernel-vs-two-point comparison at equal query
// budget. Trials are deterministic functions of (config, base_seed, trial
// index); files are written by a single collector in trial order, so outputs
// are byte-identical across reruns and thread counts.

#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "dzo/config.hpp"
#include "dzo/consensus.hpp"
#include "dzo/csv.hpp"
#include "dzo/engine.hpp"
#include "dzo/kernel.hpp"
#include "dzo/metrics.hpp"
#include "dzo/problems.hpp"
#include "dzo/topology.hpp"

namespace dzo {

namespace seed_tag {
// Fixed purpose words for key derivation; never reused across purposes.
inline constexpr std::uint64_t trial = 0x7261A15EULL;
inline constexpr std::uint64_t matrix = 0x3A7B1000ULL;
inline constexpr std::uint64_t shifts = 0x5817F75EULL;
inline constexpr std::uint64_t init = 0x1417C0DEULL;
}  // namespace seed_tag

inline int worker_count() {
  if (const char* env = std::getenv("DZO_THREADS")) {
    const int k = std::atoi(env);
    if (k >= 1) return k;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc ? static_cast<int>(hc) : 1;
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

struct PreparedRun {
  ProblemInstance problem;
  ConsensusMatrix cm;
  EstimatorSpec est;
  Schedule sched;
  long T0 = 0;
  long qpc = 0;
  long budget_T = 0;  // nominal per-agent budget (0 when configured via T0)
  double lambda_min = 1.0, lambda_max = 1.0;  // spectrum of the quadratic matrix
  std::vector<long> record_at;  // empty = every t
  std::vector<long> checkpoints;
};

inline FeasibleSet build_feasible(const FeasibleSpec& spec, int d) {
  if (spec.kind == "ball") return FeasibleSet::ball(d, spec.radius);
  if (spec.kind == "ball_cap_nonpositive") return FeasibleSet::ball_cap_nonpositive(d, spec.radius);
  if (spec.kind == "box") {
    Eigen::VectorXd lo = Eigen::Map<const Eigen::VectorXd>(spec.lo.data(), spec.lo.size());
    Eigen::VectorXd hi = Eigen::Map<const Eigen::VectorXd>(spec.hi.data(), spec.hi.size());
    if (lo.size() != d) throw std::invalid_argument("feasible box: dimension mismatch");
    return FeasibleSet::box(lo, hi);
  }
  throw std::invalid_argument("unknown feasible-set kind: " + spec.kind);
}

inline ConsensusMatrix build_consensus(const RunConfig& cfg) {
  if (cfg.topology.kind == "complete_mixing") return complete_mixing(cfg.n);
  const Graph g =
      make_graph(graph_kind_from_string(cfg.topology.kind), cfg.n, cfg.topology.p, cfg.topology.seed);
  return metropolis_weights(g, cfg.gamma);
}

inline ProblemInstance build_problem(const RunConfig& cfg, double* lambda_min_out = nullptr,
                                     double* lambda_max_out = nullptr) {
  Eigen::MatrixXd A;
  if (cfg.problem.matrix == "identity") {
    A = Eigen::MatrixXd::Identity(cfg.d, cfg.d);
  } else if (cfg.problem.matrix == "sparse_pd") {
    A = random_sparse_pd(cfg.d, cfg.problem.density,
                         RngStream(cfg.base_seed).fork(seed_tag::matrix).key());
  } else {
    throw std::invalid_argument("unknown problem matrix kind: " + cfg.problem.matrix);
  }
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A, Eigen::EigenvaluesOnly);
    if (lambda_min_out) *lambda_min_out = eig.eigenvalues().minCoeff();
    if (lambda_max_out) *lambda_max_out = eig.eigenvalues().maxCoeff();
  }

  std::vector<Objective> locals;
  locals.reserve(cfg.n);
  if (cfg.problem.kind == "quadratic") {
    RngStream shift_stream = RngStream(cfg.base_seed).fork(seed_tag::shifts);
    for (int i = 0; i < cfg.n; ++i) {
      Eigen::VectorXd shift;
      if (cfg.problem.shift_radius > 0.0) {
        RngStream s = shift_stream.fork(static_cast<std::uint64_t>(i));
        Eigen::VectorXd dir = s.gaussian_vector(cfg.d);
        const double norm = dir.norm();
        shift = norm > 0 ? Eigen::VectorXd(cfg.problem.shift_radius * dir / norm)
                         : Eigen::VectorXd::Zero(cfg.d);
      }
      locals.push_back(quadratic_objective(A, cfg.alpha, shift));
    }
  } else if (cfg.problem.kind == "appendix_e") {
    for (int i = 0; i < cfg.n; ++i)
      locals.push_back(appendix_e_objective(cfg.alpha, cfg.problem.L(), cfg.problem.h,
                                            cfg.problem.a, A));
  } else {
    throw std::invalid_argument("unknown problem kind: " + cfg.problem.kind);
  }
  return make_problem(std::move(locals), cfg.alpha, build_feasible(cfg.feasible, cfg.d));
}

inline EstimatorSpec build_estimator(const RunConfig& cfg) {
  if (cfg.estimator == "kernel_2d") return EstimatorSpec::kernel_2d(legendre_kernel(cfg.beta));
  if (cfg.estimator == "two_point") return EstimatorSpec::two_point();
  if (cfg.estimator == "oracle") return EstimatorSpec::oracle();
  throw std::invalid_argument("unknown estimator: " + cfg.estimator);
}

inline Schedule build_schedule(const RunConfig& cfg, const ProblemInstance& p) {
  if (cfg.schedule == "theorem1") return Schedule::theorem1(cfg.alpha, cfg.beta);
  if (cfg.schedule == "corollary_local") return Schedule::corollary_local(cfg.alpha, cfg.beta);
  if (cfg.schedule == "theorem2_beta2")
    return Schedule::theorem2_beta2(cfg.alpha, p.max_holder_L(), cfg.noise.sigma_bound(), cfg.d);
  throw std::invalid_argument("unknown schedule: " + cfg.schedule);
}

inline std::vector<long> log_spaced_iterations(long t_lo, long t_hi, int per_decade) {
  std::vector<long> out;
  const double factor = std::pow(10.0, 1.0 / per_decade);
  double next = static_cast<double>(t_lo);
  long prev = 0;
  while (next <= static_cast<double>(t_hi) + 0.5) {
    const long t = std::max<long>(t_lo, static_cast<long>(std::llround(next)));
    if (t > t_hi) break;
    if (t != prev) out.push_back(t);
    prev = t;
    next *= factor;
  }
  if (out.empty() || out.back() != t_hi) out.push_back(t_hi);
  return out;
}

inline PreparedRun prepare(const RunConfig& cfg) {
  cfg.validate();
  PreparedRun prep;
  prep.problem = build_problem(cfg, &prep.lambda_min, &prep.lambda_max);
  prep.cm = build_consensus(cfg);
  prep.est = build_estimator(cfg);
  prep.sched = build_schedule(cfg, prep.problem);
  if (cfg.T0 > 0) {
    prep.T0 = cfg.T0;
  } else {
    prep.T0 = budget_to_iterations(cfg.T, prep.est, cfg.d);
    prep.budget_T = cfg.T;
  }
  if (prep.T0 < 2) throw std::invalid_argument("budget too small: T0 < 2");
  prep.qpc = prep.est.queries_per_call(cfg.d);
  if (cfg.record.mode == "log")
    prep.record_at = log_spaced_iterations(1, prep.T0, cfg.record.per_decade);
  else if (cfg.record.mode != "all")
    throw std::invalid_argument("unknown record mode: " + cfg.record.mode);
  for (long c : cfg.checkpoints)
    if (c >= 1 && c <= prep.T0) prep.checkpoints.push_back(c);
  if (!solve_reference_minimizer(prep.problem))
    throw std::runtime_error("reference minimizer did not converge");
  return prep;
}

inline RunTrace run_single_trial(const RunConfig& cfg, const PreparedRun& prep, int trial) {
  const std::uint64_t trial_seed =
      RngStream(cfg.base_seed).fork(seed_tag::trial, static_cast<std::uint64_t>(trial)).key();
  RunOptions opts;
  opts.T0 = prep.T0;
  opts.seed = trial_seed;
  opts.record_at = prep.record_at;
  opts.checkpoints = prep.checkpoints;
  if (cfg.init.kind == "proj_gaussian") {
    RngStream s = RngStream(trial_seed).fork(seed_tag::init);
    opts.x_init = cfg.init.scale * s.gaussian_vector(cfg.d);
  } else if (cfg.init.kind != "proj_zero") {
    throw std::invalid_argument("unknown init kind: " + cfg.init.kind);
  }
  return run(prep.problem, prep.cm, prep.est, prep.sched, cfg.noise, opts);
}

inline TrialEnsemble run_trials(const RunConfig& cfg, const PreparedRun& prep) {
  std::vector<RunTrace> results(cfg.trials);
  std::atomic<int> next{0};
  auto work = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= cfg.trials) return;
      results[static_cast<std::size_t>(i)] = run_single_trial(cfg, prep, i);
    }
  };
  const int workers = std::min(worker_count(), cfg.trials);
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  TrialEnsemble ensemble;
  for (auto& trace : results) ensemble.add(std::move(trace));
  return ensemble;
}

// --- persistence ---

inline void write_trace_csv(const RunTrace& trace, std::ostream& out) {
  out << "t,queries,f_xbar_minus_fstar,discrepancy,dist_xbar_xstar\n";
  for (const auto& r : trace.records) {
    out << r.t << "," << r.queries_per_agent << "," << format_double(r.f_error) << ","
        << format_double(r.discrepancy) << "," << format_double(r.dist_to_xstar) << "\n";
  }
}

inline void write_series_csv(const SeriesStats& s, std::ostream& out) {
  out << "t,mean,std,n_trials\n";
  for (std::size_t r = 0; r < s.t.size(); ++r)
    out << s.t[r] << "," << format_double(s.mean[r]) << "," << format_double(s.stddev[r]) << ","
        << s.n_trials << "\n";
}

inline SeriesStats read_series_csv(std::istream& in) {
  SeriesStats s;
  std::string line;
  if (!std::getline(in, line)) throw IoError("series csv: empty file");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() < 4) throw IoError("series csv: bad row: " + line);
    s.t.push_back(std::stol(cells[0]));
    s.mean.push_back(std::stod(cells[1]));
    s.stddev.push_back(std::stod(cells[2]));
    s.n_trials = std::stoi(cells[3]);
  }
  return s;
}

struct FinalErrorStats {
  double xbar_mean = 0, xbar_std = 0;
  double xhat_mean = 0, xhat_std = 0;
  double xtilde_mean = 0, xtilde_std = 0;
  double xhat_local0_mean = 0, xhat_local0_std = 0;
};

namespace detail {
struct MeanStd {
  double mean = 0, m2 = 0;
  long k = 0;
  void add(double v) {
    ++k;
    const double d = v - mean;
    mean += d / static_cast<double>(k);
    m2 += d * (v - mean);
  }
  double stddev() const { return k > 1 ? std::sqrt(m2 / static_cast<double>(k - 1)) : 0.0; }
};
}  // namespace detail

inline FinalErrorStats final_error_stats(const TrialEnsemble& ensemble, const ProblemInstance& p) {
  detail::MeanStd xbar, xhat, xtilde, local0;
  for (const RunTrace& t : ensemble.traces) {
    xbar.add(optimization_error(t.final_est.xbar, p));
    xhat.add(optimization_error(t.final_est.xhat, p));
    xtilde.add(optimization_error(t.final_est.xtilde, p));
    local0.add(optimization_error(t.final_est.xhat_local.at(0), p));
  }
  return {xbar.mean, xbar.stddev(), xhat.mean, xhat.stddev(),
          xtilde.mean, xtilde.stddev(), local0.mean, local0.stddev()};
}

// Mean/std across trials of f(estimator) - f* at every checkpoint.
struct CheckpointErrorRow {
  long t = 0;
  double xbar_mean = 0, xbar_std = 0;
  double xhat_mean = 0, xhat_std = 0;
  double xtilde_mean = 0, xtilde_std = 0;
};

inline std::vector<CheckpointErrorRow> checkpoint_errors(const TrialEnsemble& ensemble,
                                                         const ProblemInstance& p) {
  if (ensemble.traces.empty()) return {};
  const std::size_t n_cp = ensemble.traces.front().checkpoints.size();
  std::vector<CheckpointErrorRow> rows(n_cp);
  for (std::size_t c = 0; c < n_cp; ++c) {
    detail::MeanStd xbar, xhat, xtilde;
    rows[c].t = ensemble.traces.front().checkpoints[c].t;
    for (const RunTrace& tr : ensemble.traces) {
      const EstimatorSnapshot& snap = tr.checkpoints.at(c);
      if (snap.t != rows[c].t) throw std::invalid_argument("checkpoint grids differ across trials");
      xbar.add(optimization_error(snap.est.xbar, p));
      xhat.add(optimization_error(snap.est.xhat, p));
      xtilde.add(optimization_error(snap.est.xtilde, p));
    }
    rows[c].xbar_mean = xbar.mean;
    rows[c].xbar_std = xbar.stddev();
    rows[c].xhat_mean = xhat.mean;
    rows[c].xhat_std = xhat.stddev();
    rows[c].xtilde_mean = xtilde.mean;
    rows[c].xtilde_std = xtilde.stddev();
  }
  return rows;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);  // LF line endings everywhere
  if (!out) throw IoError("cannot open for writing: " + path.string());
  return out;
}

struct EnsembleRunResult {
  PreparedRun prep;
  TrialEnsemble ensemble;
  FinalErrorStats final_errors;
};

inline nlohmann::json ensemble_summary_json(const RunConfig& cfg, const EnsembleRunResult& r) {
  const auto& prep = r.prep;
  nlohmann::json cps = nlohmann::json::array();
  for (const auto& row : checkpoint_errors(r.ensemble, prep.problem))
    cps.push_back({{"t", row.t},
                   {"xbar_err_mean", row.xbar_mean},
                   {"xbar_err_std", row.xbar_std},
                   {"xhat_err_mean", row.xhat_mean},
                   {"xhat_err_std", row.xhat_std},
                   {"xtilde_err_mean", row.xtilde_mean},
                   {"xtilde_err_std", row.xtilde_std}});
  return {{"config_hash", fnv1a(cfg.to_json().dump())},
          {"T0", prep.T0},
          {"queries_per_call", prep.qpc},
          {"budget_T", prep.budget_T},
          {"rho", prep.cm.rho},
          {"lambda_min", prep.lambda_min},
          {"lambda_max", prep.lambda_max},
          {"f_star", prep.problem.f_star ? *prep.problem.f_star : 0.0},
          {"minimizer_residual", reference_minimizer_residual(prep.problem)},
          {"final_errors",
           {{"xbar_mean", r.final_errors.xbar_mean},
            {"xbar_std", r.final_errors.xbar_std},
            {"xhat_mean", r.final_errors.xhat_mean},
            {"xhat_std", r.final_errors.xhat_std},
            {"xtilde_mean", r.final_errors.xtilde_mean},
            {"xtilde_std", r.final_errors.xtilde_std},
            {"xhat_local0_mean", r.final_errors.xhat_local0_mean},
            {"xhat_local0_std", r.final_errors.xhat_local0_std}}},
          {"checkpoints", cps}};
}

inline void write_ensemble_outputs(const RunConfig& cfg, const EnsembleRunResult& r,
                                   const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    auto out = open_output(dir / "config.json");
    out << cfg.to_json().dump(2) << "\n";
  }
  for (std::size_t k = 0; k < r.ensemble.traces.size(); ++k) {
    auto out = open_output(dir / ("trial_" + std::to_string(k) + ".csv"));
    write_trace_csv(r.ensemble.traces[k], out);
  }
  const std::pair<TraceMetric, const char*> metrics[] = {
      {TraceMetric::f_error, "agg_f_xbar_minus_fstar.csv"},
      {TraceMetric::discrepancy, "agg_discrepancy.csv"},
      {TraceMetric::dist_to_xstar, "agg_dist_xbar_xstar.csv"}};
  for (const auto& [metric, name] : metrics) {
    auto out = open_output(dir / name);
    write_series_csv(r.ensemble.aggregate(metric), out);
  }
  {
    auto out = open_output(dir / "summary.json");
    out << ensemble_summary_json(cfg, r).dump(2) << "\n";
  }
}

inline EnsembleRunResult run_ensemble(const RunConfig& cfg, bool write_files = true) {
  EnsembleRunResult r;
  r.prep = prepare(cfg);
  r.ensemble = run_trials(cfg, r.prep);
  r.final_errors = final_error_stats(r.ensemble, r.prep.problem);
  if (write_files) write_ensemble_outputs(cfg, r, cfg.output);
  return r;
}

// --- kernel_2d vs two_point comparison at equal per-agent query budget ---

struct CompareResult {
  RunConfig kernel_cfg, twopoint_cfg;
  std::vector<long> queries;  // shared grid
  SeriesStats kernel_err, twopoint_err;
  double kernel_final_mean = 0, kernel_final_std = 0;
  double twopoint_final_mean = 0, twopoint_final_std = 0;
  double lambda_min = 1.0;
  long budget_T = 0;
};

inline RunConfig appendix_e_base_config(int d, int trials, long T, std::uint64_t seed) {
  RunConfig cfg;
  cfg.n = 1;
  cfg.d = d;
  cfg.alpha = 2.0;
  cfg.beta = 3.0;
  cfg.problem.kind = "appendix_e";
  cfg.problem.matrix = "sparse_pd";
  cfg.problem.density = 0.1;
  cfg.problem.L_log10 = 7.5;
  cfg.problem.h = 1e-3;
  cfg.problem.a = 10.0;
  cfg.feasible.kind = "ball_cap_nonpositive";
  cfg.feasible.radius = 1.0;
  cfg.topology.kind = "complete_mixing";
  cfg.estimator = "kernel_2d";
  cfg.schedule = "theorem1";
  cfg.noise = NoiseModel::uniform(-5.0, 5.0);
  cfg.T = T;
  cfg.trials = trials;
  cfg.base_seed = seed;
  cfg.init.kind = "proj_gaussian";
  cfg.init.scale = 1.0;
  cfg.record.mode = "log";
  return cfg;
}

// Runs both estimators on one problem instance at the same nominal budget T,
// recording optimization error on a shared query grid.
inline CompareResult compare_estimators(const RunConfig& base, int per_decade = 24) {
  if (base.T <= 0) throw std::invalid_argument("compare: budget must be given as T");
  CompareResult res;
  res.budget_T = base.T;

  res.kernel_cfg = base;
  res.kernel_cfg.estimator = "kernel_2d";
  res.kernel_cfg.schedule = "theorem1";
  res.twopoint_cfg = base;
  res.twopoint_cfg.estimator = "two_point";
  res.twopoint_cfg.schedule = "theorem2_beta2";
  res.twopoint_cfg.beta = 2.0;  // two-point analysis order

  PreparedRun prep_k = prepare(res.kernel_cfg);
  PreparedRun prep_t = prepare(res.twopoint_cfg);
  if (prep_k.budget_T != prep_t.budget_T)
    throw std::logic_error("compare: methods were charged different budgets");
  res.lambda_min = prep_k.lambda_min;

  // Shared query grid derived from the kernel method's iteration grid; the
  // two-point row at the same query count is t = q/2 + 1.
  const std::vector<long> t_kernel = log_spaced_iterations(2, prep_k.T0, per_decade);
  std::vector<long> t_twopoint;
  res.queries.reserve(t_kernel.size());
  for (long t : t_kernel) {
    const long q = (t - 1) * prep_k.qpc;
    res.queries.push_back(q);
    t_twopoint.push_back(q / 2 + 1);
  }
  prep_k.record_at = t_kernel;
  prep_t.record_at = t_twopoint;

  TrialEnsemble ens_k = run_trials(res.kernel_cfg, prep_k);
  TrialEnsemble ens_t = run_trials(res.twopoint_cfg, prep_t);
  for (const RunTrace& tr : ens_k.traces)
    if ((tr.T0 - 1) * tr.queries_per_call > res.budget_T)
      throw std::logic_error("compare: kernel method exceeded the budget");
  for (const RunTrace& tr : ens_t.traces)
    if ((tr.T0 - 1) * tr.queries_per_call > res.budget_T)
      throw std::logic_error("compare: two-point method exceeded the budget");

  res.kernel_err = ens_k.aggregate(TraceMetric::f_error);
  res.twopoint_err = ens_t.aggregate(TraceMetric::f_error);
  res.kernel_final_mean = res.kernel_err.mean.back();
  res.kernel_final_std = res.kernel_err.stddev.back();
  res.twopoint_final_mean = res.twopoint_err.mean.back();
  res.twopoint_final_std = res.twopoint_err.stddev.back();
  return res;
}

inline void write_compare_outputs(const CompareResult& res, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    auto out = open_output(dir / "compare.csv");
    out << "queries,kernel2d_mean,kernel2d_std,two_point_mean,two_point_std,n_trials\n";
    for (std::size_t i = 0; i < res.queries.size(); ++i)
      out << res.queries[i] << "," << format_double(res.kernel_err.mean[i]) << ","
          << format_double(res.kernel_err.stddev[i]) << ","
          << format_double(res.twopoint_err.mean[i]) << ","
          << format_double(res.twopoint_err.stddev[i]) << "," << res.kernel_err.n_trials << "\n";
  }
  {
    auto out = open_output(dir / "compare_summary.json");
    out << nlohmann::json{{"budget_T", res.budget_T},
                          {"d", res.kernel_cfg.d},
                          {"trials", res.kernel_cfg.trials},
                          {"lambda_min", res.lambda_min},
                          {"kernel2d_final_mean", res.kernel_final_mean},
                          {"kernel2d_final_std", res.kernel_final_std},
                          {"two_point_final_mean", res.twopoint_final_mean},
                          {"two_point_final_std", res.twopoint_final_std},
                          {"ratio_two_point_over_kernel",
                           res.twopoint_final_mean / res.kernel_final_mean},
                          {"kernel_config", res.kernel_cfg.to_json()},
                          {"two_point_config", res.twopoint_cfg.to_json()}}
               .dump(2)
        << "\n";
  }
}

}  // namespace dzo
