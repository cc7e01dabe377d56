// Regret, optimization error, and log-log rate fitting over run traces.
// Expectations are approximated by trial averaging; aggregate series carry
// per-point standard deviations so acceptance thresholds can include
// standard-error slack.

#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "dzo/engine.hpp"
#include "dzo/problems.hpp"

namespace dzo {

enum class TraceMetric { f_error, discrepancy, dist_to_xstar, f_xbar };

inline double metric_value(const IterationRecord& r, TraceMetric m) {
  switch (m) {
    case TraceMetric::f_error: return r.f_error;
    case TraceMetric::discrepancy: return r.discrepancy;
    case TraceMetric::dist_to_xstar: return r.dist_to_xstar;
    case TraceMetric::f_xbar: return r.f_xbar;
  }
  return 0.0;
}

inline const char* metric_name(TraceMetric m) {
  switch (m) {
    case TraceMetric::f_error: return "f_error";
    case TraceMetric::discrepancy: return "discrepancy";
    case TraceMetric::dist_to_xstar: return "dist_xbar_xstar";
    case TraceMetric::f_xbar: return "f_xbar";
  }
  return "?";
}

struct SeriesStats {
  std::vector<long> t;
  std::vector<long> queries;
  std::vector<double> mean;
  std::vector<double> stddev;
  int n_trials = 0;
};

// Traces from identical configs run under distinct seeds.
struct TrialEnsemble {
  std::vector<RunTrace> traces;

  void add(RunTrace trace) {
    if (!traces.empty()) {
      const RunTrace& ref = traces.front();
      if (trace.T0 != ref.T0 || trace.records.size() != ref.records.size())
        throw std::invalid_argument("TrialEnsemble: trace grid mismatch");
    }
    traces.push_back(std::move(trace));
  }

  // One-pass mean/std across trials at every recorded t.
  SeriesStats aggregate(TraceMetric metric) const {
    if (traces.empty()) throw std::invalid_argument("TrialEnsemble: empty");
    const std::size_t rows = traces.front().records.size();
    SeriesStats s;
    s.n_trials = static_cast<int>(traces.size());
    s.t.resize(rows);
    s.queries.resize(rows);
    s.mean.assign(rows, 0.0);
    s.stddev.assign(rows, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      s.t[r] = traces.front().records[r].t;
      s.queries[r] = traces.front().records[r].queries_per_agent;
      double mean = 0.0, m2 = 0.0;
      long k = 0;
      for (const RunTrace& trace : traces) {
        if (trace.records[r].t != s.t[r])
          throw std::invalid_argument("TrialEnsemble: trace grid mismatch");
        const double v = metric_value(trace.records[r], metric);
        ++k;
        const double delta = v - mean;
        mean += delta / static_cast<double>(k);
        m2 += delta * (v - mean);
      }
      s.mean[r] = mean;
      s.stddev[r] = k > 1 ? std::sqrt(m2 / static_cast<double>(k - 1)) : 0.0;
    }
    return s;
  }
};

// sum_{t=1..T0} (f(xbar(t)) - f(x)) for one trial; x must be feasible.
inline double cumulative_regret(const RunTrace& trace, const ProblemInstance& p,
                                const Eigen::VectorXd& x) {
  if (!p.theta.contains(x)) throw std::invalid_argument("cumulative_regret: x not feasible");
  return trace.sum_f_xbar - static_cast<double>(trace.T0) * p.f(x);
}

// f(point) - f_star; requires a solved reference minimizer.
inline double optimization_error(const Eigen::VectorXd& point, const ProblemInstance& p) {
  if (!p.f_star) throw std::invalid_argument("optimization_error: reference minimizer not solved");
  return p.f(point) - *p.f_star;
}

struct SlopeFit {
  double slope = 0.0;
  double std_err = 0.0;
  double intercept = 0.0;
  int n = 0;
};

// Ordinary least squares on (log t, log y) over samples with t in
// [t_lo, t_hi]. Nonpositive metric values inside the window are an error
// (widen the ensemble instead of silently dropping points).
inline SlopeFit rate_slope(const std::vector<std::pair<double, double>>& samples, double t_lo,
                           double t_hi) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& [t, y] : samples) {
    if (t < t_lo || t > t_hi) continue;
    if (!(y > 0.0))
      throw std::invalid_argument("rate_slope: nonpositive metric value in window");
    pts.emplace_back(std::log(t), std::log(y));
  }
  if (pts.size() < 3) throw std::invalid_argument("rate_slope: need >= 3 points in window");
  const double n = static_cast<double>(pts.size());
  double sx = 0.0, sy = 0.0;
  for (const auto& [x, y] : pts) {
    sx += x;
    sy += y;
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : pts) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("rate_slope: degenerate window");
  SlopeFit fit;
  fit.n = static_cast<int>(pts.size());
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (const auto& [x, y] : pts) {
    const double resid = y - (fit.intercept + fit.slope * x);
    rss += resid * resid;
  }
  fit.std_err = pts.size() > 2 ? std::sqrt(rss / (n - 2.0) / sxx) : 0.0;
  return fit;
}

// Convenience: log-spaced subsample of an aggregate series for slope fits.
inline std::vector<std::pair<double, double>> log_spaced_samples(const SeriesStats& s,
                                                                 double t_lo, double t_hi,
                                                                 int per_decade = 25) {
  std::vector<std::pair<double, double>> out;
  double next = t_lo;
  const double factor = std::pow(10.0, 1.0 / per_decade);
  for (std::size_t r = 0; r < s.t.size(); ++r) {
    const double t = static_cast<double>(s.t[r]);
    if (t < t_lo || t > t_hi) continue;
    if (t + 1e-12 >= next) {
      out.emplace_back(t, s.mean[r]);
      while (next <= t + 1e-12) next *= factor;
    }
  }
  return out;
}

}  // namespace dzo
