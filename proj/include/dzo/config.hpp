// Run configuration: a versioned JSON schema covering problem, topology,
// estimator, schedule, noise, budget and reproducibility fields. Values whose
// exactness matters may be written as {"log10": v} and are preserved in that
// form on serialization, so parse(serialize(c)) == c.

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dzo/noise.hpp"

namespace dzo {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline double parse_real(const nlohmann::json& j) {
  if (j.is_object() && j.contains("log10")) return std::pow(10.0, j.at("log10").get<double>());
  return j.get<double>();
}

struct ProblemSpec {
  std::string kind = "quadratic";  // quadratic | appendix_e
  std::string matrix = "identity";  // identity | sparse_pd
  double density = 0.1;             // sparse_pd only
  double shift_radius = 0.0;        // quadratic: radius of per-agent minimizer shifts
  double L_log10 = 7.5;             // appendix_e: perturbation scale, stored as log10
  double h = 1e-3;                  // appendix_e
  double a = 10.0;                  // appendix_e

  double L() const { return std::pow(10.0, L_log10); }

  nlohmann::json to_json() const {
    nlohmann::json j{{"kind", kind}, {"matrix", matrix}};
    if (matrix == "sparse_pd") j["density"] = density;
    if (kind == "quadratic") j["shift_radius"] = shift_radius;
    if (kind == "appendix_e") {
      j["L"] = nlohmann::json{{"log10", L_log10}};
      j["h"] = h;
      j["a"] = a;
    }
    return j;
  }

  static ProblemSpec from_json(const nlohmann::json& j) {
    ProblemSpec s;
    s.kind = j.value("kind", std::string("quadratic"));
    s.matrix = j.value("matrix", std::string("identity"));
    s.density = j.value("density", 0.1);
    s.shift_radius = j.value("shift_radius", 0.0);
    if (j.contains("L")) {
      const auto& L = j.at("L");
      s.L_log10 = L.is_object() ? L.at("log10").get<double>() : std::log10(L.get<double>());
    }
    s.h = j.value("h", 1e-3);
    s.a = j.value("a", 10.0);
    return s;
  }
};

struct FeasibleSpec {
  std::string kind = "ball";  // ball | box | ball_cap_nonpositive
  double radius = 1.0;
  std::vector<double> lo, hi;  // box only

  nlohmann::json to_json() const {
    nlohmann::json j{{"kind", kind}};
    if (kind == "box") {
      j["lo"] = lo;
      j["hi"] = hi;
    } else {
      j["radius"] = radius;
    }
    return j;
  }

  static FeasibleSpec from_json(const nlohmann::json& j) {
    FeasibleSpec s;
    s.kind = j.value("kind", std::string("ball"));
    s.radius = j.value("radius", 1.0);
    if (j.contains("lo")) s.lo = j.at("lo").get<std::vector<double>>();
    if (j.contains("hi")) s.hi = j.at("hi").get<std::vector<double>>();
    return s;
  }
};

struct TopologySpec {
  std::string kind = "complete_mixing";  // complete_mixing | complete | path | cycle | star | grid2d | erdos_renyi
  double p = 0.5;                        // erdos_renyi
  std::uint64_t seed = 0;                // erdos_renyi

  nlohmann::json to_json() const {
    nlohmann::json j{{"kind", kind}};
    if (kind == "erdos_renyi") {
      j["p"] = p;
      j["seed"] = seed;
    }
    return j;
  }

  static TopologySpec from_json(const nlohmann::json& j) {
    TopologySpec s;
    s.kind = j.value("kind", std::string("complete_mixing"));
    s.p = j.value("p", 0.5);
    s.seed = j.value("seed", std::uint64_t{0});
    return s;
  }
};

struct InitSpec {
  std::string kind = "proj_zero";  // proj_zero | proj_gaussian
  double scale = 1.0;

  nlohmann::json to_json() const {
    nlohmann::json j{{"kind", kind}};
    if (kind == "proj_gaussian") j["scale"] = scale;
    return j;
  }

  static InitSpec from_json(const nlohmann::json& j) {
    InitSpec s;
    s.kind = j.value("kind", std::string("proj_zero"));
    s.scale = j.value("scale", 1.0);
    return s;
  }
};

struct RecordSpec {
  std::string mode = "all";  // all | log
  int per_decade = 48;

  nlohmann::json to_json() const {
    nlohmann::json j{{"mode", mode}};
    if (mode == "log") j["per_decade"] = per_decade;
    return j;
  }

  static RecordSpec from_json(const nlohmann::json& j) {
    RecordSpec s;
    s.mode = j.value("mode", std::string("all"));
    s.per_decade = j.value("per_decade", 48);
    return s;
  }
};

struct RunConfig {
  int schema_version = 1;
  int n = 1;
  int d = 1;
  double alpha = 1.0;
  double beta = 2.0;
  ProblemSpec problem;
  FeasibleSpec feasible;
  TopologySpec topology;
  double gamma = 1.0;
  std::string estimator = "kernel_2d";  // kernel_2d | two_point | oracle
  std::string schedule = "theorem1";    // theorem1 | corollary_local | theorem2_beta2
  NoiseModel noise;
  long T0 = 0;  // exactly one of T0 / T must be positive
  long T = 0;
  int trials = 1;
  std::uint64_t base_seed = 1;
  InitSpec init;
  RecordSpec record;
  std::vector<long> checkpoints;
  std::string output = "out";

  nlohmann::json to_json() const {
    nlohmann::json budget;
    if (T0 > 0)
      budget = nlohmann::json{{"T0", T0}};
    else
      budget = nlohmann::json{{"T", T}};
    nlohmann::json j{{"schema_version", schema_version},
                     {"n", n},
                     {"d", d},
                     {"alpha", alpha},
                     {"beta", beta},
                     {"problem", problem.to_json()},
                     {"feasible", feasible.to_json()},
                     {"topology", topology.to_json()},
                     {"gamma", gamma},
                     {"estimator", estimator},
                     {"schedule", schedule},
                     {"noise", noise.to_json()},
                     {"budget", budget},
                     {"trials", trials},
                     {"base_seed", base_seed},
                     {"init", init.to_json()},
                     {"record", record.to_json()},
                     {"output", output}};
    if (!checkpoints.empty()) j["checkpoints"] = checkpoints;
    return j;
  }

  static RunConfig from_json(const nlohmann::json& j) {
    RunConfig c;
    c.schema_version = j.value("schema_version", 1);
    c.n = j.at("n").get<int>();
    c.d = j.at("d").get<int>();
    c.alpha = parse_real(j.at("alpha"));
    c.beta = parse_real(j.at("beta"));
    if (j.contains("problem")) c.problem = ProblemSpec::from_json(j.at("problem"));
    if (j.contains("feasible")) c.feasible = FeasibleSpec::from_json(j.at("feasible"));
    if (j.contains("topology")) c.topology = TopologySpec::from_json(j.at("topology"));
    c.gamma = j.value("gamma", 1.0);
    c.estimator = j.value("estimator", std::string("kernel_2d"));
    c.schedule = j.value("schedule", std::string("theorem1"));
    if (j.contains("noise")) c.noise = NoiseModel::from_json(j.at("noise"));
    if (j.contains("budget")) {
      const auto& b = j.at("budget");
      c.T0 = b.value("T0", 0L);
      c.T = b.value("T", 0L);
    }
    c.trials = j.value("trials", 1);
    if (!j.contains("base_seed"))
      throw std::invalid_argument("config: base_seed is required (no wall-clock seeding)");
    c.base_seed = j.at("base_seed").get<std::uint64_t>();
    if (j.contains("init")) c.init = InitSpec::from_json(j.at("init"));
    if (j.contains("record")) c.record = RecordSpec::from_json(j.at("record"));
    if (j.contains("checkpoints")) c.checkpoints = j.at("checkpoints").get<std::vector<long>>();
    c.output = j.value("output", std::string("out"));
    c.validate();
    return c;
  }

  void validate() const {
    if (schema_version != 1) throw std::invalid_argument("config: unsupported schema_version");
    if (n < 1 || d < 1) throw std::invalid_argument("config: n >= 1, d >= 1");
    if (trials < 1) throw std::invalid_argument("config: trials >= 1");
    if ((T0 > 0) == (T > 0))
      throw std::invalid_argument("config: exactly one of budget.T0 / budget.T must be set");
    const bool two_point = estimator == "two_point";
    const bool kernel = estimator == "kernel_2d";
    const bool oracle = estimator == "oracle";
    if (!two_point && !kernel && !oracle)
      throw std::invalid_argument("config: unknown estimator " + estimator);
    if (schedule == "theorem2_beta2") {
      if (!two_point)
        throw std::invalid_argument("config: theorem2_beta2 requires the two_point estimator");
    } else if (schedule == "theorem1" || schedule == "corollary_local") {
      if (two_point)
        throw std::invalid_argument("config: two_point requires the theorem2_beta2 schedule");
    } else {
      throw std::invalid_argument("config: unknown schedule " + schedule);
    }
    if (problem.kind != "quadratic" && problem.kind != "appendix_e")
      throw std::invalid_argument("config: unknown problem kind " + problem.kind);
  }

  bool operator==(const RunConfig& other) const { return to_json() == other.to_json(); }
};

}  // namespace dzo
