// Query-noise generators. The only contract is a bounded second moment
// E[xi^2] <= sigma^2: zero mean is NOT required, so deterministic, biased and
// maximally correlated (adversarial) kinds are legal. Draws are addressed by
// (agent, iteration, query index, side) on a dedicated stream, so they never
// consume from, or depend on, the probe-randomization stream.

#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "dzo/rng.hpp"

namespace dzo {

struct NoiseModel {
  enum class Kind { none, gaussian, uniform, constant_bias, adversarial_sign };

  Kind kind = Kind::none;
  double sigma = 0.0;      // gaussian
  double lo = 0.0, hi = 0.0;  // uniform
  double bias = 0.0;       // constant_bias
  double magnitude = 0.0;  // adversarial_sign

  static NoiseModel none() { return {}; }
  static NoiseModel gaussian(double sigma) {
    NoiseModel m;
    m.kind = Kind::gaussian;
    m.sigma = sigma;
    return m;
  }
  static NoiseModel uniform(double lo, double hi) {
    if (lo > hi) throw std::invalid_argument("uniform noise: lo > hi");
    NoiseModel m;
    m.kind = Kind::uniform;
    m.lo = lo;
    m.hi = hi;
    return m;
  }
  static NoiseModel constant_bias(double c) {
    NoiseModel m;
    m.kind = Kind::constant_bias;
    m.bias = c;
    return m;
  }
  static NoiseModel adversarial_sign(double magnitude) {
    NoiseModel m;
    m.kind = Kind::adversarial_sign;
    m.magnitude = magnitude;
    return m;
  }

  // Tightest declared sigma^2 with E[xi^2] <= sigma^2.
  double second_moment_bound() const {
    switch (kind) {
      case Kind::none: return 0.0;
      case Kind::gaussian: return sigma * sigma;
      case Kind::uniform: return (lo * lo + lo * hi + hi * hi) / 3.0;  // exact E[xi^2]
      case Kind::constant_bias: return bias * bias;
      case Kind::adversarial_sign: return magnitude * magnitude;
    }
    return 0.0;
  }

  double sigma_bound() const { return std::sqrt(second_moment_bound()); }

  nlohmann::json to_json() const {
    switch (kind) {
      case Kind::none: return {{"kind", "none"}};
      case Kind::gaussian: return {{"kind", "gaussian"}, {"sigma", sigma}};
      case Kind::uniform: return {{"kind", "uniform"}, {"lo", lo}, {"hi", hi}};
      case Kind::constant_bias: return {{"kind", "constant_bias"}, {"c", bias}};
      case Kind::adversarial_sign: return {{"kind", "adversarial_sign"}, {"magnitude", magnitude}};
    }
    return {};
  }

  static NoiseModel from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "none") return none();
    if (kind == "gaussian") return gaussian(j.at("sigma").get<double>());
    if (kind == "uniform") return uniform(j.at("lo").get<double>(), j.at("hi").get<double>());
    if (kind == "constant_bias") return constant_bias(j.at("c").get<double>());
    if (kind == "adversarial_sign") return adversarial_sign(j.at("magnitude").get<double>());
    throw std::invalid_argument("unknown noise kind: " + kind);
  }
};

struct NoiseContext {
  int agent = 0;
  long iteration = 0;
  int query_index = 0;
  int side = +1;  // +1 for the forward probe, -1 for the backward probe
};

inline double draw_noise(const NoiseModel& m, const NoiseContext& ctx, const RngStream& noise_root) {
  switch (m.kind) {
    case NoiseModel::Kind::none:
      return 0.0;
    case NoiseModel::Kind::gaussian: {
      RngStream s = noise_root.fork(static_cast<std::uint64_t>(ctx.agent),
                                    static_cast<std::uint64_t>(ctx.iteration),
                                    static_cast<std::uint64_t>(ctx.query_index),
                                    ctx.side > 0 ? 1u : 0u);
      return m.sigma * s.gaussian();
    }
    case NoiseModel::Kind::uniform: {
      RngStream s = noise_root.fork(static_cast<std::uint64_t>(ctx.agent),
                                    static_cast<std::uint64_t>(ctx.iteration),
                                    static_cast<std::uint64_t>(ctx.query_index),
                                    ctx.side > 0 ? 1u : 0u);
      return s.uniform(m.lo, m.hi);
    }
    case NoiseModel::Kind::constant_bias:
      return m.bias;
    case NoiseModel::Kind::adversarial_sign:
      return ctx.side > 0 ? m.magnitude : -m.magnitude;
  }
  return 0.0;
}

}  // namespace dzo
