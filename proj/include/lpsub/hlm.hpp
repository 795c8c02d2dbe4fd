#pragma once

// Sampling from spherically symmetric HLM (hybrid linear model) measures:
// K subspace components, an outlier component and bounded noise orthogonal to
// each subspace.

#include <cstdint>
#include <istream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "lpsub/dataset.hpp"
#include "lpsub/errors.hpp"
#include "lpsub/parallel.hpp"
#include "lpsub/random.hpp"
#include "lpsub/subspace.hpp"

namespace lpsub {

enum class Distribution { UniformBall, UniformSphere, CustomBounded };

inline std::string to_string(Distribution d) {
  switch (d) {
    case Distribution::UniformBall: return "uniform-ball";
    case Distribution::UniformSphere: return "uniform-sphere";
    case Distribution::CustomBounded: return "custom-bounded";
  }
  return "?";
}

inline Distribution parse_distribution(const std::string& s) {
  if (s == "uniform-ball") return Distribution::UniformBall;
  if (s == "uniform-sphere") return Distribution::UniformSphere;
  if (s == "custom-bounded") return Distribution::CustomBounded;
  throw ConfigError("unknown distribution '" + s + "'");
}

struct HlmComponent {
  Subspace subspace;
  double weight;
  double radius = 1.0;
  Distribution distribution = Distribution::UniformBall;
};

struct HlmOutlier {
  double weight = 0.0;
  double radius = 1.0;
  Distribution distribution = Distribution::UniformBall;
};

struct HlmModelConfig {
  Index ambient_dim = 0;
  Index subspace_dim = 0;
  std::vector<HlmComponent> components;
  HlmOutlier outlier;
  double noise_level = 0.0;
  /// Only "uniform-ball-in-complement" is supported.
  std::string noise_kind = "uniform-ball-in-complement";
  /// Requires alpha_1 > sum_{i >= 2} alpha_i.
  bool most_significant = false;

  /// Throws ConfigError when any model invariant is violated.
  void validate() const {
    if (ambient_dim < 1 || subspace_dim < 1 || subspace_dim > ambient_dim)
      throw ConfigError("need 1 <= subspace_dim <= ambient_dim");
    if (components.empty()) throw ConfigError("model needs at least one subspace component");
    if (noise_kind != "uniform-ball-in-complement") throw ConfigError("unsupported noise_kind '" + noise_kind + "'");
    if (!(noise_level >= 0.0) || !std::isfinite(noise_level)) throw ConfigError("noise_level must be >= 0");
    if (!(outlier.weight >= 0.0 && outlier.weight < 1.0)) throw ConfigError("outlier weight must lie in [0, 1)");
    if (!(outlier.radius > 0.0 && outlier.radius <= 1.0)) throw ConfigError("outlier radius must lie in (0, 1]");
    double total = outlier.weight;
    for (std::size_t i = 0; i < components.size(); ++i) {
      const HlmComponent& c = components[i];
      if (c.subspace.ambient_dim() != ambient_dim || c.subspace.dim() != subspace_dim)
        throw ConfigError("component " + std::to_string(i + 1) + " has the wrong dimensions");
      if (!(c.weight > 0.0 && c.weight <= 1.0)) throw ConfigError("component weights must lie in (0, 1]");
      if (!(c.radius > 0.0 && c.radius <= 1.0)) throw ConfigError("component radii must lie in (0, 1]");
      if (c.distribution == Distribution::CustomBounded)
        throw ConfigError("subspace components must be uniform-ball or uniform-sphere");
      total += c.weight;
      for (std::size_t j = 0; j < i; ++j)
        if (geodesic_distance(components[j].subspace, c.subspace) <= kZeroAngle)
          throw ConfigError("component subspaces must be pairwise distinct");
    }
    if (std::abs(total - 1.0) > 1e-12) throw ConfigError("weights must sum to 1");
    if (most_significant) {
      double rest = 0.0;
      for (std::size_t i = 1; i < components.size(); ++i) rest += components[i].weight;
      if (!(components[0].weight > rest)) throw ConfigError("alpha_1 must exceed the sum of the other subspace weights");
    }
  }
};

namespace detail {

inline double json_number(const nlohmann::json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw ConfigError(std::string("field '") + key + "' must be a number");
  return j.at(key).get<double>();
}

inline Subspace parse_subspace(const nlohmann::json& j, Index D, Index d) {
  if (j.contains("basis")) {
    const auto& vecs = j.at("basis");
    if (!vecs.is_array() || static_cast<Index>(vecs.size()) != d)
      throw ConfigError("'basis' must list subspace_dim vectors");
    MatrixXd cols(D, d);
    for (Index c = 0; c < d; ++c) {
      const auto& v = vecs.at(static_cast<std::size_t>(c));
      if (!v.is_array() || static_cast<Index>(v.size()) != D) throw ConfigError("basis vectors must have ambient_dim entries");
      for (Index r = 0; r < D; ++r) cols(r, c) = v.at(static_cast<std::size_t>(r)).get<double>();
    }
    try {
      return Subspace::span_of(cols);
    } catch (const DimensionError& e) {
      throw ConfigError(std::string("invalid basis: ") + e.what());
    }
  }
  if (j.contains("random")) return random_subspace(D, d, j.at("random").at("seed").get<std::uint64_t>());
  if (j.contains("angle")) {
    if (D != 2 || d != 1) throw ConfigError("'angle' subspaces require D = 2, d = 1");
    return Subspace::line_2d(j.at("angle").get<double>());
  }
  throw ConfigError("subspace needs 'basis', 'random' or 'angle'");
}

}  // namespace detail

/// Parses the JSON model description (see README) and validates it.
inline HlmModelConfig parse_model_config(const nlohmann::json& j) {
  try {
    HlmModelConfig cfg;
    cfg.ambient_dim = j.at("ambient_dim").get<Index>();
    cfg.subspace_dim = j.at("subspace_dim").get<Index>();
    if (cfg.ambient_dim < 1 || cfg.subspace_dim < 1 || cfg.subspace_dim > cfg.ambient_dim)
      throw ConfigError("need 1 <= subspace_dim <= ambient_dim");
    for (const auto& c : j.at("components")) {
      cfg.components.push_back(HlmComponent{
          detail::parse_subspace(c.at("subspace"), cfg.ambient_dim, cfg.subspace_dim), c.at("weight").get<double>(),
          detail::json_number(c, "radius", 1.0), parse_distribution(c.value("distribution", "uniform-ball"))});
    }
    if (j.contains("outlier")) {
      const auto& o = j.at("outlier");
      cfg.outlier.weight = detail::json_number(o, "weight", 0.0);
      cfg.outlier.radius = detail::json_number(o, "radius", 1.0);
      cfg.outlier.distribution = parse_distribution(o.value("distribution", "uniform-ball"));
    }
    cfg.noise_level = detail::json_number(j, "noise_level", 0.0);
    cfg.noise_kind = j.value("noise_kind", cfg.noise_kind);
    cfg.most_significant = j.value("most_significant", false);
    cfg.validate();
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
}

inline HlmModelConfig read_model_config(std::istream& in) {
  try {
    return parse_model_config(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("model config is not valid JSON: ") + e.what());
  }
}

inline nlohmann::json to_json(const HlmModelConfig& cfg) {
  nlohmann::json j;
  j["ambient_dim"] = cfg.ambient_dim;
  j["subspace_dim"] = cfg.subspace_dim;
  j["components"] = nlohmann::json::array();
  for (const auto& c : cfg.components) {
    nlohmann::json basis = nlohmann::json::array();
    for (Index col = 0; col < c.subspace.dim(); ++col) {
      std::vector<double> v(c.subspace.basis().col(col).data(), c.subspace.basis().col(col).data() + cfg.ambient_dim);
      basis.push_back(v);
    }
    j["components"].push_back({{"subspace", {{"basis", basis}}},
                               {"weight", c.weight},
                               {"radius", c.radius},
                               {"distribution", to_string(c.distribution)}});
  }
  j["outlier"] = {{"weight", cfg.outlier.weight},
                  {"radius", cfg.outlier.radius},
                  {"distribution", to_string(cfg.outlier.distribution)}};
  j["noise_level"] = cfg.noise_level;
  j["noise_kind"] = cfg.noise_kind;
  j["most_significant"] = cfg.most_significant;
  return j;
}

/// Spherically symmetric point of the d-ball (radial density ~ r^(d-1)) or of
/// the d-sphere of the given radius, expressed in the basis `basis`.
inline VectorXd sample_in_subspace(Rng& rng, const MatrixXd& basis, double radius, Distribution dist) {
  const Index d = basis.cols();
  const VectorXd coeff = dist == Distribution::UniformSphere ? VectorXd(radius * random_unit_vector(rng, d))
                                                             : random_in_ball(rng, d, radius);
  return basis * coeff;
}

namespace detail {

/// Component index drawn from the weights: 0 = outlier, i >= 1 = subspace i.
inline int pick_component(Rng& rng, const HlmModelConfig& cfg) {
  const double u = uniform01(rng);
  double acc = cfg.outlier.weight;
  if (u < acc) return 0;
  for (std::size_t i = 0; i < cfg.components.size(); ++i) {
    acc += cfg.components[i].weight;
    if (u < acc) return static_cast<int>(i) + 1;
  }
  // Rounding in the cumulative sum: fall back to the last positive weight.
  return static_cast<int>(cfg.components.size());
}

inline VectorXd sample_component_point(Rng& rng, const HlmModelConfig& cfg, int label) {
  const HlmComponent& c = cfg.components[static_cast<std::size_t>(label - 1)];
  VectorXd x = sample_in_subspace(rng, c.subspace.basis(), c.radius, c.distribution);
  const Index codim = cfg.ambient_dim - cfg.subspace_dim;
  if (cfg.noise_level > 0.0 && codim > 0) x += c.subspace.complement() * random_in_ball(rng, codim, cfg.noise_level);
  return x;
}

template <class OutlierDraw>
Dataset sample_with(const HlmModelConfig& cfg, Index n, std::uint64_t seed, int threads, OutlierDraw&& outlier) {
  if (n < 1) throw ConfigError("sample size must be positive");
  MatrixXd pts(cfg.ambient_dim, n);
  std::vector<int> labels(static_cast<std::size_t>(n));
  parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t i) {
    Rng rng(stream_seed(seed, i));
    const int label = pick_component(rng, cfg);
    labels[i] = label;
    pts.col(static_cast<Index>(i)) = label == 0 ? outlier(rng) : sample_component_point(rng, cfg, label);
  });
  return Dataset(std::move(pts), std::move(labels));
}

}  // namespace detail

/// n labelled i.i.d. draws. Point i uses its own RNG stream derived from
/// (seed, i), so the result does not depend on `threads`.
inline Dataset sample(const HlmModelConfig& cfg, Index n, std::uint64_t seed, int threads = 1) {
  cfg.validate();
  if (cfg.outlier.weight > 0.0 && cfg.outlier.distribution == Distribution::CustomBounded)
    throw ConfigError("custom-bounded outliers need an explicit point set (sample_weakly_symmetric)");
  const Index D = cfg.ambient_dim;
  return detail::sample_with(cfg, n, seed, threads, [&](Rng& rng) -> VectorXd {
    if (cfg.outlier.distribution == Distribution::UniformSphere) return cfg.outlier.radius * random_unit_vector(rng, D);
    return random_in_ball(rng, D, cfg.outlier.radius);
  });
}

/// Like sample, but label-0 points are drawn uniformly from `outlier_points`.
inline Dataset sample_weakly_symmetric(const HlmModelConfig& cfg, const Dataset& outlier_points, Index n,
                                       std::uint64_t seed, int threads = 1) {
  cfg.validate();
  if (cfg.outlier.weight > 0.0 && outlier_points.size() == 0)
    throw ConfigError("outlier weight is positive but no outlier points were supplied");
  if (outlier_points.size() && outlier_points.ambient_dim() != cfg.ambient_dim)
    throw ConfigError("outlier points have the wrong dimension");
  if (outlier_points.max_norm() > 1.0 + 1e-12) throw ConfigError("outlier points must lie in the unit ball");
  const auto count = static_cast<std::uint64_t>(outlier_points.size());
  return detail::sample_with(cfg, n, seed, threads, [&](Rng& rng) -> VectorXd {
    const auto idx = std::uniform_int_distribution<std::uint64_t>(0, count - 1)(rng);
    return outlier_points.point(static_cast<Index>(idx));
  });
}

}  // namespace lpsub
