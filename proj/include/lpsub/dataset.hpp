#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lpsub/csv.hpp"
#include "lpsub/errors.hpp"

namespace lpsub {

/// Point cloud in R^D, one point per column, with optional component labels
/// (0 = outlier, i >= 1 = subspace component of origin).
struct Dataset {
  Eigen::MatrixXd points;
  std::vector<int> labels;

  Dataset() = default;
  explicit Dataset(Eigen::MatrixXd pts, std::vector<int> lbl = {})
      : points(std::move(pts)), labels(std::move(lbl)) {
    if (!labels.empty() && static_cast<Eigen::Index>(labels.size()) != points.cols())
      throw DimensionError("label count does not match point count");
  }

  Eigen::Index ambient_dim() const { return points.rows(); }
  Eigen::Index size() const { return points.cols(); }
  bool has_labels() const { return !labels.empty(); }
  auto point(Eigen::Index i) const { return points.col(i); }

  /// Largest point norm (0 for an empty dataset).
  double max_norm() const { return size() ? points.colwise().norm().maxCoeff() : 0.0; }

  /// Throws ConfigError when some point lies outside the closed ball of radius r.
  void check_norm_bound(double r) const {
    if (max_norm() > r * (1 + 1e-12)) throw ConfigError("dataset exceeds declared norm bound");
  }

  /// Points of `a` followed by points of `b`.
  static Dataset concat(const Dataset& a, const Dataset& b) {
    if (a.size() && b.size() && a.ambient_dim() != b.ambient_dim())
      throw DimensionError("cannot concatenate datasets of different dimension");
    const Eigen::Index dim = a.size() ? a.ambient_dim() : b.ambient_dim();
    Eigen::MatrixXd pts(dim, a.size() + b.size());
    pts << a.points, b.points;
    std::vector<int> lbl;
    if (a.has_labels() && b.has_labels()) {
      lbl = a.labels;
      lbl.insert(lbl.end(), b.labels.begin(), b.labels.end());
    }
    return Dataset(std::move(pts), std::move(lbl));
  }
};

/// Header `x0,...,x{D-1}[,label]`, one point per row.
inline void write_dataset_csv(std::ostream& out, const Dataset& data) {
  const Eigen::Index dim = data.ambient_dim();
  for (Eigen::Index j = 0; j < dim; ++j) out << (j ? "," : "") << 'x' << j;
  if (data.has_labels()) out << ",label";
  out << '\n';
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    for (Eigen::Index j = 0; j < dim; ++j)
      out << (j ? "," : "") << csv::format_double(data.points(j, i));
    if (data.has_labels()) out << ',' << data.labels[static_cast<std::size_t>(i)];
    out << '\n';
  }
}

inline Dataset read_dataset_csv(std::istream& in) {
  const auto lines = csv::read_lines(in);
  if (lines.empty()) throw ConfigError("dataset CSV has no header");
  const auto header = csv::split_fields(lines.front());
  const bool labelled = !header.empty() && header.back() == "label";
  const std::size_t dim = header.size() - (labelled ? 1 : 0);
  if (dim == 0) throw ConfigError("dataset CSV has no coordinate columns");
  for (std::size_t j = 0; j < dim; ++j)
    if (header[j] != "x" + std::to_string(j)) throw ConfigError("unexpected dataset header '" + header[j] + "'");

  const auto n = static_cast<Eigen::Index>(lines.size() - 1);
  Eigen::MatrixXd pts(static_cast<Eigen::Index>(dim), n);
  std::vector<int> labels;
  if (labelled) labels.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto fields = csv::split_fields(lines[static_cast<std::size_t>(i) + 1]);
    if (fields.size() != header.size()) throw ConfigError("dataset row " + std::to_string(i) + " has wrong arity");
    for (std::size_t j = 0; j < dim; ++j) pts(static_cast<Eigen::Index>(j), i) = csv::parse_double(fields[j]);
    if (labelled) labels.push_back(static_cast<int>(csv::parse_double(fields.back())));
  }
  return Dataset(std::move(pts), std::move(labels));
}

}  // namespace lpsub
