#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <vector>

namespace blossom {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using MultiIndex = Eigen::VectorXi;

/// Axis-aligned box search domain.
struct Domain {
  Vector lower;
  Vector upper;

  Domain() = default;
  Domain(Vector lo, Vector up) : lower(std::move(lo)), upper(std::move(up)) {
    if (lower.size() != upper.size() || lower.size() < 1)
      throw std::invalid_argument("Domain: bound vectors must have equal size >= 1");
    for (int k = 0; k < lower.size(); ++k)
      if (!(lower[k] < upper[k]))
        throw std::invalid_argument("Domain: lower[k] < upper[k] required");
  }

  /// Convenience: the d-dimensional cube [lo, up]^d.
  static Domain cube(int d, double lo, double up) {
    return Domain(Vector::Constant(d, lo), Vector::Constant(d, up));
  }

  int dim() const { return static_cast<int>(lower.size()); }
  double width(int k) const { return upper[k] - lower[k]; }

  bool contains(const Vector& x, double tol = 0.0) const {
    if (x.size() != lower.size()) return false;
    for (int k = 0; k < x.size(); ++k)
      if (x[k] < lower[k] - tol || x[k] > upper[k] + tol) return false;
    return true;
  }

  Vector clamp(Vector x) const {
    for (int k = 0; k < x.size(); ++k)
      x[k] = std::min(upper[k], std::max(lower[k], x[k]));
    return x;
  }

  Vector center() const { return 0.5 * (lower + upper); }

  /// Distance from x to the farthest corner of the box.
  double farthest_corner_distance(const Vector& x) const {
    double s = 0.0;
    for (int k = 0; k < dim(); ++k) {
      double a = std::abs(x[k] - lower[k]);
      double b = std::abs(upper[k] - x[k]);
      double m = std::max(a, b);
      s += m * m;
    }
    return std::sqrt(s);
  }

  /// The farthest corner itself.
  Vector farthest_corner(const Vector& x) const {
    Vector c(dim());
    for (int k = 0; k < dim(); ++k)
      c[k] = (std::abs(x[k] - lower[k]) > std::abs(upper[k] - x[k])) ? lower[k] : upper[k];
    return c;
  }

  /// Largest t >= 0 such that x + t*u stays inside the box (x must be inside).
  double exit_distance(const Vector& x, const Vector& u) const {
    double t = std::numeric_limits<double>::infinity();
    for (int k = 0; k < dim(); ++k) {
      if (u[k] > 0)
        t = std::min(t, (upper[k] - x[k]) / u[k]);
      else if (u[k] < 0)
        t = std::min(t, (lower[k] - x[k]) / u[k]);
    }
    return std::max(0.0, t);
  }
};

/// A single noiseless evaluation of the objective.
struct Observation {
  Vector x;
  double y;
};

}  // namespace blossom
