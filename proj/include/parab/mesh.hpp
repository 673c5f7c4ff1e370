#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "parab/mass_metric.hpp"
#include "parab/types.hpp"

namespace parab {

/// Graded mesh of [t0, T]: a uniform band resolving the cutoff support
/// [t0, t0+1], then geometric nodes tau_{k+1} = gamma * tau_k, last node
/// clipped to exactly T.
class Mesh {
 public:
  Mesh(double t0, double big_t, double gamma, double band_step);

  double t0() const { return nodes_.front(); }
  double horizon() const { return nodes_.back(); }
  double gamma() const { return gamma_; }
  Eigen::Index node_count() const { return Eigen::Index(nodes_.size()); }
  Eigen::Index element_count() const { return node_count() - 1; }
  const std::vector<double>& nodes() const { return nodes_; }
  double node(Eigen::Index k) const { return nodes_[size_t(k)]; }
  double dt(Eigen::Index k) const { return nodes_[size_t(k) + 1] - nodes_[size_t(k)]; }

  /// Index of the element containing t (clamped to the last element).
  Eigen::Index element_of(double t) const;

 private:
  std::vector<double> nodes_;
  double gamma_;
};

inline std::shared_ptr<const Mesh> build_mesh(double t0, double big_t, double gamma,
                                              double band_step) {
  return std::make_shared<const Mesh>(t0, big_t, gamma, band_step);
}

/// Piecewise-linear R^d-valued function on a mesh, vanishing at t0 (row 0 of
/// the value table is identically zero). The discrete stand-in for an element
/// of D^{1,2}_0(t0, +infty).
class MeshedFunction {
 public:
  MeshedFunction() = default;
  MeshedFunction(std::shared_ptr<const Mesh> mesh, MassMetric metric, Eigen::Index dim);
  MeshedFunction(std::shared_ptr<const Mesh> mesh, MassMetric metric, Matrix values);

  const Mesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const Mesh>& mesh_ptr() const { return mesh_; }
  const MassMetric& metric() const { return metric_; }
  Eigen::Index dim() const { return values_.cols(); }

  const Matrix& values() const { return values_; }
  Vector value_at_node(Eigen::Index k) const { return values_.row(k).transpose(); }

  /// Overwrites the free nodal values (rows 1..M); row 0 stays pinned at zero.
  void set_free_values(const Matrix& free_rows);
  Matrix free_values() const { return values_.bottomRows(values_.rows() - 1); }

  /// Linear interpolation; t is clamped to [t0, T].
  Vector eval(double t) const;
  /// Elementwise-constant derivative; t clamped, element boundaries take the
  /// right-hand slope.
  Vector deriv(double t) const;

  MeshedFunction& operator+=(const MeshedFunction& other);
  MeshedFunction& operator*=(double a);

 private:
  std::shared_ptr<const Mesh> mesh_;
  MassMetric metric_;
  Matrix values_;  // (M+1) x d, row 0 == 0
};

/// sum_k <dphi_k, dpsi_k> / dtau_k, the discrete D^{1,2} scalar product
/// (exact for piecewise-linear functions).
double d12_inner(const MeshedFunction& phi, const MeshedFunction& psi);
double d12_norm(const MeshedFunction& phi);

/// [integral of |phi|^2/t^2] / ||phi||^2 by 3-point Gauss per element.
/// Hardy's inequality bounds this by 4.
double hardy_ratio(const MeshedFunction& phi);

/// max_k |phi(tau_k)| / (||phi|| sqrt(tau_k)); contract <= 1 (+roundoff).
/// Zero function returns 0 by convention.
double pointwise_bound_check(const MeshedFunction& phi);

/// Deterministic random element of the discrete space (increments drawn
/// i.i.d. and scaled), for property tests.
MeshedFunction random_meshed_function(const std::shared_ptr<const Mesh>& mesh,
                                      const MassMetric& metric, Eigen::Index dim,
                                      std::uint64_t seed);

/// Nodal interpolation of a smooth profile f: [t0,T] -> R^d with f(t0) = 0.
MeshedFunction interpolate_profile(const std::shared_ptr<const Mesh>& mesh,
                                   const MassMetric& metric, Eigen::Index dim,
                                   const std::function<Vector(double)>& f);

/// CSV dump of (tau_k, phi(tau_k)...), one node per line.
void write_csv(const MeshedFunction& phi, const std::string& path);

/// 3-point Gauss-Legendre nodes/weights on [a, b].
std::array<std::pair<double, double>, 3> gauss3(double a, double b);

}  // namespace parab
