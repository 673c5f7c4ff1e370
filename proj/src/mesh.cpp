#include "parab/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

namespace parab {

Mesh::Mesh(double t0, double big_t, double gamma, double band_step) : gamma_(gamma) {
  if (!(t0 >= 1.0)) throw ContractError("build_mesh: t0 must be >= 1");
  if (!(big_t >= t0 + 1.0)) throw ContractError("build_mesh: T must be >= t0 + 1");
  if (!(gamma > 1.0 && gamma <= 1.25))
    throw ContractError("build_mesh: gamma must lie in ]1, 1.25]");
  if (!(band_step > 0.0 && band_step <= 0.5))
    throw ContractError("build_mesh: band_step must lie in ]0, 0.5]");
  // Uniform band on [t0, t0+1] with a node exactly at t0+1.
  const int n_band = std::max(1, int(std::ceil(1.0 / band_step - 1e-12)));
  nodes_.reserve(size_t(n_band) + 64);
  for (int i = 0; i <= n_band; ++i) nodes_.push_back(t0 + double(i) / double(n_band));
  nodes_[size_t(n_band)] = t0 + 1.0;  // exact
  // Geometric grading to T.
  while (nodes_.back() * gamma < big_t * (1.0 - 1e-12)) nodes_.push_back(nodes_.back() * gamma);
  // Clip or append the final node so the mesh ends exactly at T, avoiding a
  // sliver last element.
  if (big_t - nodes_.back() < 0.25 * (gamma - 1.0) * nodes_.back() &&
      nodes_.size() > size_t(n_band) + 1) {
    nodes_.back() = big_t;
  } else if (big_t > nodes_.back()) {
    nodes_.push_back(big_t);
  }
}

Eigen::Index Mesh::element_of(double t) const {
  if (t <= nodes_.front()) return 0;
  if (t >= nodes_.back()) return element_count() - 1;
  const auto it = std::upper_bound(nodes_.begin(), nodes_.end(), t);
  return Eigen::Index(it - nodes_.begin()) - 1;
}

MeshedFunction::MeshedFunction(std::shared_ptr<const Mesh> mesh, MassMetric metric,
                               Eigen::Index dim)
    : mesh_(std::move(mesh)),
      metric_(std::move(metric)),
      values_(Matrix::Zero(mesh_->node_count(), dim)) {
  if (metric_.dim() != dim) throw ContractError("MeshedFunction: metric dimension mismatch");
}

MeshedFunction::MeshedFunction(std::shared_ptr<const Mesh> mesh, MassMetric metric,
                               Matrix values)
    : mesh_(std::move(mesh)), metric_(std::move(metric)), values_(std::move(values)) {
  if (values_.rows() != mesh_->node_count())
    throw ContractError("MeshedFunction: one row per node required");
  if (metric_.dim() != values_.cols())
    throw ContractError("MeshedFunction: metric dimension mismatch");
  if (values_.row(0).cwiseAbs().maxCoeff() != 0.0)
    throw ContractError("MeshedFunction: phi(t0) must vanish (row 0 nonzero)");
}

void MeshedFunction::set_free_values(const Matrix& free_rows) {
  if (free_rows.rows() != values_.rows() - 1 || free_rows.cols() != values_.cols())
    throw ContractError("MeshedFunction::set_free_values: shape mismatch");
  values_.bottomRows(values_.rows() - 1) = free_rows;
}

Vector MeshedFunction::eval(double t) const {
  const Eigen::Index k = mesh_->element_of(t);
  const double a = mesh_->node(k), b = mesh_->node(k + 1);
  const double s = std::clamp((t - a) / (b - a), 0.0, 1.0);
  return ((1.0 - s) * values_.row(k) + s * values_.row(k + 1)).transpose();
}

Vector MeshedFunction::deriv(double t) const {
  const Eigen::Index k = mesh_->element_of(t);
  return ((values_.row(k + 1) - values_.row(k)) / mesh_->dt(k)).transpose();
}

MeshedFunction& MeshedFunction::operator+=(const MeshedFunction& other) {
  if (mesh_ != other.mesh_) throw ContractError("MeshedFunction: mesh mismatch");
  values_ += other.values_;
  return *this;
}

MeshedFunction& MeshedFunction::operator*=(double a) {
  values_ *= a;
  return *this;
}

namespace {

void require_same_mesh(const MeshedFunction& a, const MeshedFunction& b) {
  if (a.mesh_ptr() != b.mesh_ptr() && a.mesh().nodes() != b.mesh().nodes())
    throw ContractError("d12_inner: mesh mismatch");
}

}  // namespace

double d12_inner(const MeshedFunction& phi, const MeshedFunction& psi) {
  require_same_mesh(phi, psi);
  const Mesh& mesh = phi.mesh();
  const Vector& mu = phi.metric().weights();
  double acc = 0.0;
  for (Eigen::Index k = 0; k < mesh.element_count(); ++k) {
    const auto dphi = phi.values().row(k + 1) - phi.values().row(k);
    const auto dpsi = psi.values().row(k + 1) - psi.values().row(k);
    acc += (dphi.transpose().cwiseProduct(dpsi.transpose()).cwiseProduct(mu)).sum() /
           mesh.dt(k);
  }
  return acc;
}

double d12_norm(const MeshedFunction& phi) { return std::sqrt(d12_inner(phi, phi)); }

std::array<std::pair<double, double>, 3> gauss3(double a, double b) {
  static const double q = std::sqrt(3.0 / 5.0);
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  return {{{mid - half * q, half * 5.0 / 9.0},
           {mid, half * 8.0 / 9.0},
           {mid + half * q, half * 5.0 / 9.0}}};
}

double hardy_ratio(const MeshedFunction& phi) {
  const double nn = d12_inner(phi, phi);
  if (!(nn > 0.0)) throw ContractError("hardy_ratio: zero function");
  const Mesh& mesh = phi.mesh();
  double num = 0.0;
  for (Eigen::Index k = 0; k < mesh.element_count(); ++k) {
    for (const auto& [t, w] : gauss3(mesh.node(k), mesh.node(k + 1))) {
      const Vector v = phi.eval(t);
      num += w * phi.metric().squared_norm(v) / (t * t);
    }
  }
  return num / nn;
}

double pointwise_bound_check(const MeshedFunction& phi) {
  const double n = d12_norm(phi);
  if (n == 0.0) return 0.0;
  double worst = 0.0;
  for (Eigen::Index k = 0; k < phi.mesh().node_count(); ++k) {
    const double v = phi.metric().norm(phi.value_at_node(k));
    worst = std::max(worst, v / (n * std::sqrt(phi.mesh().node(k))));
  }
  return worst;
}

MeshedFunction random_meshed_function(const std::shared_ptr<const Mesh>& mesh,
                                      const MassMetric& metric, Eigen::Index dim,
                                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix values(mesh->node_count(), dim);
  values.row(0).setZero();
  for (Eigen::Index k = 0; k < mesh->element_count(); ++k) {
    // Increment scaled by sqrt(dtau) so every element contributes O(1) energy.
    const double s = std::sqrt(mesh->dt(k));
    for (Eigen::Index j = 0; j < dim; ++j)
      values(k + 1, j) = values(k, j) + s * gauss(rng);
  }
  return MeshedFunction(mesh, metric, std::move(values));
}

MeshedFunction interpolate_profile(const std::shared_ptr<const Mesh>& mesh,
                                   const MassMetric& metric, Eigen::Index dim,
                                   const std::function<Vector(double)>& f) {
  Matrix values(mesh->node_count(), dim);
  values.row(0).setZero();
  for (Eigen::Index k = 1; k < mesh->node_count(); ++k)
    values.row(k) = f(mesh->node(k)).transpose();
  return MeshedFunction(mesh, metric, std::move(values));
}

void write_csv(const MeshedFunction& phi, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ContractError("write_csv: cannot open " + path);
  out << "t";
  for (Eigen::Index j = 0; j < phi.dim(); ++j) out << ",phi" << j;
  out << "\n";
  out.precision(17);
  for (Eigen::Index k = 0; k < phi.mesh().node_count(); ++k) {
    out << phi.mesh().node(k);
    for (Eigen::Index j = 0; j < phi.dim(); ++j) out << "," << phi.values()(k, j);
    out << "\n";
  }
}

}  // namespace parab
