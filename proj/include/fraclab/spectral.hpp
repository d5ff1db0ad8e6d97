#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fraclab/kernel.hpp"
#include "fraclab/potentials.hpp"

namespace fraclab {

/// Discrete form energy <M f, f> h^d.
template <class Derived>
double form_energy(const OperatorMatrix& op, const Eigen::MatrixBase<Derived>& f) {
  if (f.size() != op.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                "state of size " + std::to_string(f.size()) + " for operator of size " + std::to_string(op.size()));
  }
  return f.dot(op.entries * f) * op.cell_volume();
}

/// Polarised form <M f, g> h^d.
template <class DerivedF, class DerivedG>
double form_bilinear(const OperatorMatrix& op, const Eigen::MatrixBase<DerivedF>& f,
                     const Eigen::MatrixBase<DerivedG>& g) {
  if (f.size() != op.size() || g.size() != op.size()) {
    throw Error(ErrorCode::DimensionMismatch, "form arguments do not match the operator size");
  }
  return g.dot(op.entries * f) * op.cell_volume();
}

/// Discrete L^2 inner product sum f_i g_i h^d.
template <class DerivedF, class DerivedG>
double l2_inner(const Grid& grid, const Eigen::MatrixBase<DerivedF>& f, const Eigen::MatrixBase<DerivedG>& g) {
  return f.dot(g) * grid.cell_volume();
}

struct SpectralOptions {
  Eigen::Index dense_limit = 2048;  // above this, shifted inverse iteration
  double tolerance = 1e-8;          // ||(M - V) v - lambda v|| <= tolerance ||v||
  int max_iterations = 500;
  const Vector* warm_start = nullptr;
};

struct SpectralBottom {
  double lambda0;
  Vector eigvec;  // unit Euclidean norm, nonnegative sum
  int iterations;  // 0 for the direct dense solve
  double residual;
};

/// Smallest eigenvalue of M - diag(V) with its ground eigenvector.
SpectralBottom spectral_bottom(const OperatorMatrix& op, const Vector& potential, const SpectralOptions& options = {});

/// min over f of <M f, f> / sum w_i f_i^2; the best constant in the discrete
/// weighted Hardy inequality sum w f^2 h^d <= E[f] / mu.
double discrete_hardy_constant(const OperatorMatrix& op, const Vector& weight);

/// Operator and untruncated potential on one mesh.
struct MeshLevel {
  double h;
  OperatorMatrix op;
  PotentialField potential;
};

MeshLevel build_level(const DomainSpec& domain, double alpha, const PotentialSpec& spec, double h, int threads = 1);

struct SpectralEntry {
  double h;
  double k;  // +inf means untruncated
  double epsilon;
  double lambda0;
  int iterations;
};

struct SpectralSeries {
  std::vector<SpectralEntry> entries;
  std::string potential_id;

  /// Entries at the largest k of each mesh, ordered from coarse to fine.
  std::vector<SpectralEntry> finest_k_per_mesh() const;
};

/// lambda0 of M - (1 - epsilon) V_k over every (h, k) pair. Within one mesh,
/// each k is warm-started from the previous ground state.
SpectralSeries refinement_series(const std::vector<MeshLevel>& levels, const std::vector<double>& k_schedule,
                                 double epsilon, int threads = 1, const SpectralOptions& options = {});
SpectralSeries refinement_series(const DomainSpec& domain, double alpha, const PotentialSpec& potential,
                                 const std::vector<double>& h_schedule, const std::vector<double>& k_schedule,
                                 int threads = 1, const SpectralOptions& options = {});

void write_series_csv(std::ostream& os, const SpectralSeries& series);

/// Shortest round-trip decimal form, "inf" for infinities.
std::string format_number(double v);

}  // namespace fraclab
