#pragma once

#include <iosfwd>

#include "fraclab/geometry.hpp"

namespace fraclab {

/// Normalisation A(d, alpha) of the singular kernel A / |x - y|^(d + alpha).
/// Throws DomainError unless 0 < alpha < min(2, d).
double normalization_constant(int d, double alpha);

/// Throws DomainError unless 0 < alpha < min(2, d) and d is 1 or 2.
void check_admissible(int d, double alpha);

/// kappa(x) = A(d, alpha) * integral over the complement of |x - y|^(-d - alpha).
double killing_density_at(const DomainSpec& domain, double alpha, const double* x);
Vector killing_density(const Grid& grid, double alpha, int threads = 1);

/// Dense symmetric discretisation of the localised fractional Laplacian.
///
/// entries(i, j) = -A h^d / |x_i - x_j|^(d + alpha) for i != j and
/// entries(i, i) = sum_{j != i} A h^d / |x_i - x_j|^(d + alpha) + kappa_i, so
/// <entries f, f> h^d is the discrete form: the kernel double sum plus the
/// killing term.
struct OperatorMatrix {
  Matrix entries;
  double alpha;
  Grid grid;
  Vector kappa;

  Eigen::Index size() const { return entries.rows(); }
  double cell_volume() const { return grid.cell_volume(); }
};

inline constexpr Eigen::Index kMaxDenseNodes = 8192;

OperatorMatrix assemble_operator(const Grid& grid, double alpha, int threads = 1);

/// Gaussian bump amplitude * exp(-width * |x|^2) cut off at the domain
/// boundary. Supported on intervals and disks centred at the origin.
struct GaussianBump {
  double amplitude = 1.0;
  double width = 8.0;

  double operator()(const double* x, int d) const;
};

struct FourierCheckOptions {
  int modes = 1 << 16;
  double xi_max_times_radius = 1024.0;  // frequency cut-off scaled by 1/R
};

struct FourierCheck {
  double discrete;  // <M f, f> h^d
  double fourier;   // (2 pi)^-d * integral |xi|^alpha |f^(xi)|^2
  double relative_gap() const;
};

/// Compares the discrete form energy of a bump with its Fourier-side energy.
/// Throws UnsupportedFunction for rectangles and for alpha >= 1, where the
/// cut-off bump has infinite energy.
FourierCheck fourier_form_check(const OperatorMatrix& op, const GaussianBump& f,
                                const FourierCheckOptions& options = {});
FourierCheck fourier_form_check(const GaussianBump& f, double alpha, const Grid& grid,
                                const FourierCheckOptions& options = {});

/// Coordinate-format dump for debugging.
void write_matrix_market(std::ostream& os, const Matrix& m);

}  // namespace fraclab
