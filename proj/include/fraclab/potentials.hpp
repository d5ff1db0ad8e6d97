#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fraclab/geometry.hpp"

namespace fraclab {

/// Sharp constant of the fractional Hardy inequality,
/// 2^alpha Gamma^2((d + alpha)/4) / Gamma^2((d - alpha)/4).
double hardy_sharp_constant(int d, double alpha);

struct HardyInterior {
  double c;  // V = c / |x|^alpha
};

struct HardyBoundary {
  double kappa;  // V = kappa / dist(x, complement)^alpha
};

/// Closed-form bounded potential. `expr` is either a number ("1.5") or
/// "gaussian(a,w)" for a * exp(-|x|^2 / w^2).
struct Bounded {
  std::string expr;
};

/// Node-indexed samples, e.g. read from a CSV table.
struct Custom {
  std::vector<double> values;
};

struct PotentialSpec {
  std::variant<HardyInterior, HardyBoundary, Bounded, Custom> kind;
  double epsilon = 0.01;  // reserve used by the (1 - epsilon) V probes

  void validate() const;  // throws DomainError
  std::string label() const;
  /// True where the potential family is outside the setting the theory covers
  /// (boundary Hardy in one dimension).
  bool unsupported_by_theory(int d) const;
};

struct PotentialField {
  Vector values;
  std::optional<double> truncation_k;
  PotentialSpec spec;
  Grid grid;

  Eigen::Index size() const { return values.size(); }
};

PotentialField sample_potential(const PotentialSpec& spec, const Grid& grid, double alpha);

/// Pointwise min(V, k). Truncating an already truncated field keeps the
/// smaller level.
PotentialField truncate(const PotentialField& field, double k);

PotentialField scaled(const PotentialField& field, double factor);

/// Reads "index,value" rows (with that header) and checks them against the
/// grid size.
Custom read_custom_table(const std::string& path, Eigen::Index expected_nodes);

}  // namespace fraclab
