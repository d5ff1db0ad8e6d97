#pragma once

#include <string>
#include <utility>
#include <vector>

#include "fraclab/evolution.hpp"
#include "fraclab/spectral.hpp"

namespace fraclab {

struct Certificate {
  std::string name;
  std::string inputs_digest;
  double lhs = 0.0;
  double rhs = 0.0;
  double tolerance = 0.0;
  bool satisfied = false;
  double slack = 0.0;  // rhs - lhs
  std::vector<std::pair<std::string, double>> details;

  static Certificate make(std::string name, std::string digest, double lhs, double rhs, double tolerance);
  double detail(const std::string& key) const;
};

/// E(u, phi^2 / u) <= E[phi], with the quotient set to zero off the support
/// of phi. Holds term by term in the discrete sums.
Certificate energy_inequality_certificate(const OperatorMatrix& op, const Vector& u, const Vector& phi,
                                          double tolerance = 1e-12);

/// sum Phi^2 V h^d - E[Phi] <= (t2 - t1)^-1 sum ln(u(t2) / u(t1)) Phi^2 h^d for a
/// unit-norm Phi. `potential` must be the one the trajectory was run with.
Certificate log_estimate_certificate(const Trajectory& traj, const OperatorMatrix& op, const Vector& phi,
                                     const PotentialField& potential, double t1, double t2,
                                     double relative_tolerance = 1e-10);

/// max_n ||u_n|| / (||u_0|| (1 + dt lambda0)^-n) <= 1 + tolerance.
Certificate exponential_bound_certificate(const Trajectory& traj, double lambda0, double tolerance = 1e-6);

/// Two-sided comparability of the free evolution e^{-tL} u0 with the ground
/// state: lhs = max(h/phi0) / min(h/phi0), rhs = bound. Details carry r_min,
/// r_max and min phi0 / delta^(alpha/2).
Certificate ground_state_comparability(const OperatorMatrix& op, const Vector& u0, double t, double bound,
                                       double dt = 0.0);

struct BallProbe {
  double radius;
  double volume;
  Eigen::Index nodes;
  double lambda0;
};

struct ShrinkingBallResult {
  Certificate certificate;
  std::vector<BallProbe> probes;
  double fitted_exponent;  // slope of ln|lambda0| against -ln|B| over the negative run; NaN if < 2 points
};

/// lambda0 of the (1 - epsilon) V problem on balls B_k centred at the origin.
/// Each ball gets its own grid with `nodes_per_diameter` cells across, so every
/// ball is resolved alike. Certified iff at least three consecutive balls
/// satisfy lambda0 <= -C |B_k|^(-alpha/d) with a common C > 0.
ShrinkingBallResult shrinking_ball_certificate(const DomainSpec& domain, double alpha, const PotentialSpec& potential,
                                               const std::vector<double>& radii, int nodes_per_diameter = 1024,
                                               int threads = 1);

enum class Label { Exists, BlowUp, Inconclusive };
std::string to_string(Label label);

struct Thresholds {
  double rel_tol = 0.02;
  double divergence_ratio = 1.15;
  double growth_ratio = 1.2;
  double probe_time = 0.5;
};

struct MeshEvidence {
  double h;
  double lambda0;     // at the largest k of the mesh
  double sup_norm;    // at the probe time, largest-k trajectory
  double l2_norm;
};

struct Verdict {
  Label label;
  std::vector<MeshEvidence> evidence;  // coarse to fine
  Thresholds thresholds;
  double epsilon;
  std::string reason;
};

/// EXISTS when lambda0 and the L^2 norm at the probe time are Cauchy over the
/// finest mesh pair; BLOW_UP when lambda0 decreases with successive decrements
/// growing by divergence_ratio and the sup norm grows by growth_ratio per
/// refinement; INCONCLUSIVE otherwise. Throws InsufficientEvidence for fewer
/// than three meshes or a mesh without trajectories.
Verdict classify(const SpectralSeries& series, const std::vector<Trajectory>& family, const Thresholds& thresholds);

/// Refinement estimates of the best constant in sum w f^2 h^d <= E[f] / mu,
/// with w = |x|^-alpha (interior) or dist(x, complement)^-alpha (boundary).
enum class HardyWeight { Interior, Boundary };
std::vector<std::pair<double, double>> hardy_constant_series(const DomainSpec& domain, double alpha,
                                                              HardyWeight weight, const std::vector<double>& h_schedule);

}  // namespace fraclab
