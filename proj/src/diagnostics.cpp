#include "fraclab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "fraclab/digest.hpp"
#include "fraclab/parallel.hpp"

namespace fraclab {

Certificate Certificate::make(std::string name, std::string digest, double lhs, double rhs, double tolerance) {
  Certificate c;
  c.name = std::move(name);
  c.inputs_digest = std::move(digest);
  c.lhs = lhs;
  c.rhs = rhs;
  c.tolerance = tolerance;
  c.satisfied = lhs <= rhs + tolerance;
  c.slack = rhs - lhs;
  return c;
}

double Certificate::detail(const std::string& key) const {
  for (const auto& [k, v] : details) {
    if (k == key) return v;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

Certificate energy_inequality_certificate(const OperatorMatrix& op, const Vector& u, const Vector& phi,
                                          double tolerance) {
  if (u.size() != op.size() || phi.size() != op.size()) {
    throw Error(ErrorCode::DimensionMismatch, "state sizes do not match the operator");
  }
  Vector quotient = Vector::Zero(op.size());
  for (Eigen::Index i = 0; i < op.size(); ++i) {
    if (phi[i] == 0.0) continue;
    if (!(u[i] > 0.0)) {
      throw Error(ErrorCode::NonpositiveState, "u is not positive at node " + std::to_string(i));
    }
    quotient[i] = phi[i] * phi[i] / u[i];
  }
  const double lhs = form_bilinear(op, u, quotient);
  const double rhs = form_energy(op, phi);
  return Certificate::make("energy_inequality", Digest().add(u).add(phi).hex(), lhs, rhs, tolerance);
}

namespace {

std::size_t stored_index(const Trajectory& traj, double t) {
  const std::size_t i = traj.index_of(t);
  if (std::abs(traj.times[i] - t) > 1e-9 * std::max(1.0, std::abs(t))) {
    throw Error(ErrorCode::DomainError, "time " + std::to_string(t) + " is not on the trajectory grid");
  }
  return i;
}

}  // namespace

Certificate log_estimate_certificate(const Trajectory& traj, const OperatorMatrix& op, const Vector& phi,
                                     const PotentialField& potential, double t1, double t2,
                                     double relative_tolerance) {
  if (!(0.0 < t1 && t1 < t2)) throw Error(ErrorCode::DomainError, "need 0 < t1 < t2");
  if (phi.size() != op.size() || potential.size() != op.size()) {
    throw Error(ErrorCode::DimensionMismatch, "test function or potential does not match the operator");
  }
  const double hd = op.cell_volume();
  const double mass = phi.squaredNorm() * hd;
  if (std::abs(mass - 1.0) > 1e-8) throw Error(ErrorCode::DomainError, "Phi must satisfy sum Phi^2 h^d = 1");
  const Vector& u1 = traj.states[stored_index(traj, t1)];
  const Vector& u2 = traj.states[stored_index(traj, t2)];

  double log_term = 0.0;
  for (Eigen::Index i = 0; i < phi.size(); ++i) {
    if (phi[i] == 0.0) continue;
    if (!(u1[i] > 0.0) || !(u2[i] > 0.0)) {
      throw Error(ErrorCode::NonpositiveState, "trajectory not positive at node " + std::to_string(i));
    }
    log_term += std::log(u2[i] / u1[i]) * phi[i] * phi[i];
  }
  const double lhs = phi.cwiseAbs2().dot(potential.values) * hd - form_energy(op, phi);
  const double rhs = log_term * hd / (t2 - t1);
  const double tol = relative_tolerance * std::max({1.0, std::abs(lhs), std::abs(rhs)});
  Certificate c =
      Certificate::make("log_estimate", Digest().add(phi).add(potential.values).add(t1).add(t2).add(u1).add(u2).hex(),
                        lhs, rhs, tol);
  c.details = {{"t1", t1}, {"t2", t2}};
  return c;
}

Certificate exponential_bound_certificate(const Trajectory& traj, double lambda0, double tolerance) {
  const double decay = 1.0 + traj.dt * lambda0;
  if (!(decay > 0.0)) throw Error(ErrorCode::StepTooLarge, "1 + dt * lambda0 must be positive");
  double worst = 0.0;
  const double initial = traj.l2_norms.front();
  for (std::size_t n = 0; n < traj.l2_norms.size(); ++n) {
    const double bound = initial * std::pow(decay, -static_cast<double>(n));
    worst = std::max(worst, traj.l2_norms[n] / bound);
  }
  Digest digest;
  for (double v : traj.l2_norms) digest.add(v);
  Certificate c = Certificate::make("exponential_bound", digest.add(lambda0).hex(), worst, 1.0, tolerance);
  c.details = {{"lambda0", lambda0}, {"dt", traj.dt}};
  return c;
}

Certificate ground_state_comparability(const OperatorMatrix& op, const Vector& u0, double t, double bound, double dt) {
  if (!(t > 0.0)) throw Error(ErrorCode::DomainError, "comparability time must be positive");
  if (dt <= 0.0) dt = t / 100.0;
  const Vector zero = Vector::Zero(op.size());
  const PotentialField free{zero, std::nullopt, PotentialSpec{Bounded{"0"}}, op.grid};
  const Trajectory traj = evolve(op, free, u0, t, dt);
  Vector ground = spectral_bottom(op, zero).eigvec;
  ground /= std::sqrt(ground.squaredNorm() * op.cell_volume());

  const Vector ratio = traj.states.back().cwiseQuotient(ground);
  const double r_min = ratio.minCoeff();
  const double r_max = ratio.maxCoeff();
  const Vector delta = boundary_distance(op.grid);
  const double boundary_fit = ground.cwiseQuotient(delta.array().pow(0.5 * op.alpha).matrix()).minCoeff();

  Certificate c = Certificate::make("ground_state_comparability", Digest().add(u0).add(t).hex(), r_max / r_min,
                                    bound, 0.0);
  c.details = {{"r_min", r_min}, {"r_max", r_max}, {"min_phi0_over_delta_pow", boundary_fit}, {"t", t}};
  return c;
}

ShrinkingBallResult shrinking_ball_certificate(const DomainSpec& domain, double alpha, const PotentialSpec& potential,
                                               const std::vector<double>& radii, int nodes_per_diameter,
                                               int threads) {
  const int d = domain.dimension();
  check_admissible(d, alpha);
  potential.validate();
  if (std::holds_alternative<Custom>(potential.kind)) {
    throw Error(ErrorCode::DomainError, "custom potential tables cannot be resampled on balls");
  }
  if (radii.size() < 3) throw Error(ErrorCode::DomainError, "need at least three balls");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0) || radii[i] > domain.inradius()) {
      throw Error(ErrorCode::DomainError, "ball radius must lie in (0, inradius]");
    }
    if (i > 0 && !(radii[i] < radii[i - 1])) throw Error(ErrorCode::DomainError, "ball radii must decrease");
  }

  std::vector<BallProbe> probes(radii.size());
  parallel_for(radii.size(), threads, [&](std::size_t b) {
    const double r = radii[b];
    const DomainSpec ball = d == 1 ? DomainSpec::interval(r) : DomainSpec::disk(r);
    const Grid grid = build_grid(ball, 2.0 * r / nodes_per_diameter);
    if (grid.size() < 8) {
      throw Error(ErrorCode::BallTooSmall, "ball of radius " + std::to_string(r) + " holds fewer than 8 nodes");
    }
    const OperatorMatrix op = assemble_operator(grid, alpha);
    Vector v;
    if (const auto* hb = std::get_if<HardyBoundary>(&potential.kind)) {
      // Boundary distance of the parent domain, not of the ball.
      v.resize(grid.size());
      for (Eigen::Index i = 0; i < grid.size(); ++i) {
        v[i] = hb->kappa * std::pow(domain.distance_to_complement(grid.point(i)), -alpha);
      }
    } else {
      v = sample_potential(potential, grid, alpha).values;
    }
    const double lambda0 = spectral_bottom(op, ((1.0 - potential.epsilon) * v).eval()).lambda0;
    probes[b] = {r, ball.volume(), grid.size(), lambda0};
  });

  const double power = alpha / d;
  // Best window of three consecutive balls: smallest worst-case scaled lambda0.
  double best_window = std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b + 2 < probes.size(); ++b) {
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t j = b; j < b + 3; ++j) worst = std::max(worst, probes[j].lambda0 * std::pow(probes[j].volume, power));
    best_window = std::min(best_window, worst);
  }

  // Longest run of negative lambda0 for the exponent fit.
  std::size_t run_start = 0, run_len = 0;
  for (std::size_t b = 0; b < probes.size();) {
    if (probes[b].lambda0 >= 0.0) {
      ++b;
      continue;
    }
    std::size_t e = b;
    while (e < probes.size() && probes[e].lambda0 < 0.0) ++e;
    if (e - b > run_len) {
      run_start = b;
      run_len = e - b;
    }
    b = e;
  }
  double exponent = std::numeric_limits<double>::quiet_NaN();
  if (run_len >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t j = run_start; j < run_start + run_len; ++j) {
      const double x = -std::log(probes[j].volume);
      const double y = std::log(-probes[j].lambda0);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double m = static_cast<double>(run_len);
    exponent = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  }

  Digest digest;
  digest.add(domain.describe()).add(alpha).add(potential.label()).add(potential.epsilon);
  for (double r : radii) digest.add(r);
  Certificate c = Certificate::make("shrinking_ball", digest.hex(), best_window, 0.0, 0.0);
  c.details = {{"fitted_C", -best_window}, {"fitted_exponent", exponent}, {"expected_exponent", power}};
  return {std::move(c), std::move(probes), exponent};
}

std::string to_string(Label label) {
  switch (label) {
    case Label::Exists: return "EXISTS";
    case Label::BlowUp: return "BLOW_UP";
    case Label::Inconclusive: return "INCONCLUSIVE";
  }
  return "INCONCLUSIVE";
}

Verdict classify(const SpectralSeries& series, const std::vector<Trajectory>& family, const Thresholds& thresholds) {
  const std::vector<SpectralEntry> bottoms = series.finest_k_per_mesh();
  if (bottoms.size() < 3) {
    throw Error(ErrorCode::InsufficientEvidence, "classification needs at least three mesh levels");
  }
  const double epsilon = bottoms.front().epsilon;

  // Largest-k trajectory of each mesh.
  std::map<double, const Trajectory*> chosen;
  for (const auto& traj : family) {
    const double k = traj.k.value_or(std::numeric_limits<double>::infinity());
    auto it = chosen.find(traj.h);
    if (it == chosen.end() || k > it->second->k.value_or(std::numeric_limits<double>::infinity())) {
      chosen[traj.h] = &traj;
    }
  }
  std::vector<MeshEvidence> evidence;
  for (const auto& e : bottoms) {
    auto it = chosen.find(e.h);
    if (it == chosen.end()) {
      throw Error(ErrorCode::InsufficientEvidence, "no trajectory for mesh h = " + format_number(e.h));
    }
    const Trajectory& traj = *it->second;
    const std::size_t s = traj.index_of(thresholds.probe_time);
    if (std::abs(traj.times[s] - thresholds.probe_time) > 0.5 * traj.dt) {
      throw Error(ErrorCode::InsufficientEvidence, "trajectory does not reach the probe time");
    }
    evidence.push_back({e.h, e.lambda0, traj.max_values[s], traj.l2_norms[s]});
  }

  const std::size_t m = evidence.size();
  const MeshEvidence& fine = evidence[m - 1];
  const MeshEvidence& prev = evidence[m - 2];
  const bool lambda_cauchy = std::abs(fine.lambda0 - prev.lambda0) <= thresholds.rel_tol * std::abs(fine.lambda0);
  const bool norm_cauchy = std::abs(fine.l2_norm - prev.l2_norm) <= thresholds.rel_tol * std::abs(fine.l2_norm);

  bool decreasing = true;
  bool decrements_grow = true;
  bool sup_grows = true;
  for (std::size_t j = 1; j < m; ++j) {
    const double step = evidence[j].lambda0 - evidence[j - 1].lambda0;
    decreasing = decreasing && step < 0.0;
    if (j >= 2) {
      const double before = evidence[j - 1].lambda0 - evidence[j - 2].lambda0;
      decrements_grow = decrements_grow && before < 0.0 && step / before >= thresholds.divergence_ratio;
    }
    sup_grows = sup_grows && evidence[j].sup_norm >= thresholds.growth_ratio * evidence[j - 1].sup_norm;
  }

  Verdict verdict{Label::Inconclusive, evidence, thresholds, epsilon, ""};
  std::ostringstream why;
  if (lambda_cauchy && norm_cauchy) {
    verdict.label = Label::Exists;
    why << "lambda0 and L2 norm stabilise over the finest mesh pair";
  } else if (decreasing && decrements_grow && sup_grows) {
    verdict.label = Label::BlowUp;
    why << "lambda0 decrements grow geometrically and the sup norm grows under refinement";
  } else {
    why << "lambda0 cauchy=" << lambda_cauchy << " norm cauchy=" << norm_cauchy << " decreasing=" << decreasing
        << " decrements grow=" << decrements_grow << " sup grows=" << sup_grows;
  }
  verdict.reason = why.str();
  return verdict;
}

std::vector<std::pair<double, double>> hardy_constant_series(const DomainSpec& domain, double alpha,
                                                              HardyWeight weight, const std::vector<double>& h_schedule) {
  std::vector<std::pair<double, double>> out;
  for (double h : h_schedule) {
    const Grid grid = build_grid(domain, h);
    const OperatorMatrix op = assemble_operator(grid, alpha);
    const Vector dist = weight == HardyWeight::Interior ? radial_distance(grid) : boundary_distance(grid);
    out.emplace_back(h, discrete_hardy_constant(op, dist.array().pow(-alpha).matrix()));
  }
  return out;
}

}  // namespace fraclab
