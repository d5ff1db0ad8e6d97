#include "fraclab/evolution.hpp"

#include <cmath>
#include <ostream>

#include "fraclab/parallel.hpp"
#include "fraclab/spectral.hpp"

namespace fraclab {

namespace {

void record(Trajectory& traj, double t, Vector state) {
  traj.times.push_back(t);
  traj.l2_norms.push_back(std::sqrt(state.squaredNorm() * traj.cell_volume));
  traj.max_values.push_back(state.maxCoeff());
  traj.states.push_back(std::move(state));
}

}  // namespace

ImplicitStepper::ImplicitStepper(const OperatorMatrix& op, const Vector& potential, double dt) : dt_(dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorCode::DomainError, "time step must be positive");
  if (potential.size() != op.size()) throw Error(ErrorCode::DimensionMismatch, "potential size does not match operator");
  const Eigen::Index n = op.size();
  Matrix generator = dt * op.entries;
  generator.diagonal() -= dt * potential;
  // 1/2 I + dt (M - V) is positive definite iff dt * lambda0 > -1/2.
  Matrix margin = generator;
  margin.diagonal().array() += 0.5;
  if (Eigen::LLT<Matrix>(margin).info() != Eigen::Success) {
    throw Error(ErrorCode::StepTooLarge, "dt = " + std::to_string(dt) + " violates dt * max(0, -lambda0) < 1/2");
  }
  generator.diagonal().array() += 1.0;
  factor_.compute(generator);
  if (factor_.info() != Eigen::Success) throw Error(ErrorCode::SolveFailure, "Cholesky factorisation failed");
  (void)n;
}

Vector ImplicitStepper::step(const Vector& u) const {
  Vector w = factor_.solve(u);
  if (!w.allFinite()) throw Error(ErrorCode::SolveFailure, "non-finite state after solve");
  return w;
}

Vector step(const OperatorMatrix& op, const PotentialField& potential, const Vector& u, double dt) {
  return ImplicitStepper(op, potential.values, dt).step(u);
}

std::size_t Trajectory::index_of(double t) const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (std::abs(times[i] - t) < std::abs(times[best] - t)) best = i;
  }
  return best;
}

Vector inradius_indicator(const Grid& grid) {
  const double radius = grid.domain.inradius();
  const Vector r = radial_distance(grid);
  Vector u = (r.array() < radius).cast<double>();
  const double norm = std::sqrt(u.squaredNorm() * grid.cell_volume());
  if (norm == 0.0) throw Error(ErrorCode::EmptyGrid, "no node inside the inradius ball");
  return u / norm;
}

Trajectory evolve(const OperatorMatrix& op, const PotentialField& potential, const Vector& u0, double t_final,
                  double dt) {
  if (u0.size() != op.size()) throw Error(ErrorCode::DimensionMismatch, "initial state size does not match operator");
  if ((u0.array() < 0.0).any() || !(u0.maxCoeff() > 0.0)) {
    throw Error(ErrorCode::DomainError, "initial state must be nonnegative and not identically zero");
  }
  if (!(t_final > 0.0) || !(dt > 0.0)) throw Error(ErrorCode::DomainError, "t_final and dt must be positive");
  const auto steps = static_cast<long>(std::llround(t_final / dt));
  if (steps < 1 || std::abs(steps * dt - t_final) > 1e-9 * t_final) {
    throw Error(ErrorCode::DomainError, "t_final must be a whole number of steps");
  }
  const ImplicitStepper stepper(op, potential.values, dt);
  Trajectory traj;
  traj.k = potential.truncation_k;
  traj.dt = dt;
  traj.h = op.grid.h;
  traj.cell_volume = op.cell_volume();
  traj.times.reserve(static_cast<std::size_t>(steps) + 1);
  record(traj, 0.0, u0);
  for (long n = 1; n <= steps; ++n) {
    Vector next = stepper.step(traj.states.back());
    record(traj, static_cast<double>(n) * dt, std::move(next));
  }
  return traj;
}

std::vector<Trajectory> monotone_family(const OperatorMatrix& op, const PotentialField& potential,
                                        const std::vector<double>& k_schedule, const Vector& u0, double t_final,
                                        double dt, int threads) {
  for (std::size_t i = 1; i < k_schedule.size(); ++i) {
    if (!(k_schedule[i] > k_schedule[i - 1])) throw Error(ErrorCode::DomainError, "k schedule must be increasing");
  }
  std::vector<Trajectory> family(k_schedule.size());
  parallel_for(k_schedule.size(), threads, [&](std::size_t i) {
    family[i] = evolve(op, truncate(potential, k_schedule[i]), u0, t_final, dt);
  });
  return family;
}

double duhamel_residual(const Trajectory& traj, const OperatorMatrix& op, const PotentialField& potential) {
  if (traj.states.empty()) return 0.0;
  const ImplicitStepper free_step(op, Vector::Zero(op.size()), traj.dt);
  Vector duhamel = traj.states.front();
  double worst = 0.0;
  for (std::size_t n = 1; n < traj.states.size(); ++n) {
    const Vector& previous = traj.states[n - 1];
    duhamel = free_step.step(duhamel + traj.dt * potential.values.cwiseProduct(previous));
    const double scale = traj.states[n].norm();
    if (scale > 0.0) worst = std::max(worst, (traj.states[n] - duhamel).norm() / scale);
  }
  return worst;
}

double variational_residual(const Trajectory& traj, const OperatorMatrix& op, const PotentialField& potential,
                            const TestFunction& phi) {
  const Grid& grid = op.grid;
  const Eigen::Index n = op.size();
  const auto sample = [&](const std::function<double(double, const double*)>& f, double t) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = f(t, grid.point(i));
    return v;
  };
  const double hd = op.cell_volume();
  const Vector phi0 = sample(phi.value, 0.0);
  const double initial = traj.states.front().dot(phi0) * hd;

  // Integrand <u, -d_t phi + (M - V) phi> at each stored time.
  std::vector<double> integrand(traj.states.size());
  for (std::size_t s = 0; s < traj.states.size(); ++s) {
    const double t = traj.times[s];
    const Vector p = sample(phi.value, t);
    const Vector action = -sample(phi.time_derivative, t) + op.entries * p - potential.values.cwiseProduct(p);
    integrand[s] = traj.states[s].dot(action) * hd;
  }
  double integral = 0.0;
  double worst = 0.0;
  for (std::size_t s = 1; s < traj.states.size(); ++s) {
    integral += 0.5 * (traj.times[s] - traj.times[s - 1]) * (integrand[s] + integrand[s - 1]);
    const double boundary = traj.states[s].dot(sample(phi.value, traj.times[s])) * hd - initial;
    worst = std::max(worst, std::abs(boundary + integral));
  }
  return worst;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  os << "t,l2_norm,max_value\n";
  for (std::size_t s = 0; s < traj.times.size(); ++s) {
    os << format_number(traj.times[s]) << ',' << format_number(traj.l2_norms[s]) << ','
       << format_number(traj.max_values[s]) << '\n';
  }
}

void write_state_dump(std::ostream& os, const Trajectory& traj, const std::vector<double>& checkpoints) {
  os << "t,index,value\n";
  for (double t : checkpoints) {
    const std::size_t s = traj.index_of(t);
    const Vector& u = traj.states[s];
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      os << format_number(traj.times[s]) << ',' << i << ',' << format_number(u[i]) << '\n';
    }
  }
}

}  // namespace fraclab
