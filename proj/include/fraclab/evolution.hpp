#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "fraclab/kernel.hpp"
#include "fraclab/potentials.hpp"

namespace fraclab {

/// Backward Euler for du/dt = -(M - V) u with a factorisation that is reused
/// across steps. Construction enforces dt * max(0, -lambda0(M - V)) < 1/2, so
/// I + dt (M - V) is a Stieltjes matrix with a nonnegative inverse.
class ImplicitStepper {
 public:
  ImplicitStepper(const OperatorMatrix& op, const Vector& potential, double dt);

  /// Solves (I + dt (M - V)) w = u.
  Vector step(const Vector& u) const;
  double dt() const { return dt_; }

 private:
  double dt_;
  Eigen::LLT<Matrix> factor_;
};

Vector step(const OperatorMatrix& op, const PotentialField& potential, const Vector& u, double dt);

struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> states;
  std::optional<double> k;  // truncation level of the potential, if any
  double dt = 0.0;
  double h = 0.0;
  double cell_volume = 0.0;
  std::vector<double> l2_norms;    // sqrt(sum u_i^2 h^d)
  std::vector<double> max_values;

  std::size_t steps() const { return times.empty() ? 0 : times.size() - 1; }
  /// Index of the stored time closest to t.
  std::size_t index_of(double t) const;
};

/// Normalised indicator of the largest ball centred at the origin inside the
/// domain.
Vector inradius_indicator(const Grid& grid);

Trajectory evolve(const OperatorMatrix& op, const PotentialField& potential, const Vector& u0, double t_final,
                  double dt);

/// One trajectory per truncation level V_k = min(V, k), in schedule order, on
/// a shared time grid.
std::vector<Trajectory> monotone_family(const OperatorMatrix& op, const PotentialField& potential,
                                        const std::vector<double>& k_schedule, const Vector& u0, double t_final,
                                        double dt, int threads = 1);

/// max_n ||u_n - [S^n u_0 + sum_{m<n} dt S^(n-m) V u_m]|| / ||u_n|| with S the
/// free (V = 0) step. A left-endpoint Duhamel sum, so first order in dt.
double duhamel_residual(const Trajectory& traj, const OperatorMatrix& op, const PotentialField& potential);

/// Space-time test function and its time derivative.
struct TestFunction {
  std::function<double(double, const double*)> value;
  std::function<double(double, const double*)> time_derivative;
};

/// Largest |defect| over stored times of the weak identity
/// <u(t) phi(t) - u0 phi(0)> + int_0^t <u, -d_t phi + M phi - V phi> ds,
/// with the time integral done by the trapezoidal rule.
double variational_residual(const Trajectory& traj, const OperatorMatrix& op, const PotentialField& potential,
                            const TestFunction& phi);

/// Columns t,l2_norm,max_value.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

/// Rows t,index,value for each stored time closest to a checkpoint.
void write_state_dump(std::ostream& os, const Trajectory& traj, const std::vector<double>& checkpoints);

}  // namespace fraclab
