#include "fraclab/spectral.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>

#include "fraclab/parallel.hpp"

namespace fraclab {

namespace {

void normalize_sign(Vector& v) {
  if (v.sum() < 0.0) v = -v;
}

double residual_norm(const Matrix& a, const Vector& v, double lambda) { return (a * v - lambda * v).norm(); }

SpectralBottom dense_bottom(const Matrix& a, const SpectralOptions& options) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::ConvergenceFailure, "dense symmetric eigensolver did not converge");
  }
  Vector v = solver.eigenvectors().col(0);
  normalize_sign(v);
  const double lambda = solver.eigenvalues()[0];
  const double res = residual_norm(a, v, lambda);
  if (!(res <= options.tolerance * v.norm())) {
    throw Error(ErrorCode::ConvergenceFailure, "dense eigenpair residual " + std::to_string(res) + " above tolerance");
  }
  return {lambda, std::move(v), 0, res};
}

// Inverse iteration with a Gershgorin shift, which keeps A - sigma I a
// Stieltjes matrix so iterates stay positive, followed by Rayleigh quotient
// refinement. A strictly positive final vector is the Perron vector, hence
// the ground state.
SpectralBottom iterative_bottom(const Matrix& a, const SpectralOptions& options) {
  const Eigen::Index n = a.rows();
  const Vector radius = a.cwiseAbs().rowwise().sum() - a.diagonal().cwiseAbs();
  const double scale = std::max(1.0, a.diagonal().cwiseAbs().maxCoeff());
  const double sigma = (a.diagonal() - radius).minCoeff() - 1e-3 * scale;

  Vector x = options.warm_start && options.warm_start->size() == n ? Vector(options.warm_start->cwiseAbs())
                                                                  : Vector::Ones(n);
  x /= x.norm();
  Eigen::LLT<Matrix> shifted(a - sigma * Matrix::Identity(n, n));
  if (shifted.info() != Eigen::Success) throw Error(ErrorCode::ConvergenceFailure, "shifted factorisation failed");

  int it = 0;
  double rho = x.dot(a * x);
  double res = residual_norm(a, x, rho);
  for (; it < options.max_iterations && res > 1e-4 * scale; ++it) {
    x = shifted.solve(x);
    x /= x.norm();
    rho = x.dot(a * x);
    res = residual_norm(a, x, rho);
  }
  for (int rqi = 0; rqi < 20 && res > options.tolerance; ++rqi, ++it) {
    Eigen::PartialPivLU<Matrix> lu(a - rho * Matrix::Identity(n, n));
    Vector y = lu.solve(x);
    if (!y.allFinite()) break;
    x = y / y.norm();
    rho = x.dot(a * x);
    res = residual_norm(a, x, rho);
  }
  normalize_sign(x);
  if (!(res <= options.tolerance) || (x.array() <= 0.0).any()) {
    throw Error(ErrorCode::ConvergenceFailure,
                "inverse iteration stopped after " + std::to_string(it) + " iterations with residual " +
                    std::to_string(res));
  }
  return {rho, std::move(x), it, res};
}

}  // namespace

SpectralBottom spectral_bottom(const OperatorMatrix& op, const Vector& potential, const SpectralOptions& options) {
  if (potential.size() != op.size()) {
    throw Error(ErrorCode::DimensionMismatch, "potential size does not match the operator");
  }
  if (!potential.allFinite() || (potential.array() < 0.0).any()) {
    throw Error(ErrorCode::DomainError, "potential must be finite and nonnegative");
  }
  Matrix a = op.entries;
  a.diagonal() -= potential;
  if (op.size() <= options.dense_limit) return dense_bottom(a, options);
  return iterative_bottom(a, options);
}

double discrete_hardy_constant(const OperatorMatrix& op, const Vector& weight) {
  if (weight.size() != op.size() || (weight.array() <= 0.0).any()) {
    throw Error(ErrorCode::DomainError, "Hardy weight must be positive at every node");
  }
  const Vector s = weight.cwiseSqrt().cwiseInverse();
  Matrix a = s.asDiagonal() * op.entries * s.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw Error(ErrorCode::ConvergenceFailure, "weighted eigenproblem failed");
  return solver.eigenvalues()[0];
}

MeshLevel build_level(const DomainSpec& domain, double alpha, const PotentialSpec& spec, double h, int threads) {
  Grid grid = build_grid(domain, h);
  OperatorMatrix op = assemble_operator(grid, alpha, threads);
  PotentialField potential = sample_potential(spec, grid, alpha);
  return MeshLevel{h, std::move(op), std::move(potential)};
}

std::vector<SpectralEntry> SpectralSeries::finest_k_per_mesh() const {
  std::map<double, SpectralEntry, std::greater<>> best;
  for (const auto& e : entries) {
    auto it = best.find(e.h);
    if (it == best.end() || e.k > it->second.k) best[e.h] = e;
  }
  std::vector<SpectralEntry> out;
  for (const auto& [h, e] : best) out.push_back(e);
  return out;
}

SpectralSeries refinement_series(const std::vector<MeshLevel>& levels, const std::vector<double>& k_schedule,
                                 double epsilon, int threads, const SpectralOptions& options) {
  if (levels.empty() || k_schedule.empty()) throw Error(ErrorCode::DomainError, "schedules must be nonempty");
  for (std::size_t i = 1; i < levels.size(); ++i) {
    if (!(levels[i].h < levels[i - 1].h)) throw Error(ErrorCode::DomainError, "h schedule must be decreasing");
  }
  for (std::size_t i = 1; i < k_schedule.size(); ++i) {
    if (!(k_schedule[i] > k_schedule[i - 1])) throw Error(ErrorCode::DomainError, "k schedule must be increasing");
  }
  const std::size_t nk = k_schedule.size();
  std::vector<SpectralEntry> entries(levels.size() * nk);
  parallel_for(levels.size(), threads, [&](std::size_t li) {
    const MeshLevel& level = levels[li];
    const PotentialField probe = scaled(level.potential, 1.0 - epsilon);
    Vector previous;
    for (std::size_t ki = 0; ki < nk; ++ki) {
      const PotentialField vk = truncate(probe, k_schedule[ki]);
      SpectralOptions opts = options;
      if (previous.size() > 0) opts.warm_start = &previous;
      SpectralBottom bottom = spectral_bottom(level.op, vk.values, opts);
      entries[li * nk + ki] = {level.h, k_schedule[ki], epsilon, bottom.lambda0, bottom.iterations};
      previous = std::move(bottom.eigvec);
    }
  });
  return SpectralSeries{std::move(entries), levels.front().potential.spec.label()};
}

SpectralSeries refinement_series(const DomainSpec& domain, double alpha, const PotentialSpec& potential,
                                 const std::vector<double>& h_schedule, const std::vector<double>& k_schedule,
                                 int threads, const SpectralOptions& options) {
  std::vector<MeshLevel> levels;
  for (double h : h_schedule) levels.push_back(build_level(domain, alpha, potential, h, threads));
  return refinement_series(levels, k_schedule, potential.epsilon, threads, options);
}

std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void write_series_csv(std::ostream& os, const SpectralSeries& series) {
  os << "h,k,epsilon,lambda0,iterations\n";
  for (const auto& e : series.entries) {
    os << format_number(e.h) << ',' << format_number(e.k) << ',' << format_number(e.epsilon) << ','
       << format_number(e.lambda0) << ',' << e.iterations << '\n';
  }
}

}  // namespace fraclab
