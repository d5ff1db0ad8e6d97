#include "fraclab/kernel.hpp"

#include <array>
#include <cmath>
#include <ostream>
#include <variant>

#include "fraclab/parallel.hpp"
#include "fraclab/quadrature.hpp"

namespace fraclab {

namespace {

constexpr double kKillingRelTol = 1e-10;

constexpr std::array<double, 5> kGlNodes = {0.1488743389816312108848260, 0.4333953941292471907992659,
                                            0.6794095682990244062343274, 0.8650633666889845107320967,
                                            0.9739065285171717200779640};
constexpr std::array<double, 5> kGlWeights = {0.2955242247147528701738930, 0.2692667193099963550912269,
                                              0.2190863625159820439955349, 0.1494513491505805931457763,
                                              0.0666713443086881375935688};

// Composite 10-point Gauss-Legendre over [0, b] with the given panel count.
template <class F>
double gauss_legendre(F&& f, double b, int panels) {
  const double width = b / panels;
  double sum = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double c = (p + 0.5) * width;
    const double r = 0.5 * width;
    double s = 0.0;
    for (int j = 0; j < 5; ++j) s += kGlWeights[j] * (f(c - r * kGlNodes[j]) + f(c + r * kGlNodes[j]));
    sum += s * r;
  }
  return sum;
}

// Integral of cos^alpha over [lo, hi] inside (-pi/2, pi/2).
double cos_power_integral(double alpha, double lo, double hi) {
  return integrate_adaptive([alpha](double phi) { return std::pow(std::cos(phi), alpha); }, lo, hi,
                            kKillingRelTol)
      .value;
}

// Complement integral of |x - y|^(-2 - alpha) in the plane, written as the
// angular integral of rho(theta)^(-alpha) / alpha with rho the ray length
// from x to the boundary. Both shapes are convex so each ray exits once.
double complement_integral_2d(const DomainSpec& domain, double alpha, const double* x) {
  if (const auto* rect = std::get_if<Rectangle>(&domain.shape())) {
    const double x1 = x[0];
    const double x2 = x[1];
    // Each face: normal distance s and tangential offsets of its endpoints.
    const std::array<std::array<double, 3>, 4> faces = {{
        {rect->a - x1, -rect->b - x2, rect->b - x2},
        {rect->a + x1, -rect->b + x2, rect->b + x2},
        {rect->b - x2, -rect->a - x1, rect->a - x1},
        {rect->b + x2, -rect->a + x1, rect->a + x1},
    }};
    double total = 0.0;
    for (const auto& [s, t1, t2] : faces) {
      total += std::pow(s, -alpha) * cos_power_integral(alpha, std::atan(t1 / s), std::atan(t2 / s));
    }
    return total / alpha;
  }
  const double R = std::get<Disk>(domain.shape()).R;
  const double r = std::hypot(x[0], x[1]);
  const double gap = (R - r) * (R + r);
  // phi is measured from the direction of x; the ray length is written in a
  // cancellation-free form.
  auto integrand = [&](double phi) {
    const double p = r * std::cos(phi);
    const double q = std::sqrt(p * p + gap);
    const double rho = p >= 0.0 ? gap / (p + q) : q - p;
    return std::pow(rho, -alpha);
  };
  return 2.0 * integrate_adaptive(integrand, 0.0, M_PI, kKillingRelTol).value / alpha;
}

}  // namespace

void check_admissible(int d, double alpha) {
  if (d != 1 && d != 2) throw Error(ErrorCode::DomainError, "dimension must be 1 or 2");
  const double upper = std::min(2.0, static_cast<double>(d));
  if (!(alpha > 0.0 && alpha < upper)) {
    throw Error(ErrorCode::DomainError,
                "alpha = " + std::to_string(alpha) + " outside (0, min(2, d)) for d = " + std::to_string(d));
  }
}

double normalization_constant(int d, double alpha) {
  check_admissible(d, alpha);
  return alpha * std::tgamma(0.5 * (d + alpha)) /
         (std::pow(2.0, 1.0 - alpha) * std::pow(M_PI, 0.5 * d) * std::tgamma(1.0 - 0.5 * alpha));
}

double killing_density_at(const DomainSpec& domain, double alpha, const double* x) {
  const int d = domain.dimension();
  const double A = normalization_constant(d, alpha);
  if (d == 1) {
    const double R = std::get<Interval>(domain.shape()).R;
    return A / alpha * (std::pow(R - x[0], -alpha) + std::pow(R + x[0], -alpha));
  }
  return A * complement_integral_2d(domain, alpha, x);
}

Vector killing_density(const Grid& grid, double alpha, int threads) {
  check_admissible(grid.dimension(), alpha);
  Vector kappa(grid.size());
  parallel_for(static_cast<std::size_t>(grid.size()), threads, [&](std::size_t i) {
    kappa[static_cast<Eigen::Index>(i)] =
        killing_density_at(grid.domain, alpha, grid.point(static_cast<Eigen::Index>(i)));
  });
  return kappa;
}

OperatorMatrix assemble_operator(const Grid& grid, double alpha, int threads) {
  const int d = grid.dimension();
  const double A = normalization_constant(d, alpha);
  const Eigen::Index n = grid.size();
  if (n > kMaxDenseNodes) {
    throw Error(ErrorCode::AllocationError,
                std::to_string(n) + " nodes exceed the dense limit of " + std::to_string(kMaxDenseNodes));
  }
  Vector kappa = killing_density(grid, alpha, threads);
  const double weight = A * grid.cell_volume();
  const double exponent = -0.5 * (d + alpha);

  Matrix entries(n, n);
  // Column j is filled from squared distances, which are bitwise symmetric,
  // so entries == entries^T exactly.
  parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t col) {
    const auto j = static_cast<Eigen::Index>(col);
    const double* xj = grid.point(j);
    double off_sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (i == j) continue;
      const double* xi = grid.point(i);
      double r2 = 0.0;
      for (int a = 0; a < d; ++a) r2 += (xi[a] - xj[a]) * (xi[a] - xj[a]);
      const double w = weight * std::pow(r2, exponent);
      entries(i, j) = -w;
      off_sum += w;
    }
    entries(j, j) = off_sum + kappa[j];
  });
  return OperatorMatrix{std::move(entries), alpha, grid, std::move(kappa)};
}

double GaussianBump::operator()(const double* x, int d) const {
  double r2 = 0.0;
  for (int a = 0; a < d; ++a) r2 += x[a] * x[a];
  return amplitude * std::exp(-width * r2);
}

double FourierCheck::relative_gap() const {
  if (fourier == 0.0) return discrete == 0.0 ? 0.0 : INFINITY;
  return std::abs(discrete - fourier) / std::abs(fourier);
}

FourierCheck fourier_form_check(const OperatorMatrix& op, const GaussianBump& f, const FourierCheckOptions& options) {
  const Grid& grid = op.grid;
  const int d = grid.dimension();
  const double alpha = op.alpha;
  if (std::holds_alternative<Rectangle>(grid.domain.shape())) {
    throw Error(ErrorCode::UnsupportedFunction, "the cut-off bump needs a radially symmetric domain");
  }
  if (alpha >= 1.0) {
    throw Error(ErrorCode::UnsupportedFunction, "a function with a jump at the boundary has infinite energy for alpha >= 1");
  }
  const double R = grid.domain.inradius();

  Vector samples(grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i) samples[i] = f(grid.point(i), d);
  const double discrete = samples.dot(op.entries * samples) * grid.cell_volume();

  if (f.amplitude == 0.0) return {discrete, 0.0};

  const auto profile = [&](double r) { return f.amplitude * std::exp(-f.width * r * r); };
  // Real, radial transform f^(xi).
  const auto transform = [&](double xi) {
    const int panels = 4 + static_cast<int>(std::ceil(xi * R / M_PI));
    if (d == 1) return 2.0 * gauss_legendre([&](double x) { return profile(x) * std::cos(xi * x); }, R, panels);
    return 2.0 * M_PI *
           gauss_legendre([&](double r) { return profile(r) * std::cyl_bessel_j(0.0, xi * r) * r; }, R, panels);
  };
  // Spectral density of the energy, already carrying (2 pi)^-d and the
  // angular measure: 1/pi for d = 1, 1/(2 pi) * rho for d = 2.
  const auto density = [&](double xi) {
    const double fh = transform(xi);
    const double jac = d == 1 ? 1.0 / M_PI : xi / (2.0 * M_PI);
    return jac * std::pow(xi, alpha) * fh * fh;
  };

  const double xi_max = options.xi_max_times_radius / R;
  const int panels = std::max(1, options.modes / 16);
  const double width = xi_max / panels;
  // The first panel carries the xi^alpha cusp at the origin.
  double fourier = integrate_adaptive(density, 0.0, width, 1e-12).value;
  for (int p = 1; p < panels; ++p) {
    fourier += integrate_adaptive(density, p * width, (p + 1) * width, 1.0, 0.0, 1).value;
  }
  // Boundary jump g(R) dominates the tail: mean |f^|^2 ~ 2 g^2 / xi^2 in d = 1
  // and 4 pi g^2 R / xi^3 in d = 2.
  const double g = profile(R);
  const double tail_scale = d == 1 ? 2.0 * g * g / M_PI : 2.0 * g * g * R;
  fourier += tail_scale * std::pow(xi_max, alpha - 1.0) / (1.0 - alpha);
  return {discrete, fourier};
}

FourierCheck fourier_form_check(const GaussianBump& f, double alpha, const Grid& grid,
                                const FourierCheckOptions& options) {
  return fourier_form_check(assemble_operator(grid, alpha), f, options);
}

void write_matrix_market(std::ostream& os, const Matrix& m) {
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << m.rows() << ' ' << m.cols() << ' ' << m.size() << '\n';
  os.precision(17);
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) os << i + 1 << ' ' << j + 1 << ' ' << m(i, j) << '\n';
  }
}

}  // namespace fraclab
