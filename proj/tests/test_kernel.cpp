#include <doctest.h>

#include <cmath>
#include <sstream>

#include "fraclab/kernel.hpp"
#include "fraclab/spectral.hpp"
#include "oracles.hpp"

using namespace fraclab;

// Regression fixture from the h-refinement study of the free problem.
constexpr double FREE_LAMBDA_H001 = 0.96962079603037077;

TEST_SUITE("kernel") {
  TEST_CASE("normalisation constant against the 50-digit oracle") {
    CHECK(std::abs(normalization_constant(1, 0.5) - 1 / (2 * std::sqrt(2 * M_PI))) < 1e-14);
    CHECK(std::abs(normalization_constant(2, 1.0) - 1 / (2 * M_PI)) < 1e-14);
    for (int d : {1, 2})
      for (double a : {0.1, 0.3, 0.5, 0.75, 0.9, 1.2, 1.7})
        if (a < d) {
          const double ref = oracle::normalization_constant(d, a);
          CHECK(std::abs(normalization_constant(d, a) - ref) <= 1e-13 * ref);
        }
    CHECK_THROWS_AS(normalization_constant(1, 1.5), Error);
    CHECK_THROWS_AS(normalization_constant(2, 0.0), Error);
    CHECK_THROWS_AS(check_admissible(3, 0.5), Error);
  }

  TEST_CASE("interval killing density closed form") {
    const double x0[1] = {0.0};
    CHECK(killing_density_at(DomainSpec::interval(1.0), 0.5, x0) == doctest::Approx(0.7978845608028654).epsilon(1e-14));
    const Grid g = build_grid(DomainSpec::interval(1.0), 0.05);
    const Vector k = killing_density(g, 0.5);
    for (Eigen::Index i = 0; i < g.size(); ++i) CHECK(k[i] == doctest::Approx(k[g.size() - 1 - i]).epsilon(1e-14));
  }

  TEST_CASE("disk killing density") {
    const double centre[2] = {0.0, 0.0};
    CHECK(killing_density_at(DomainSpec::disk(1.0), 1.0, centre) == doctest::Approx(1.0).epsilon(1e-10));
    for (double alpha : {0.4, 1.0, 1.6})
      for (double s : {0.0, 0.3, 0.7, 0.95}) {
        const double x[2] = {s, 0.0};
        const double ref = oracle::disk_kappa(1.0, alpha, s);
        CHECK(killing_density_at(DomainSpec::disk(1.0), alpha, x) == doctest::Approx(ref).epsilon(1e-8));
      }
    // rotation invariance
    const double a[2] = {0.5, 0.0}, b[2] = {0.3, 0.4};
    CHECK(killing_density_at(DomainSpec::disk(1.0), 0.8, a) ==
          doctest::Approx(killing_density_at(DomainSpec::disk(1.0), 0.8, b)).epsilon(1e-10));
  }

  TEST_CASE("rectangle killing density against half-plane inclusion-exclusion") {
    const DomainSpec rect = DomainSpec::rectangle(1.0, 0.5);
    for (double alpha : {0.5, 1.0, 1.5})
      for (auto [x, y] : {std::pair{0.0, 0.0}, {0.4, -0.2}, {-0.9, 0.45}}) {
        const double p[2] = {x, y};
        const double ref = oracle::rectangle_kappa(1.0, 0.5, alpha, x, y);
        CHECK(killing_density_at(rect, alpha, p) == doctest::Approx(ref).epsilon(1e-8));
      }
  }

  TEST_CASE("single node operator is its killing density") {
    const Grid g = build_grid(DomainSpec::interval(1.0), 1.5);
    REQUIRE(g.size() == 1);
    const OperatorMatrix op = assemble_operator(g, 0.5);
    CHECK(op.entries(0, 0) == op.kappa[0]);
  }

  TEST_CASE("operator invariants") {
    for (auto [dom, alpha, h] : {std::tuple{DomainSpec::interval(1.0), 0.5, 1.0 / 32},
                                 std::tuple{DomainSpec::disk(1.0), 1.0, 0.2},
                                 std::tuple{DomainSpec::rectangle(1.0, 0.5), 1.5, 0.125}}) {
      const OperatorMatrix op = assemble_operator(build_grid(dom, h), alpha);
      const Matrix& L = op.entries;
      CHECK((L.array() == L.transpose().array()).all());
      Matrix off = L;
      off.diagonal().setZero();
      CHECK(off.maxCoeff() <= 0.0);
      CHECK(L.diagonal().minCoeff() > 0.0);
      const Vector rows = L.rowwise().sum();
      CHECK(((rows - op.kappa).cwiseAbs().array() <= 1e-10 * L.diagonal().array()).all());
      CHECK(op.kappa.minCoeff() > 0.0);
      // positive definite
      CHECK(Eigen::LLT<Matrix>(L).info() == Eigen::Success);
      // the implicit step is a sub-Markov operator: nonnegative with row sums at most 1
      const double dt = 0.05;
      const Matrix R = (Matrix::Identity(L.rows(), L.cols()) + dt * L).inverse();
      CHECK(R.minCoeff() >= -1e-14);
      CHECK(R.rowwise().sum().maxCoeff() <= 1.0 + 1e-12);
    }
  }

  TEST_CASE("assembly cap") {
    // 8193 cells across the interval
    CHECK_THROWS_AS(assemble_operator(build_grid(DomainSpec::interval(1.0), 2.0 / 8193.0), 0.5), Error);
  }

  TEST_CASE("form identity matches the pairwise sum") {
    const Grid g = build_grid(DomainSpec::interval(1.0), 1.0 / 16);
    const double alpha = 0.5;
    const OperatorMatrix op = assemble_operator(g, alpha);
    const Vector f = Vector::LinSpaced(g.size(), 0.0, 1.0).array().sin();
    const double A = normalization_constant(1, alpha);
    const double h = g.h;
    double pair = 0, kill = 0;
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      kill += f[i] * f[i] * op.kappa[i] * h;
      for (Eigen::Index j = 0; j < g.size(); ++j)
        if (i != j) {
          const double r = std::abs(g.points(i, 0) - g.points(j, 0));
          pair += 0.5 * A * (f[i] - f[j]) * (f[i] - f[j]) * h * h / std::pow(r, 1 + alpha);
        }
    }
    CHECK(form_energy(op, f) == doctest::Approx(pair + kill).epsilon(1e-12));
  }

  TEST_CASE("domain monotonicity") {
    const double h = 1.0 / 32;
    const OperatorMatrix big = assemble_operator(build_grid(DomainSpec::interval(1.0), h), 0.5);
    const OperatorMatrix small = assemble_operator(build_grid(DomainSpec::interval(0.5), h), 0.5);
    const double lb = spectral_bottom(big, Vector::Zero(big.size())).lambda0;
    const double ls = spectral_bottom(small, Vector::Zero(small.size())).lambda0;
    CHECK(ls > lb);
    // scaling: lambda0 on (-R, R) is R^-alpha times the unit value at matched resolution
    const OperatorMatrix unit = assemble_operator(build_grid(DomainSpec::interval(1.0), 2 * h), 0.5);
    CHECK(ls == doctest::Approx(std::pow(0.5, -0.5) * spectral_bottom(unit, Vector::Zero(unit.size())).lambda0)
                    .epsilon(1e-10));
  }

  TEST_CASE("free ground level converges under refinement") {
    // differences between successive halvings shrink
    std::vector<double> lam;
    for (double h : {1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128}) {
      const OperatorMatrix op = assemble_operator(build_grid(DomainSpec::interval(1.0), h), 0.5);
      lam.push_back(spectral_bottom(op, Vector::Zero(op.size())).lambda0);
    }
    for (std::size_t i = 2; i < lam.size(); ++i)
      CHECK(std::abs(lam[i] - lam[i - 1]) < std::abs(lam[i - 1] - lam[i - 2]));
  }

  TEST_CASE("fixture: free ground level at h = 0.01") {
    const OperatorMatrix op = assemble_operator(build_grid(DomainSpec::interval(1.0), 0.01), 0.5);
    CHECK(op.size() == 200);
    CHECK(spectral_bottom(op, Vector::Zero(op.size())).lambda0 == doctest::Approx(FREE_LAMBDA_H001).epsilon(1e-9));
  }

  TEST_CASE("fourier check basics") {
    const Grid g = build_grid(DomainSpec::interval(1.0), 1.0 / 64);
    const OperatorMatrix op = assemble_operator(g, 0.5);
    const FourierCheck zero = fourier_form_check(op, GaussianBump{0.0, 8.0});
    CHECK(zero.discrete == 0.0);
    CHECK(zero.fourier == 0.0);
    FourierCheckOptions opts;
    opts.modes = 1 << 12;
    const FourierCheck one = fourier_form_check(op, GaussianBump{1.0, 8.0}, opts);
    const FourierCheck two = fourier_form_check(op, GaussianBump{2.0, 8.0}, opts);
    CHECK(two.discrete == doctest::Approx(4 * one.discrete).epsilon(1e-13));
    CHECK(two.fourier == doctest::Approx(4 * one.fourier).epsilon(1e-13));
    CHECK(one.relative_gap() < 2e-3);
    CHECK_THROWS_AS(fourier_form_check(GaussianBump{}, 0.5, build_grid(DomainSpec::rectangle(1, 1), 0.25)), Error);
    CHECK_THROWS_AS(fourier_form_check(GaussianBump{}, 1.2, build_grid(DomainSpec::disk(1), 0.25)), Error);
  }

  TEST_CASE("matrix market dump") {
    std::ostringstream os;
    Matrix m(2, 2);
    m << 1, -0.5, -0.5, 2;
    write_matrix_market(os, m);
    CHECK(os.str().rfind("%%MatrixMarket", 0) == 0);
  }
}
