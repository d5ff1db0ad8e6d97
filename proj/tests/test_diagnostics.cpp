#include <doctest.h>

#include <random>

#include "fraclab/diagnostics.hpp"

using namespace fraclab;

// Ratio max/min of e^{-tL} u0 / phi0 at t = 0.5, h = 1/64; the refinement
// sequence 1.7300, 1.7259, 1.7232, 1.7228, 1.7225 settles near 1.722.
constexpr double COMPARABILITY_H64 = 1.7258859077799382;

namespace {

double uniform(std::mt19937_64& gen) { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }

OperatorMatrix interval_op(double h, double alpha = 0.5) {
  return assemble_operator(build_grid(DomainSpec::interval(1.0), h), alpha);
}

// Hand-built series and trajectories so classify can be checked without a run.
std::pair<SpectralSeries, std::vector<Trajectory>> synthetic(const std::vector<double>& lambdas,
                                                             const std::vector<double>& sups,
                                                             const std::vector<double>& l2s) {
  SpectralSeries s;
  std::vector<Trajectory> fam;
  double h = 1.0 / 64;
  for (std::size_t i = 0; i < lambdas.size(); ++i, h /= 2) {
    s.entries.push_back({h, 1.0, 0.01, lambdas[i] + 1.0, 0});  // smaller k, ignored
    s.entries.push_back({h, 16.0, 0.01, lambdas[i], 0});
    Trajectory t;
    t.times = {0.0, 0.25, 0.5};
    t.dt = 0.25;
    t.h = h;
    t.k = 16.0;
    t.max_values = {1.0, 1.0, sups[i]};
    t.l2_norms = {1.0, 1.0, l2s[i]};
    fam.push_back(t);
  }
  return {s, fam};
}

}  // namespace

TEST_SUITE("diagnostics") {
  TEST_CASE("energy inequality: examples and random sweep") {
    const OperatorMatrix op = interval_op(1.0 / 32);
    const Eigen::Index n = op.size();
    const Certificate zero = energy_inequality_certificate(op, Vector::Ones(n), Vector::Zero(n));
    CHECK(zero.lhs == 0.0);
    CHECK(zero.satisfied);

    // constant u leaves only the killing part on the left
    std::mt19937_64 gen(5);
    Vector phi(n);
    for (Eigen::Index i = 0; i < n; ++i) phi[i] = uniform(gen);
    const Certificate flat = energy_inequality_certificate(op, Vector::Constant(n, 2.0), phi);
    CHECK(flat.lhs == doctest::Approx(phi.cwiseAbs2().dot(op.kappa) * op.cell_volume()).epsilon(1e-12));
    CHECK(flat.slack > 0);

    for (int t = 0; t < 200; ++t) {
      Vector u(n), f(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        u[i] = 1e-3 + uniform(gen);
        f[i] = uniform(gen) < 0.3 ? 0.0 : uniform(gen) - 0.5;
      }
      const Certificate c = energy_inequality_certificate(op, u, f);
      CHECK(c.satisfied);
      CHECK(c.slack >= -1e-12);
    }
    Vector bad = Vector::Ones(n);
    bad[3] = 0.0;
    CHECK_THROWS_AS(energy_inequality_certificate(op, bad, Vector::Ones(n)), Error);
  }

  TEST_CASE("log estimate") {
    const OperatorMatrix op = interval_op(1.0 / 64);
    const PotentialField V =
        sample_potential(PotentialSpec{HardyInterior{0.5 * hardy_sharp_constant(1, 0.5)}}, op.grid, 0.5);
    const Trajectory traj = evolve(op, V, inradius_indicator(op.grid), 0.5, 0.01);
    std::mt19937_64 gen(9);
    for (int t = 0; t < 20; ++t) {
      Vector phi(op.size());
      for (Eigen::Index i = 0; i < op.size(); ++i) phi[i] = uniform(gen) - 0.3;
      phi /= std::sqrt(phi.squaredNorm() * op.cell_volume());
      CHECK(log_estimate_certificate(traj, op, phi, V, 0.25, 0.5).satisfied);
      // one stored step is the single-step inequality
      const Certificate one = log_estimate_certificate(traj, op, phi, V, 0.25, 0.26);
      double lg = 0;
      for (Eigen::Index i = 0; i < op.size(); ++i)
        lg += std::log(traj.states[26][i] / traj.states[25][i]) * phi[i] * phi[i];
      CHECK(one.rhs == doctest::Approx(lg * op.cell_volume() / 0.01).epsilon(1e-12));
      CHECK(one.satisfied);
    }
    Vector phi = Vector::Ones(op.size());
    CHECK_THROWS_AS(log_estimate_certificate(traj, op, phi, V, 0.25, 0.5), Error);  // not normalised
    phi /= std::sqrt(phi.squaredNorm() * op.cell_volume());
    CHECK_THROWS_AS(log_estimate_certificate(traj, op, phi, V, 0.255, 0.5), Error);  // off the time grid
  }

  TEST_CASE("exponential bound") {
    const OperatorMatrix op = interval_op(1.0 / 32);
    const PotentialField zero = sample_potential(PotentialSpec{Bounded{"0"}}, op.grid, 0.5);
    const SpectralBottom b = spectral_bottom(op, zero.values);
    const Trajectory ground = evolve(op, zero, b.eigvec, 0.5, 0.01);
    const Certificate eq = exponential_bound_certificate(ground, b.lambda0);
    CHECK(eq.satisfied);
    CHECK(std::abs(eq.lhs - 1.0) < 1e-8);

    const PotentialField c = sample_potential(PotentialSpec{Bounded{"1.5"}}, op.grid, 0.5);
    const Trajectory shifted = evolve(op, c, b.eigvec, 0.5, 0.01);
    CHECK(std::abs(exponential_bound_certificate(shifted, b.lambda0 - 1.5).lhs - 1.0) < 1e-8);

    const PotentialField bump = sample_potential(PotentialSpec{Bounded{"gaussian(2,0.3)"}}, op.grid, 0.5);
    const Trajectory tb = evolve(op, bump, inradius_indicator(op.grid), 0.5, 0.01);
    const Certificate cb = exponential_bound_certificate(tb, spectral_bottom(op, bump.values).lambda0);
    CHECK(cb.satisfied);
    // a wrong (too large) lambda0 is caught
    CHECK_FALSE(exponential_bound_certificate(tb, spectral_bottom(op, bump.values).lambda0 + 1.0).satisfied);
  }

  TEST_CASE("ground state comparability") {
    const OperatorMatrix op = interval_op(1.0 / 64);
    const Vector g = spectral_bottom(op, Vector::Zero(op.size())).eigvec;
    const Certificate same = ground_state_comparability(op, g, 0.5, 10.0);
    CHECK(same.lhs == doctest::Approx(1.0).epsilon(1e-12));
    const Certificate ind = ground_state_comparability(op, inradius_indicator(op.grid), 0.5, 1e3);
    CHECK(ind.satisfied);
    CHECK(ind.detail("r_min") > 0);
    // refinement fixture
    CHECK(ind.lhs == doctest::Approx(COMPARABILITY_H64).epsilon(1e-9));
  }

  TEST_CASE("shrinking balls") {
    const double cstar = hardy_sharp_constant(1, 0.5);
    const std::vector<double> radii = {1.0, 0.5, 0.25, 0.125};
    const ShrinkingBallResult bounded =
        shrinking_ball_certificate(DomainSpec::interval(1.0), 0.5, PotentialSpec{Bounded{"1"}}, radii, 64);
    CHECK_FALSE(bounded.certificate.satisfied);
    // pure Hardy potentials scale exactly: lambda0 * r^alpha is the same on every ball
    const ShrinkingBallResult hardy =
        shrinking_ball_certificate(DomainSpec::interval(1.0), 0.5, PotentialSpec{HardyInterior{3 * cstar}}, radii, 64);
    for (const BallProbe& p : hardy.probes)
      CHECK(p.lambda0 * std::sqrt(p.radius) == doctest::Approx(hardy.probes[0].lambda0).epsilon(1e-10));
    CHECK_THROWS_AS(
        shrinking_ball_certificate(DomainSpec::interval(1.0), 0.5, PotentialSpec{Bounded{"1"}}, radii, 6), Error);
    CHECK_THROWS_AS(shrinking_ball_certificate(DomainSpec::interval(1.0), 0.5, PotentialSpec{Custom{{1.0}}}, radii),
                    Error);
    CHECK_THROWS_AS(shrinking_ball_certificate(DomainSpec::interval(1.0), 0.5, PotentialSpec{Bounded{"1"}},
                                               {1.0, 2.0, 0.5}, 64),
                    Error);
  }

  TEST_CASE("classify on synthetic evidence") {
    const Thresholds th;
    {
      auto [s, f] = synthetic({0.80, 0.79, 0.788, 0.787}, {1, 1.05, 1.1, 1.15}, {0.6, 0.61, 0.612, 0.613});
      const Verdict v = classify(s, f, th);
      CHECK(v.label == Label::Exists);
      CHECK(v.evidence.size() == 4);
      CHECK(v.evidence.back().lambda0 == 0.787);  // largest k
      CHECK(v.epsilon == 0.01);
    }
    {
      auto [s, f] = synthetic({0.1, 0.0, -0.12, -0.26}, {1, 1.25, 1.6, 2.0}, {1, 1.2, 1.4, 1.7});
      CHECK(classify(s, f, th).label == Label::BlowUp);
    }
    {
      // decrements grow, but too slowly
      auto [s, f] = synthetic({0.1, 0.0, -0.105, -0.215}, {1, 1.25, 1.6, 2.0}, {1, 1.2, 1.4, 1.7});
      CHECK(classify(s, f, th).label == Label::Inconclusive);
    }
    {
      // sup norm flat
      auto [s, f] = synthetic({0.1, 0.0, -0.12, -0.26}, {1, 1.0, 1.0, 1.0}, {1, 1.2, 1.4, 1.7});
      CHECK(classify(s, f, th).label == Label::Inconclusive);
    }
    {
      auto [s, f] = synthetic({0.1, 0.0}, {1, 1}, {1, 1});
      CHECK_THROWS_AS(classify(s, f, th), Error);
    }
    {
      auto [s, f] = synthetic({0.80, 0.79, 0.788}, {1, 1, 1}, {1, 1, 1});
      f.pop_back();
      CHECK_THROWS_AS(classify(s, f, th), Error);
    }
  }

  TEST_CASE("free problem classifies as existing") {
    const std::vector<double> hs = {1.0 / 16, 1.0 / 32, 1.0 / 64};
    const PotentialSpec spec{Bounded{"0"}};
    std::vector<Trajectory> fam;
    for (double h : hs) {
      const OperatorMatrix op = interval_op(h);
      const PotentialField V = sample_potential(spec, op.grid, 0.5);
      Trajectory t = evolve(op, V, inradius_indicator(op.grid), 0.5, 0.01);
      fam.push_back(t);
    }
    const SpectralSeries s = refinement_series(DomainSpec::interval(1.0), 0.5, spec, hs, {1.0});
    for (auto& t : fam) t.k = 1.0;
    CHECK(classify(s, fam, Thresholds{}).label == Label::Exists);
  }

  TEST_CASE("discrete Hardy constants sit above the sharp value on coarse meshes") {
    const auto mu = hardy_constant_series(DomainSpec::interval(1.0), 0.5, HardyWeight::Interior, {1.0 / 32, 1.0 / 64});
    REQUIRE(mu.size() == 2);
    CHECK(mu[0].second > mu[1].second);
    CHECK(mu[1].second > hardy_sharp_constant(1, 0.5));
    const auto b = hardy_constant_series(DomainSpec::disk(1.0), 1.0, HardyWeight::Boundary, {0.25});
    CHECK(b[0].second > 0);
  }
}
