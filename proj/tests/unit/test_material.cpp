#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "hystkit/errors.hpp"
#include "hystkit/material.hpp"

using namespace hystkit;

namespace {

const PinningSite kFig1{71.0, 1.0, 38.0, 1.54};

Matrix2 rotation(double angle) {
  Matrix2 r;
  r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return r;
}

// Uniform sample from the disc of radius `scale` * w Js.
Vector2 sample_interior(std::mt19937& rng, const PinningSite& site,
                        double scale = 0.95) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double r = scale * site.bound() * std::sqrt(u(rng));
  const double phi = 2.0 * std::numbers::pi * u(rng);
  return {r * std::cos(phi), r * std::sin(phi)};
}

}  // namespace

TEST_CASE("vacuum permeability") {
  CHECK(kMu0 == doctest::Approx(4e-7 * std::numbers::pi).epsilon(1e-16));
  CHECK(kMu0 > 0.0);
}

TEST_CASE("smoothed norm") {
  CHECK(smoothed_norm({0, 0}, 1e-8) == doctest::Approx(1e-4).epsilon(1e-15));
  CHECK(smoothed_norm({3, 4}, 0.0) == 5.0);
  // sqrt(1 + 1e-8) from a 30-digit evaluation
  CHECK(std::abs(smoothed_norm({1, 0}, 1e-8) - 1.0000000049999999875) < 1e-15);
  CHECK_THROWS_AS(smoothed_norm({std::nan(""), 0}, 1e-8), InvalidArgument);
  CHECK_THROWS_AS(
      smoothed_norm({std::numeric_limits<double>::infinity(), 0}, 1e-8),
      InvalidArgument);
}

TEST_CASE("internal energy values") {
  CHECK(std::abs(internal_energy(kFig1, {0, 0}, 0.0)) < 1e-15);
  // -(A w Js / pi) log cos(pi/4), 30-digit reference
  CHECK(internal_energy(kFig1, {0.77, 0}, 0.0) ==
        doctest::Approx(6.45579766046658596767).epsilon(1e-13));
  CHECK(internal_energy(kFig1, {0.77, 0}, 1e-8) ==
        doctest::Approx(6.4557977).epsilon(1e-6));

  // divergence towards the domain bound
  double last = 0.0;
  for (double frac : {0.9, 0.99, 0.999, 0.9999, 0.99999}) {
    const double u = internal_energy(kFig1, {frac * 1.54, 0}, 0.0);
    CHECK(u > last);
    last = u;
  }
  CHECK(last > 200.0);
  CHECK_THROWS_AS(internal_energy(kFig1, {1.54, 0}, 0.0), DomainError);
  CHECK_THROWS_AS(internal_energy(kFig1, {2.0, 0}, 1e-8), DomainError);
  CHECK_THROWS_AS(internal_energy_grad(kFig1, {0, 1.6}, 1e-8), DomainError);
  CHECK_THROWS_AS(internal_energy_hess(kFig1, {-1.6, 0}, 1e-8), DomainError);
  CHECK_FALSE(in_energy_domain(kFig1, {1.54, 0}, 0.0));
  CHECK(in_energy_domain(kFig1, {1.5, 0}, 1e-8));
}

TEST_CASE("internal energy gradient") {
  const double eps = 1e-8;
  const Vector2 g0 = internal_energy_grad(kFig1, {0, 0}, eps);
  CHECK(g0.norm() == 0.0);
  const Vector2 gx = internal_energy_grad(kFig1, {0.77, 0}, 0.0);
  CHECK(gx.x() == doctest::Approx(19.0).epsilon(1e-13));
  CHECK(std::abs(gx.y()) < 1e-15);
  const Vector2 gy = internal_energy_grad(kFig1, {0, 0.77}, 0.0);
  CHECK(gy.y() == doctest::Approx(19.0).epsilon(1e-13));
  CHECK(std::abs(gy.x()) < 1e-15);
}

TEST_CASE("internal energy Hessian") {
  const Matrix2 h0 = internal_energy_hess(kFig1, {0, 0}, 0.0);
  const double expected = 38.0 * std::numbers::pi / (4.0 * 1.54);
  CHECK(h0(0, 0) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(h0(1, 1) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(h0(0, 1) == 0.0);
  // Smoothed at the origin it approaches the same limit.
  const Matrix2 h_eps = internal_energy_hess(kFig1, {0, 0}, 1e-8);
  CHECK(h_eps(0, 0) == doctest::Approx(expected).epsilon(1e-7));
}

TEST_CASE("derivatives against central finite differences") {
  std::mt19937 rng(7);
  const double eps = 1e-8;
  for (int trial = 0; trial < 100; ++trial) {
    const Vector2 j = sample_interior(rng, kFig1, 0.9);
    const double step = 1e-6;
    Vector2 fd_grad;
    Matrix2 fd_hess;
    for (int i = 0; i < 2; ++i) {
      Vector2 e = Vector2::Zero();
      e[i] = step;
      fd_grad[i] = (internal_energy(kFig1, j + e, eps) -
                    internal_energy(kFig1, j - e, eps)) /
                   (2 * step);
      fd_hess.col(i) = (internal_energy_grad(kFig1, j + e, eps) -
                        internal_energy_grad(kFig1, j - e, eps)) /
                       (2 * step);
    }
    const Vector2 g = internal_energy_grad(kFig1, j, eps);
    const Matrix2 h = internal_energy_hess(kFig1, j, eps);
    CHECK((fd_grad - g).norm() <= 1e-5 * std::max(1.0, g.norm()));
    CHECK((fd_hess - h).norm() <= 1e-5 * h.norm());
  }
}

TEST_CASE("isotropy and convexity") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double eps = 1e-8;
  for (int trial = 0; trial < 200; ++trial) {
    const Vector2 j = sample_interior(rng, kFig1);
    const Matrix2 r = rotation(angle(rng));
    const double u = internal_energy(kFig1, j, eps);
    CHECK(std::abs(internal_energy(kFig1, r * j, eps) - u) <=
          1e-12 * std::max(1.0, u));

    const Matrix2 h = internal_energy_hess(kFig1, j, eps);
    const Matrix2 h_rot = internal_energy_hess(kFig1, r * j, eps);
    CHECK((h_rot - r * h * r.transpose()).norm() <= 1e-10 * h.norm());
    const Eigen::SelfAdjointEigenSolver<Matrix2> es(h);
    CHECK(es.eigenvalues().minCoeff() > 0.0);

    const Vector2 j2 = sample_interior(rng, kFig1);
    const double t = unit(rng);
    const double lhs = internal_energy(kFig1, t * j + (1 - t) * j2, eps);
    const double rhs =
        t * internal_energy(kFig1, j, eps) + (1 - t) * internal_energy(kFig1, j2, eps);
    CHECK(lhs <= rhs + 1e-12);
  }
}

TEST_CASE("pinning term") {
  const PinningTerm p = pinning_term(71.0, {0.3, 0.4}, {0, 0}, 0.0);
  CHECK(p.value == doctest::Approx(71.0 * 0.5));
  CHECK(p.grad.x() == doctest::Approx(71.0 * 0.6));
  // Hessian annihilates the radial direction
  CHECK((p.hess * Vector2(0.3, 0.4)).norm() < 1e-12);
  const PinningTerm at_kink = pinning_term(71.0, {0, 0}, {0, 0}, 1e-8);
  CHECK(at_kink.value == doctest::Approx(71e-4));
  CHECK(at_kink.hess(0, 0) == doctest::Approx(71.0 / 1e-4));
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS((PinningSite{-1.0, 1.0, 38.0, 1.54}.validate()), InvalidArgument);
  CHECK_THROWS_AS((PinningSite{1.0, 0.0, 38.0, 1.54}.validate()), InvalidArgument);
  CHECK_THROWS_AS(MaterialParams{}.validate(), InvalidArgument);
  SolverSettings s;
  CHECK_NOTHROW(s.validate());
  s.armijo_c = 1.0;
  CHECK_THROWS_AS(s.validate(), InvalidArgument);

  const auto spread = MaterialParams::linear_spread(20, 50.0, 1.54, 140.0);
  CHECK(spread.size() == 20);
  CHECK(spread.sites.front().chi == 0.0);
  CHECK(spread.sites.back().chi == doctest::Approx(140.0));
  CHECK(spread.sites[1].chi == doctest::Approx(140.0 / 19.0));
  CHECK(spread.saturation_bound() == doctest::Approx(1.54));

  MaterialState bad = MaterialState::virgin(2);
  CHECK_THROWS_AS(bad.validate_for(spread), InvalidArgument);
  MaterialState outside = MaterialState::virgin(1);
  outside.partials[0] = {2.0, 0.0};
  CHECK_THROWS_AS(outside.validate_for(MaterialParams::single(38, 1.54, 71)),
                  InvalidArgument);
}
