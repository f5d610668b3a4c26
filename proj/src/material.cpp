#include "hystkit/material.hpp"

#include <cmath>
#include <string>

#include "hystkit/errors.hpp"

namespace hystkit {

namespace {

constexpr double kHalfPi = 0.5 * std::numbers::pi;

// Scaled argument pi s / (2 w Js) of the log cos energy; checks the domain.
double energy_argument(const PinningSite& site, double s, double margin) {
  const double arg = kHalfPi * s / site.bound();
  if (!(arg < (1.0 - margin) * kHalfPi)) {
    throw DomainError("polarization " + std::to_string(s) +
                      " T outside the energy domain |J| < " +
                      std::to_string(site.bound()) + " T");
  }
  return arg;
}

void require_finite(const Vector2& v, const char* what) {
  if (!is_finite(v)) {
    throw InvalidArgument(std::string(what) + " has non-finite components");
  }
}

}  // namespace

void PinningSite::validate() const {
  if (!(chi >= 0.0) || !std::isfinite(chi)) {
    throw InvalidArgument("pinning strength chi must be finite and >= 0");
  }
  if (!(weight > 0.0) || !(steepness > 0.0) || !(saturation > 0.0) ||
      !std::isfinite(weight) || !std::isfinite(steepness) ||
      !std::isfinite(saturation)) {
    throw InvalidArgument("weight, steepness and saturation must be positive");
  }
}

double MaterialParams::saturation_bound() const noexcept {
  double total = 0.0;
  for (const auto& s : sites) total += s.bound();
  return total;
}

void MaterialParams::validate() const {
  if (sites.empty()) {
    throw InvalidArgument("material needs at least one pinning site");
  }
  for (const auto& s : sites) s.validate();
}

MaterialParams MaterialParams::single(double steepness, double saturation,
                                      double chi, double weight) {
  MaterialParams p{{PinningSite{chi, weight, steepness, saturation}}};
  p.validate();
  return p;
}

MaterialParams MaterialParams::linear_spread(int n, double steepness,
                                             double saturation,
                                             double chi_max) {
  if (n < 1) throw InvalidArgument("number of pinning sites must be >= 1");
  MaterialParams p;
  p.sites.reserve(n);
  for (int k = 0; k < n; ++k) {
    const double chi = n == 1 ? 0.0 : chi_max * k / (n - 1);
    p.sites.push_back(PinningSite{chi, 1.0 / n, steepness, saturation});
  }
  p.validate();
  return p;
}

Vector2 MaterialState::total() const {
  Vector2 sum = Vector2::Zero();
  for (const auto& j : partials) sum += j;
  return sum;
}

void MaterialState::validate_for(const MaterialParams& params) const {
  if (size() != params.size()) {
    throw InvalidArgument("state has " + std::to_string(size()) +
                          " partials, material has " +
                          std::to_string(params.size()) + " sites");
  }
  for (int k = 0; k < size(); ++k) {
    require_finite(partials[k], "partial polarization");
    if (!(partials[k].norm() < params.sites[k].bound())) {
      throw InvalidArgument("partial polarization " + std::to_string(k) +
                            " outside the energy domain");
    }
  }
}

void SolverSettings::validate() const {
  if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be > 0");
  if (!(grad_tol > 0.0)) throw InvalidArgument("grad_tol must be > 0");
  if (max_iter < 1) throw InvalidArgument("max_iter must be >= 1");
  if (!(armijo_c > 0.0 && armijo_c < 1.0)) {
    throw InvalidArgument("armijo_c must lie in (0, 1)");
  }
  if (!(backtrack > 0.0 && backtrack < 1.0)) {
    throw InvalidArgument("backtrack must lie in (0, 1)");
  }
  if (!(boundary_margin > 0.0 && boundary_margin < 1.0)) {
    throw InvalidArgument("boundary_margin must lie in (0, 1)");
  }
  if (max_backtracks < 1) throw InvalidArgument("max_backtracks must be >= 1");
}

bool is_finite(const Vector2& v) noexcept {
  return std::isfinite(v.x()) && std::isfinite(v.y());
}

double smoothed_norm(const Vector2& v, double epsilon) {
  require_finite(v, "vector");
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw InvalidArgument("epsilon must be finite and >= 0");
  }
  return std::sqrt(v.squaredNorm() + epsilon);
}

bool in_energy_domain(const PinningSite& site, const Vector2& j, double epsilon,
                      double margin) noexcept {
  if (!is_finite(j)) return false;
  const double s = std::sqrt(j.squaredNorm() + epsilon);
  return kHalfPi * s / site.bound() < (1.0 - margin) * kHalfPi;
}

double internal_energy(const PinningSite& site, const Vector2& j,
                       double epsilon, double margin) {
  const double arg = energy_argument(site, smoothed_norm(j, epsilon), margin);
  return -site.steepness * site.bound() / std::numbers::pi *
         std::log(std::cos(arg));
}

Vector2 internal_energy_grad(const PinningSite& site, const Vector2& j,
                             double epsilon, double margin) {
  const double s = smoothed_norm(j, epsilon);
  if (s == 0.0) return Vector2::Zero();
  const double arg = energy_argument(site, s, margin);
  return (0.5 * site.steepness * std::tan(arg) / s) * j;
}

Vector2 anhysteretic_polarization(const PinningSite& site, const Vector2& y) {
  const double n = y.norm();
  if (n == 0.0) return Vector2::Zero();
  return (site.bound() / kHalfPi * std::atan(2.0 * n / site.steepness) / n) * y;
}

Matrix2 internal_energy_hess(const PinningSite& site, const Vector2& j,
                             double epsilon, double margin) {
  const double s = smoothed_norm(j, epsilon);
  const double c = kHalfPi / site.bound();
  const double half_a = 0.5 * site.steepness;
  if (s == 0.0) return (half_a * c) * Matrix2::Identity();
  const double t = energy_argument(site, s, margin);
  const double tan_t = std::tan(t);
  const double sec2 = 1.0 + tan_t * tan_t;
  // U depends on s only: hess = g(s) I + g'(s)/s J J^T with g = U'(s)/s.
  // The J J^T coefficient is (A/2) c^3 (t sec^2 t - tan t) / t^3, which
  // cancels badly for small t; use its series there.
  const double radial =
      t < 1e-3 ? half_a * c * c * c * (2.0 / 3.0 + 8.0 / 15.0 * t * t)
               : half_a * (c * sec2 * s - tan_t) / (s * s * s);
  return (half_a * tan_t / s) * Matrix2::Identity() + radial * j * j.transpose();
}

PinningTerm pinning_term(double chi, const Vector2& j, const Vector2& jp,
                         double epsilon) {
  const Vector2 d = j - jp;
  const double r = std::sqrt(d.squaredNorm() + epsilon);
  const Vector2 u = d / r;
  return PinningTerm{chi * r, chi * u,
                     (chi / r) * (Matrix2::Identity() - u * u.transpose())};
}

}  // namespace hystkit
