#pragma once

#include <numbers>
#include <vector>

#include <Eigen/Core>

namespace hystkit {

using Vector2 = Eigen::Vector2d;
using Matrix2 = Eigen::Matrix2d;

struct PhysicalConstants {
  /// Vacuum permeability in Vs/(Am).
  static constexpr double mu0 = 4.0e-7 * std::numbers::pi;
};

inline constexpr double kMu0 = PhysicalConstants::mu0;

/// One pinning strength with the parameters of its internal energy
///   U(J) = -(A w Js / pi) log cos(pi |J|_eps / (2 w Js)).
struct PinningSite {
  double chi = 0.0;         ///< pinning strength, A/m
  double weight = 1.0;      ///< w, dimensionless
  double steepness = 1.0;   ///< A, A/m
  double saturation = 1.0;  ///< Js, T

  /// Radius of the open energy domain, w * Js.
  double bound() const noexcept { return weight * saturation; }
  void validate() const;
};

struct MaterialParams {
  std::vector<PinningSite> sites;

  int size() const noexcept { return static_cast<int>(sites.size()); }
  double saturation_bound() const noexcept;
  void validate() const;

  static MaterialParams single(double steepness, double saturation, double chi,
                               double weight = 1.0);
  /// chi_k = chi_max (k-1)/(n-1), w_k = 1/n. With n = 1 the site has chi = 0.
  static MaterialParams linear_spread(int n, double steepness,
                                      double saturation, double chi_max);
};

/// Partial polarizations J_k, one per pinning site, in T.
struct MaterialState {
  std::vector<Vector2> partials;

  static MaterialState virgin(int n) {
    return MaterialState{std::vector<Vector2>(n, Vector2::Zero())};
  }
  static MaterialState virgin(const MaterialParams& params) {
    return virgin(params.size());
  }

  int size() const noexcept { return static_cast<int>(partials.size()); }
  Vector2 total() const;
  /// Throws InvalidArgument if the state does not fit `params`.
  void validate_for(const MaterialParams& params) const;

  bool operator==(const MaterialState&) const = default;
};

struct MagneticPoint {
  Vector2 h = Vector2::Zero();
  Vector2 b = Vector2::Zero();
};

inline constexpr double kDefaultEpsilon = 1e-8;
inline constexpr double kDefaultBoundaryMargin = 1e-12;

struct SolverSettings {
  double epsilon = kDefaultEpsilon;  ///< squared-norm offset of |x|_eps, T^2
  double grad_tol = 1e-10;  ///< scaled by max(1, |gradient at start|)
  int max_iter = 100;
  double armijo_c = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 50;
  double boundary_margin = kDefaultBoundaryMargin;

  void validate() const;
};

bool is_finite(const Vector2& v) noexcept;

/// sqrt(|v|^2 + eps). eps = 0 gives the Euclidean norm.
double smoothed_norm(const Vector2& v, double epsilon);

/// True if pi |j|_eps / (2 w Js) stays below (1 - margin) pi/2.
bool in_energy_domain(const PinningSite& site, const Vector2& j, double epsilon,
                      double margin = kDefaultBoundaryMargin) noexcept;

/// Internal energy density in J/m^3. Throws DomainError outside the domain.
double internal_energy(const PinningSite& site, const Vector2& j,
                       double epsilon,
                       double margin = kDefaultBoundaryMargin);

/// (A/2) tan(pi |J|_eps / (2 w Js)) J / |J|_eps
Vector2 internal_energy_grad(const PinningSite& site, const Vector2& j,
                             double epsilon,
                             double margin = kDefaultBoundaryMargin);

Matrix2 internal_energy_hess(const PinningSite& site, const Vector2& j,
                             double epsilon,
                             double margin = kDefaultBoundaryMargin);

/// Inverse of the eps = 0 gradient map: the J with grad U(J) = y, i.e.
/// (2 w Js / pi) arctan(2 |y| / A) y / |y|. Always inside the saturation disk.
Vector2 anhysteretic_polarization(const PinningSite& site, const Vector2& y);

/// Value, gradient and Hessian of chi |j - jp|_eps.
struct PinningTerm {
  double value;
  Vector2 grad;
  Matrix2 hess;
};
PinningTerm pinning_term(double chi, const Vector2& j, const Vector2& jp,
                         double epsilon);

}  // namespace hystkit
