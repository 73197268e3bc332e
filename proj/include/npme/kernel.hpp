#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

// Closed-form self-similar solution of the nonlocal porous medium equation
//
//   u(x, t) = C t^{-d beta} (1 - k^{2/alpha} |x|^2 / t^{2 beta})_+^{alpha / (2(m-1))}
//
// together with its radial law, moments, Fourier transform and the map from
// random-flight parameters (n, d, renewal law) to the exponent m.
namespace npme::kernel {

/// Which renewal law / dimension family a flight belongs to.
enum class FlightCase {
  D1,    ///< d = 1 telegraph process, uniform renewal epochs
  DirA,  ///< d >= 2, Dirichlet(d-1, ..., d-1) renewal fractions
  DirB,  ///< d >= 3, Dirichlet(d/2-1, ..., d/2-1) renewal fractions
};

std::string_view to_string(FlightCase c);
/// Accepts "d1", "dir_a", "dir_b" (case-insensitive).
FlightCase parse_flight_case(std::string_view text);

/// Validated (alpha, m, d) and the derived constants of the profile.
/// Immutable; build through derive_constants().
class NpmeParams {
 public:
  double alpha() const { return alpha_; }
  double m() const { return 1.0 + m_minus_one_; }
  double m_minus_one() const { return m_minus_one_; }
  int d() const { return d_; }
  double beta() const { return beta_; }
  double k() const { return k_; }
  double big_c() const { return big_c_; }
  /// Flight speed c = k^{-1/alpha}; also the support radius at t = 1.
  double speed() const { return speed_; }
  /// alpha / (2(m-1)), the exponent of the profile.
  double profile_exponent() const { return exponent_; }
  /// c t^beta.
  double support_radius(double t) const;

 private:
  friend NpmeParams make_params(double alpha, double m_minus_one, int d);

  double alpha_ = 0.0;
  double m_minus_one_ = 0.0;
  int d_ = 0;
  double beta_ = 0.0;
  double k_ = 0.0;
  double big_c_ = 0.0;
  double speed_ = 0.0;
  double exponent_ = 0.0;
};

NpmeParams make_params(double alpha, double m_minus_one, int d);

/// Throws DomainError for alpha outside (0, 2], m <= 1 or d < 1.
NpmeParams derive_constants(double alpha, double m, int d);

/// Same as derive_constants(alpha, m_from_flight(n, d, alpha, c), d), but
/// keeps m - 1 = alpha / D in one rounding so that beta is exact whenever
/// alpha is.
NpmeParams derive_constants_for_flight(double alpha, int n, int d, FlightCase c);

/// Surface area of the unit sphere in R^d, 2 pi^{d/2} / Gamma(d/2).
double sphere_area(int d);

double density(std::span<const double> x, double t, const NpmeParams& p);
/// density() through |x| only.
double density_at_radius(double r, double t, const NpmeParams& p);

double radial_density(double r, double t, const NpmeParams& p);

/// P(|Y(t)| <= r) = I_{s^2}(d/2, alpha/(2(m-1)) + 1), s = r / (c t^beta).
double radial_cdf(double r, double t, const NpmeParams& p);

/// E |Y(t)|^order from the Beta representation; valid for every d >= 1.
double radial_moment(int order, double t, const NpmeParams& p);

/// Symmetric-convention Fourier transform of u(., t) at |xi| = xi_norm.
/// The characteristic function of the law is (2 pi)^{d/2} times this value.
double fourier_transform(double xi_norm, double t, const NpmeParams& p);

/// Time-free density of Y(t) / (c t^beta) on the closed unit ball.
double rescaled_density(std::span<const double> x, const NpmeParams& p);
double rescaled_density_at_radius(double r, const NpmeParams& p);
double rescaled_cf(double xi_norm, const NpmeParams& p);

/// Integer D with m - 1 = alpha / D for the given flight; throws
/// ValidityError when (n, d, case) has no porous-medium counterpart.
int flight_denominator(int n, int d, FlightCase c);

double m_from_flight(int n, int d, double alpha, FlightCase c);

/// Exponent of (1 - |x|^2 / (ct)^2) in the flight's density,
/// n(d-1)/2 - 1 for DirA, n(d/2 - 1) - 1 for DirB, (n-1)/2 or n/2 - 1 for D1.
double flight_profile_exponent(int n, int d, FlightCase c);

enum class Diffusivity { Sub, Normal, Super };
std::string_view to_string(Diffusivity label);

struct DiffusivityClass {
  Diffusivity label;
  double exponent;  // 2 beta
};

/// Label by the sign of 2 beta - 1, compared exactly.
DiffusivityClass classify_diffusivity(const NpmeParams& p);

/// Exact rational number num/den, den > 0.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

/// Parses "4/3", "1.5", "2".
Rational parse_rational(std::string_view text);

/// Flight-side classification in integer arithmetic:
/// 2 beta = 2D / (alpha (d + D)).
DiffusivityClass classify_flight(int n, int d, FlightCase c, Rational alpha);

/// The alpha at which 2 beta = 1 for the flight, 2D / (d + D).
double diffusivity_threshold(int n, int d, FlightCase c);

/// Central-difference estimate of d_t u - ((m-1)/m) Lap(u^m) for alpha = 2.
/// The same step h is used in time and in every space direction.
/// Requires c t^beta - |x| >= 10 h c t^beta and t > h.
double pme_residual(std::span<const double> x, double t, double h, const NpmeParams& p);

/// |u(x, t) - L^{d beta} u(L^beta x, L t)|.
double self_similar_check(std::span<const double> x, double t, double scale,
                          const NpmeParams& p);

}  // namespace npme::kernel
