#pragma once

#include <span>
#include <vector>

// Real special functions used by the analytic kernel and the verification
// harness. All functions are pure and reentrant.
namespace npme::specfun {

/// ln Gamma(x) for x > 0. Throws DomainError otherwise.
double ln_gamma(double x);

/// Gamma(x) for 0 < x <= 170.
double gamma_fn(double x);

/// Regularized incomplete beta function I_x(a, b), a, b > 0, 0 <= x <= 1.
double reg_inc_beta(double a, double b, double x);

/// Bessel function of the first kind J_nu(x) for real nu >= 0, x >= 0.
///
/// Small arguments (x <= 2) are summed from the power series; larger ones go
/// through Steed's method: the J'/J continued fraction at nu, stable downward
/// recurrence to |mu| <= 1/2, and the complex continued fraction for
/// (J' + iY')/(J + iY) at mu, closed by the Wronskian.
double bessel_j(double nu, double x);

/// Gamma(nu + 1) (2/x)^nu J_nu(x), the Bessel function normalized to 1 at
/// x = 0. Evaluated without forming (2/x)^nu for small x, so it is safe
/// for any nu >= 0.
double normalized_bessel_j(double nu, double x);

/// Gauss-Legendre rule on [-1, 1].
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre nodes and weights, computed by Newton iteration on
/// the Legendre recurrence. n >= 1.
QuadratureRule gauss_legendre(int n);

/// Cached 256-point rule, used for all radial integrals in this library.
const QuadratureRule& gauss_legendre_256();

}  // namespace npme::specfun
