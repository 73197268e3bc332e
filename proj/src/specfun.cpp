#include "npme/specfun.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "npme/errors.hpp"

namespace npme::specfun {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kTiny = 1e-300;

// Lanczos approximation, g = 7, n = 9.
constexpr double kLanczosG = 7.0;
constexpr std::array<double, 9> kLanczosCoeffs = {
    0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
    771.32342877765313,      -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};

double lanczos_ln_gamma(double x) {
  // Valid for x >= 0.5.
  const double z = x - 1.0;
  double series = kLanczosCoeffs[0];
  for (std::size_t i = 1; i < kLanczosCoeffs.size(); ++i) {
    series += kLanczosCoeffs[i] / (z + static_cast<double>(i));
  }
  const double t = z + kLanczosG + 0.5;
  return 0.5 * std::log(2.0 * std::numbers::pi) + (z + 0.5) * std::log(t) - t +
         std::log(series);
}

// Continued fraction for the incomplete beta function, modified Lentz.
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 10000;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double dm = static_cast<double>(m);
    const double m2 = 2.0 * dm;
    double aa = dm * (b - dm) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + dm) * (qab + dm) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  return h;
}

double bessel_series(double nu, double x) {
  const double q = -0.25 * x * x;
  double term = std::exp(nu * std::log(0.5 * x) - ln_gamma(nu + 1.0));
  double sum = term;
  for (int k = 1; k < 500; ++k) {
    const double dk = static_cast<double>(k);
    term *= q / (dk * (dk + nu));
    sum += term;
    if (std::abs(term) <= 1e-17 * std::abs(sum)) break;
  }
  return sum;
}

double normalized_series(double nu, double x) {
  const double q = -0.25 * x * x;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 500; ++k) {
    const double dk = static_cast<double>(k);
    term *= q / (dk * (dk + nu));
    sum += term;
    if (std::abs(term) <= 1e-17 * std::abs(sum)) break;
  }
  return sum;
}

// Steed's method for x >= 2.
double bessel_steed(double nu, double x) {
  constexpr int kMaxIter = 100000;
  const int nl = static_cast<int>(nu + 0.5);
  const double mu = nu - nl;
  const double mu2 = mu * mu;
  const double xi = 1.0 / x;
  const double xi2 = 2.0 * xi;
  const double w = xi2 / std::numbers::pi;

  // J'_nu / J_nu by continued fraction; isign tracks the sign of J_nu.
  int isign = 1;
  double h = nu * xi;
  if (h < kTiny) h = kTiny;
  double b = xi2 * nu;
  double d = 0.0;
  double c = h;
  int i = 1;
  for (; i <= kMaxIter; ++i) {
    b += xi2;
    d = b - d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b - 1.0 / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = c * d;
    h *= del;
    if (d < 0.0) isign = -isign;
    if (std::abs(del - 1.0) < kEps) break;
  }
  if (i > kMaxIter) {
    throw DomainError("bessel_j: continued fraction did not converge for x = " +
                      std::to_string(x));
  }

  // Downward recurrence from nu to mu on an unnormalized J.
  double rjl = isign * kTiny;
  double rjpl = h * rjl;
  const double rjl1 = rjl;
  double fact = nu * xi;
  for (int l = nl; l >= 1; --l) {
    const double rjtemp = fact * rjl + rjpl;
    fact -= xi;
    rjpl = fact * rjtemp - rjl;
    rjl = rjtemp;
  }
  if (rjl == 0.0) rjl = kEps;
  const double f = rjpl / rjl;

  // p + iq = (J' + iY')/(J + iY) at mu.
  double a = 0.25 - mu2;
  double p = -0.5 * xi;
  double q = 1.0;
  const double br = 2.0 * x;
  double bi = 2.0;
  fact = a * xi / (p * p + q * q);
  double cr = br + q * fact;
  double ci = bi + p * fact;
  double den = br * br + bi * bi;
  double dr = br / den;
  double di = -bi / den;
  double dlr = cr * dr - ci * di;
  double dli = cr * di + ci * dr;
  double temp = p * dlr - q * dli;
  q = p * dli + q * dlr;
  p = temp;
  for (i = 2; i <= kMaxIter; ++i) {
    a += 2.0 * (i - 1);
    bi += 2.0;
    dr = a * dr + br;
    di = a * di + bi;
    if (std::abs(dr) + std::abs(di) < kTiny) dr = kTiny;
    fact = a / (cr * cr + ci * ci);
    cr = br + cr * fact;
    ci = bi - ci * fact;
    if (std::abs(cr) + std::abs(ci) < kTiny) cr = kTiny;
    den = dr * dr + di * di;
    dr /= den;
    di = -di / den;
    dlr = cr * dr - ci * di;
    dli = cr * di + ci * dr;
    temp = p * dlr - q * dli;
    q = p * dli + q * dlr;
    p = temp;
    if (std::abs(dlr - 1.0) + std::abs(dli) < kEps) break;
  }
  if (i > kMaxIter) {
    throw DomainError("bessel_j: complex continued fraction did not converge");
  }

  const double gam = (p - f) / q;
  double rjmu = std::sqrt(w / ((p - f) * gam + q));
  rjmu = std::copysign(rjmu, rjl);
  return rjl1 * (rjmu / rjl);
}

}  // namespace

double ln_gamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw DomainError("ln_gamma: x must be a finite positive number");
  }
  if (x < 0.5) {
    // Gamma(x) = Gamma(x + 1) / x
    return lanczos_ln_gamma(x + 1.0) - std::log(x);
  }
  return lanczos_ln_gamma(x);
}

double gamma_fn(double x) {
  if (!(x > 0.0)) throw DomainError("gamma_fn: x must be positive");
  if (x > 170.0) throw DomainError("gamma_fn: overflow for x > 170");
  // Exact for small integers; avoids the exp/log round trip.
  if (x == std::floor(x) && x <= 21.0) {
    double f = 1.0;
    for (int i = 2; i < static_cast<int>(x); ++i) f *= i;
    return f;
  }
  return std::exp(ln_gamma(x));
}

double reg_inc_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw DomainError("reg_inc_beta: a and b must be positive");
  }
  if (!(x >= 0.0 && x <= 1.0)) {
    throw DomainError("reg_inc_beta: x must lie in [0, 1]");
  }
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double bessel_j(double nu, double x) {
  if (!(nu >= 0.0) || !std::isfinite(nu)) {
    throw DomainError("bessel_j: order must be finite and >= 0");
  }
  if (!(x >= 0.0) || !std::isfinite(x)) {
    throw DomainError("bessel_j: argument must be finite and >= 0");
  }
  if (x == 0.0) return nu == 0.0 ? 1.0 : 0.0;
  if (x <= 2.0) return bessel_series(nu, x);
  return bessel_steed(nu, x);
}

double normalized_bessel_j(double nu, double x) {
  if (!(nu >= 0.0) || !std::isfinite(nu)) {
    throw DomainError("normalized_bessel_j: order must be finite and >= 0");
  }
  if (!(x >= 0.0) || !std::isfinite(x)) {
    throw DomainError("normalized_bessel_j: argument must be finite and >= 0");
  }
  if (x <= 2.0) return normalized_series(nu, x);
  return std::exp(ln_gamma(nu + 1.0) + nu * std::log(2.0 / x)) *
         bessel_steed(nu, x);
}

QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw ArgumentError("gauss_legendre: need at least one node");
  QuadratureRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) {
        // One more derivative evaluation at the converged node.
        p0 = 1.0;
        p1 = 0.0;
        for (int j = 0; j < n; ++j) {
          const double p2 = p1;
          p1 = p0;
          p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
        }
        dp = n * (z * p0 - p1) / (z * z - 1.0);
        break;
      }
    }
    const auto lo = static_cast<std::size_t>(i);
    const auto hi = static_cast<std::size_t>(n - 1 - i);
    rule.nodes[lo] = -z;
    rule.nodes[hi] = z;
    const double wgt = 2.0 / ((1.0 - z * z) * dp * dp);
    rule.weights[lo] = wgt;
    rule.weights[hi] = wgt;
  }
  return rule;
}

const QuadratureRule& gauss_legendre_256() {
  static const QuadratureRule rule = gauss_legendre(256);
  return rule;
}

}  // namespace npme::specfun
