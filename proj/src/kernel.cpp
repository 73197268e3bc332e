#include "npme/kernel.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "npme/errors.hpp"
#include "npme/specfun.hpp"

namespace npme::kernel {

using specfun::ln_gamma;

namespace {

double norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

void require_positive_time(double t, const char* where) {
  if (!(t > 0.0) || !std::isfinite(t)) {
    throw DomainError(std::string(where) + ": t must be positive");
  }
}

// Gamma(d/2 + e + 1) / (pi^{d/2} Gamma(e + 1)), the value at the origin of
// the unit-radius profile.
double unit_profile_peak(const NpmeParams& p) {
  const double half_d = 0.5 * p.d();
  const double e = p.profile_exponent();
  return std::exp(ln_gamma(half_d + e + 1.0) - half_d * std::log(std::numbers::pi) -
                  ln_gamma(e + 1.0));
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return out;
}

}  // namespace

std::string_view to_string(FlightCase c) {
  switch (c) {
    case FlightCase::D1:
      return "d1";
    case FlightCase::DirA:
      return "dir_a";
    case FlightCase::DirB:
      return "dir_b";
  }
  return "?";
}

FlightCase parse_flight_case(std::string_view text) {
  const std::string s = lower(text);
  if (s == "d1") return FlightCase::D1;
  if (s == "dir_a") return FlightCase::DirA;
  if (s == "dir_b") return FlightCase::DirB;
  throw ArgumentError("unknown flight case '" + std::string(text) +
                      "' (expected d1, dir_a or dir_b)");
}

std::string_view to_string(Diffusivity label) {
  switch (label) {
    case Diffusivity::Sub:
      return "Sub";
    case Diffusivity::Normal:
      return "Normal";
    case Diffusivity::Super:
      return "Super";
  }
  return "?";
}

double NpmeParams::support_radius(double t) const {
  require_positive_time(t, "support_radius");
  return speed_ * std::pow(t, beta_);
}

NpmeParams make_params(double alpha, double m_minus_one, int d) {
  if (!(alpha > 0.0 && alpha <= 2.0)) {
    throw DomainError("alpha must lie in (0,2]");
  }
  if (!(m_minus_one > 0.0) || !std::isfinite(m_minus_one)) {
    throw DomainError("m must be greater than 1");
  }
  if (d < 1) throw DomainError("d must be at least 1");

  NpmeParams p;
  p.alpha_ = alpha;
  p.m_minus_one_ = m_minus_one;
  p.d_ = d;
  const double dd = static_cast<double>(d);
  const double denom = dd * m_minus_one + alpha;
  p.beta_ = 1.0 / denom;
  p.exponent_ = alpha / (2.0 * m_minus_one);

  const double half_d = 0.5 * dd;
  const double ln_k = std::log(dd) + ln_gamma(half_d) - std::log(denom) -
                      alpha * std::numbers::ln2 - ln_gamma(1.0 + 0.5 * alpha) -
                      ln_gamma(0.5 * (dd + alpha));
  p.k_ = std::exp(ln_k);
  p.speed_ = std::exp(-ln_k / alpha);
  p.big_c_ = std::exp(ln_gamma(half_d + p.exponent_ + 1.0) + (dd / alpha) * ln_k -
                      half_d * std::log(std::numbers::pi) - ln_gamma(p.exponent_ + 1.0));
  return p;
}

NpmeParams derive_constants(double alpha, double m, int d) {
  if (!(m > 1.0) || !std::isfinite(m)) throw DomainError("m must be greater than 1");
  return make_params(alpha, m - 1.0, d);
}

NpmeParams derive_constants_for_flight(double alpha, int n, int d, FlightCase c) {
  const int denom = flight_denominator(n, d, c);
  if (!(alpha > 0.0 && alpha <= 2.0)) throw DomainError("alpha must lie in (0,2]");
  return make_params(alpha, alpha / denom, d);
}

double sphere_area(int d) {
  if (d < 1) throw DomainError("sphere_area: d must be at least 1");
  const double half_d = 0.5 * d;
  return 2.0 * std::exp(half_d * std::log(std::numbers::pi) - ln_gamma(half_d));
}

double density(std::span<const double> x, double t, const NpmeParams& p) {
  return density_at_radius(norm(x), t, p);
}

double density_at_radius(double r, double t, const NpmeParams& p) {
  require_positive_time(t, "density");
  const double radius = p.support_radius(t);
  const double s = std::abs(r) / radius;
  if (s >= 1.0) return 0.0;
  const double base = 1.0 - s * s;
  return p.big_c() * std::pow(t, -p.d() * p.beta()) * std::pow(base, p.profile_exponent());
}

double radial_density(double r, double t, const NpmeParams& p) {
  require_positive_time(t, "radial_density");
  if (!(r >= 0.0)) throw DomainError("radial_density: r must be non-negative");
  return sphere_area(p.d()) * std::pow(r, p.d() - 1) * density_at_radius(r, t, p);
}

double radial_cdf(double r, double t, const NpmeParams& p) {
  require_positive_time(t, "radial_cdf");
  if (!(r >= 0.0)) throw DomainError("radial_cdf: r must be non-negative");
  const double s = std::min(r / p.support_radius(t), 1.0);
  return specfun::reg_inc_beta(0.5 * p.d(), p.profile_exponent() + 1.0, s * s);
}

double radial_moment(int order, double t, const NpmeParams& p) {
  require_positive_time(t, "radial_moment");
  if (order < 0) throw DomainError("radial_moment: order must be non-negative");
  if (order == 0) return 1.0;
  const double half_d = 0.5 * p.d();
  const double e = p.profile_exponent();
  const double half_dp = 0.5 * (p.d() + order);
  const double ln_ratio = ln_gamma(half_d + e + 1.0) + ln_gamma(half_dp) -
                          ln_gamma(e + 1.0 + half_dp) - ln_gamma(half_d);
  return std::exp(ln_ratio + order * std::log(p.support_radius(t)));
}

double fourier_transform(double xi_norm, double t, const NpmeParams& p) {
  require_positive_time(t, "fourier_transform");
  if (!(xi_norm >= 0.0)) throw DomainError("fourier_transform: |xi| must be non-negative");
  const double nu = 0.5 * p.d() + p.profile_exponent();
  const double z = xi_norm * p.support_radius(t);
  return std::pow(2.0 * std::numbers::pi, -0.5 * p.d()) *
         specfun::normalized_bessel_j(nu, z);
}

double rescaled_density(std::span<const double> x, const NpmeParams& p) {
  return rescaled_density_at_radius(norm(x), p);
}

double rescaled_density_at_radius(double r, const NpmeParams& p) {
  const double s = std::abs(r);
  if (s >= 1.0) return 0.0;
  return unit_profile_peak(p) * std::pow(1.0 - s * s, p.profile_exponent());
}

double rescaled_cf(double xi_norm, const NpmeParams& p) {
  if (!(xi_norm >= 0.0)) throw DomainError("rescaled_cf: |xi| must be non-negative");
  const double nu = 0.5 * p.d() + p.profile_exponent();
  return std::pow(2.0 * std::numbers::pi, -0.5 * p.d()) *
         specfun::normalized_bessel_j(nu, xi_norm);
}

int flight_denominator(int n, int d, FlightCase c) {
  if (n < 1) throw ValidityError("n must be at least 1");
  switch (c) {
    case FlightCase::D1:
      if (d != 1) throw ValidityError("case d1 requires d = 1");
      if (n % 2 == 1) {
        if (n < 3) throw ValidityError("case d1 requires n >= 3 (n odd) or n >= 4 (n even)");
        return n - 1;
      }
      if (n < 4) throw ValidityError("case d1 requires n >= 3 (n odd) or n >= 4 (n even)");
      return n - 2;
    case FlightCase::DirA: {
      if (d < 2) throw ValidityError("case dir_a requires d >= 2");
      const int denom = n * (d - 1) - 2;
      if (denom <= 0) throw ValidityError("d > 2/n + 1 violated");
      return denom;
    }
    case FlightCase::DirB: {
      if (d < 3) throw ValidityError("case dir_b requires d >= 3");
      const int denom = n * (d - 2) - 2;
      if (denom <= 0) throw ValidityError("d > 2/n + 2 violated");
      return denom;
    }
  }
  throw ValidityError("unknown flight case");
}

double m_from_flight(int n, int d, double alpha, FlightCase c) {
  const int denom = flight_denominator(n, d, c);
  if (!(alpha > 0.0 && alpha <= 2.0)) throw DomainError("alpha must lie in (0,2]");
  return alpha / denom + 1.0;
}

double flight_profile_exponent(int n, int d, FlightCase c) {
  flight_denominator(n, d, c);
  switch (c) {
    case FlightCase::D1:
      return n % 2 == 1 ? 0.5 * (n - 1) : 0.5 * n - 1.0;
    case FlightCase::DirA:
      return 0.5 * n * (d - 1) - 1.0;
    case FlightCase::DirB:
      return n * (0.5 * d - 1.0) - 1.0;
  }
  return 0.0;
}

DiffusivityClass classify_diffusivity(const NpmeParams& p) {
  const double two_beta = 2.0 * p.beta();
  Diffusivity label = Diffusivity::Normal;
  if (two_beta < 1.0) {
    label = Diffusivity::Sub;
  } else if (two_beta > 1.0) {
    label = Diffusivity::Super;
  }
  return {label, two_beta};
}

Rational parse_rational(std::string_view text) {
  auto parse_int = [&](std::string_view s) {
    std::int64_t v = 0;
    const auto* first = s.data();
    const auto* last = s.data() + s.size();
    if (!s.empty() && s.front() == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last || first == last) {
      throw ArgumentError("not a rational number: '" + std::string(text) + "'");
    }
    return v;
  };

  Rational r;
  if (const auto slash = text.find('/'); slash != std::string_view::npos) {
    r.num = parse_int(text.substr(0, slash));
    r.den = parse_int(text.substr(slash + 1));
  } else if (const auto dot = text.find('.'); dot != std::string_view::npos) {
    const std::string_view frac = text.substr(dot + 1);
    if (frac.size() > 15) throw ArgumentError("too many decimals in '" + std::string(text) + "'");
    std::string digits(text.substr(0, dot));
    digits += frac;
    if (digits.empty() || digits == "-" || digits == "+") {
      throw ArgumentError("not a rational number: '" + std::string(text) + "'");
    }
    r.num = parse_int(digits);
    r.den = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) r.den *= 10;
  } else {
    r.num = parse_int(text);
  }
  if (r.den == 0) throw ArgumentError("zero denominator in '" + std::string(text) + "'");
  if (r.den < 0) {
    r.num = -r.num;
    r.den = -r.den;
  }
  const std::int64_t g = std::gcd(r.num, r.den);
  if (g > 1) {
    r.num /= g;
    r.den /= g;
  }
  return r;
}

DiffusivityClass classify_flight(int n, int d, FlightCase c, Rational alpha) {
  const int denom = flight_denominator(n, d, c);
  if (alpha.den <= 0 || alpha.num <= 0 || alpha.num > 2 * alpha.den) {
    throw DomainError("alpha must lie in (0,2]");
  }
  // 2 beta = 2 D den / (num (d + D))
  const __int128 lhs = static_cast<__int128>(2) * denom * alpha.den;
  const __int128 rhs = static_cast<__int128>(alpha.num) * (d + denom);
  Diffusivity label = Diffusivity::Normal;
  if (lhs < rhs) {
    label = Diffusivity::Sub;
  } else if (lhs > rhs) {
    label = Diffusivity::Super;
  }
  const double exponent = (2.0 * denom * static_cast<double>(alpha.den)) /
                          (static_cast<double>(alpha.num) * (d + denom));
  return {label, exponent};
}

double diffusivity_threshold(int n, int d, FlightCase c) {
  const int denom = flight_denominator(n, d, c);
  return 2.0 * denom / static_cast<double>(d + denom);
}

double pme_residual(std::span<const double> x, double t, double h, const NpmeParams& p) {
  if (p.alpha() != 2.0) throw DomainError("pme_residual: requires alpha = 2");
  require_positive_time(t, "pme_residual");
  if (!(h > 0.0) || !(t - h > 0.0)) {
    throw DomainError("pme_residual: need 0 < h < t");
  }
  if (static_cast<int>(x.size()) != p.d()) {
    throw DomainError("pme_residual: point dimension does not match d");
  }
  const double radius = p.support_radius(t);
  if (radius - norm(x) < 10.0 * h * radius) {
    throw DomainError("pme_residual: point too close to the free boundary");
  }

  const double m = p.m();
  const double dudt = (density(x, t + h, p) - density(x, t - h, p)) / (2.0 * h);
  const double center = std::pow(density(x, t, p), m);

  std::vector<double> shifted(x.begin(), x.end());
  double laplacian = 0.0;
  for (std::size_t i = 0; i < shifted.size(); ++i) {
    const double xi = shifted[i];
    shifted[i] = xi + h;
    const double plus = std::pow(density(shifted, t, p), m);
    shifted[i] = xi - h;
    const double minus = std::pow(density(shifted, t, p), m);
    shifted[i] = xi;
    laplacian += (plus - 2.0 * center + minus) / (h * h);
  }
  return dudt - (p.m_minus_one() / m) * laplacian;
}

double self_similar_check(std::span<const double> x, double t, double scale,
                          const NpmeParams& p) {
  require_positive_time(t, "self_similar_check");
  if (!(scale > 0.0)) throw DomainError("self_similar_check: L must be positive");
  const double lb = std::pow(scale, p.beta());
  std::vector<double> y(x.begin(), x.end());
  for (double& v : y) v *= lb;
  const double lhs = density(x, t, p);
  const double rhs = std::pow(scale, p.d() * p.beta()) * density(y, scale * t, p);
  return std::abs(lhs - rhs);
}

}  // namespace npme::kernel
