#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "doctest.h"
#include "npme/errors.hpp"
#include "npme/kernel.hpp"

using namespace npme::kernel;
using npme::DomainError;
using npme::ValidityError;

namespace {

constexpr double kPi = std::numbers::pi;

bool close_rel(double got, double want, double rel) {
  return std::abs(got - want) <= rel * std::abs(want);
}

// Composite Simpson on [lo, hi]; used as an oracle independent of the
// Gauss-Legendre machinery in the library.
template <class F>
double simpson(F&& f, double lo, double hi, int panels = 20000) {
  const double h = (hi - lo) / panels;
  double s = f(lo) + f(hi);
  for (int i = 1; i < panels; ++i) s += f(lo + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// Integral over [0, R] of g(r) with r = R sin(theta).
template <class F>
double radial_simpson(F&& g, double radius) {
  return simpson([&](double th) { return g(radius * std::sin(th)) * radius * std::cos(th); }, 0.0,
                 kPi / 2.0);
}

struct ParamSet {
  double alpha, m;
  int d;
};

const std::vector<ParamSet> kParamSets = {
    {2.0, 2.0, 1}, {1.0, 2.0, 2}, {1.5, 1.75, 3}, {2.0, 1.5, 3}, {0.5, 3.0, 4}, {1.2, 1.1, 2}};

std::vector<double> random_orthogonal_apply(std::mt19937_64& gen, std::vector<double> x) {
  // Product of random Householder reflections.
  std::normal_distribution<double> normal;
  const std::size_t d = x.size();
  for (int rep = 0; rep < 3; ++rep) {
    std::vector<double> v(d);
    double nn = 0.0;
    for (auto& c : v) {
      c = normal(gen);
      nn += c * c;
    }
    double dot = 0.0;
    for (std::size_t i = 0; i < d; ++i) dot += v[i] * x[i];
    for (std::size_t i = 0; i < d; ++i) x[i] -= 2.0 * dot / nn * v[i];
  }
  return x;
}

}  // namespace

TEST_CASE("derive_constants hand-derived values") {
  const auto p = derive_constants(2.0, 2.0, 1);
  CHECK(close_rel(p.beta(), 1.0 / 3.0, 1e-12));
  CHECK(close_rel(p.k(), 1.0 / 6.0, 1e-12));
  CHECK(close_rel(p.speed(), std::sqrt(6.0), 1e-12));
  CHECK(close_rel(p.big_c(), 3.0 / (4.0 * std::sqrt(6.0)), 1e-12));

  const auto q = derive_constants(1.0, 2.0, 2);
  CHECK(close_rel(q.beta(), 1.0 / 3.0, 1e-12));
  CHECK(close_rel(q.k(), 4.0 / (3.0 * kPi), 1e-12));
}

TEST_CASE("alpha = 2 gives the Barenblatt shape") {
  // With alpha = 2 the constants collapse to k = beta / 2 and exponent 1/(m-1).
  for (double m : {1.2, 1.5, 2.0, 3.0}) {
    for (int d = 1; d <= 5; ++d) {
      const auto p = derive_constants(2.0, m, d);
      CHECK(close_rel(p.beta(), 1.0 / (d * (m - 1.0) + 2.0), 1e-14));
      CHECK(close_rel(p.k(), 0.5 * p.beta(), 1e-12));
      CHECK(close_rel(p.profile_exponent(), 1.0 / (m - 1.0), 1e-14));
    }
  }
}

TEST_CASE("derive_constants rejects out-of-range parameters") {
  CHECK_THROWS_AS(derive_constants(0.0, 2.0, 1), DomainError);
  CHECK_THROWS_AS(derive_constants(2.5, 2.0, 1), DomainError);
  CHECK_THROWS_AS(derive_constants(1.0, 1.0, 1), DomainError);
  CHECK_THROWS_AS(derive_constants(1.0, 2.0, 0), DomainError);
  CHECK_NOTHROW(derive_constants(2.0, 1.0001, 7));
}

TEST_CASE("density values and support") {
  const auto p = derive_constants(2.0, 2.0, 1);
  const std::vector<double> origin = {0.0};
  CHECK(close_rel(density(origin, 1.0, p), 3.0 / (4.0 * std::sqrt(6.0)), 1e-12));
  const std::vector<double> far = {10.0};
  CHECK(density(far, 1.0, p) == 0.0);
  for (const auto& s : kParamSets) {
    const auto q = derive_constants(s.alpha, s.m, s.d);
    for (double t : {0.1, 1.0, 10.0}) {
      CHECK(density_at_radius(q.support_radius(t), t, q) == 0.0);
      CHECK(density_at_radius(0.999 * q.support_radius(t), t, q) > 0.0);
    }
  }
  CHECK_THROWS_AS(density(origin, 0.0, p), DomainError);
  CHECK_THROWS_AS(density(origin, -1.0, p), DomainError);
}

TEST_CASE("density is rotation invariant") {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  for (const auto& s : kParamSets) {
    const auto p = derive_constants(s.alpha, s.m, s.d);
    for (int i = 0; i < 50; ++i) {
      std::vector<double> x(static_cast<std::size_t>(s.d));
      for (auto& c : x) c = coord(gen) * p.speed() / std::sqrt(s.d);
      const auto y = random_orthogonal_apply(gen, x);
      const double a = density(x, 1.0, p);
      const double b = density(y, 1.0, p);
      CHECK(std::abs(a - b) <= 1e-10 * std::max(a, 1e-300));
    }
  }
}

TEST_CASE("radial density: boundary, d = 1 fold, unit mass") {
  const auto p = derive_constants(2.0, 2.0, 1);
  CHECK(radial_density(p.support_radius(1.0), 1.0, p) == 0.0);
  for (double r : {0.1, 0.5, 1.3, 2.2}) {
    CHECK(close_rel(radial_density(r, 1.0, p), 2.0 * density_at_radius(r, 1.0, p), 1e-14));
  }
  for (const auto& s : kParamSets) {
    const auto q = derive_constants(s.alpha, s.m, s.d);
    for (double t : {0.5, 3.0}) {
      const double mass =
          radial_simpson([&](double r) { return radial_density(r, t, q); }, q.support_radius(t));
      CHECK(std::abs(mass - 1.0) < 1e-8);
    }
  }
  CHECK_THROWS_AS(radial_density(-0.1, 1.0, p), DomainError);
  CHECK_THROWS_AS(radial_density(0.1, 0.0, p), DomainError);
}

TEST_CASE("radial cdf") {
  const auto p = derive_constants(2.0, 2.0, 1);
  const double c = p.speed();
  CHECK(radial_cdf(0.0, 1.0, p) == 0.0);
  CHECK(radial_cdf(c, 1.0, p) == 1.0);
  CHECK(radial_cdf(5.0 * c, 1.0, p) == 1.0);
  CHECK(std::abs(radial_cdf(c / 2.0, 1.0, p) - 11.0 / 16.0) < 1e-12);
  CHECK_THROWS_AS(radial_cdf(0.1, 0.0, p), DomainError);

  for (const auto& s : kParamSets) {
    const auto q = derive_constants(s.alpha, s.m, s.d);
    const double t = 2.0;
    const double radius = q.support_radius(t);
    double prev = 0.0;
    for (int i = 1; i < 40; ++i) {
      const double r = radius * i / 40.0;
      const double h = 1e-5 * radius;
      const double slope = (radial_cdf(r + h, t, q) - radial_cdf(r - h, t, q)) / (2.0 * h);
      CHECK(std::abs(slope - radial_density(r, t, q)) <= 1e-6 * std::max(1.0, radial_density(r, t, q)));
      const double v = radial_cdf(r, t, q);
      CHECK(v >= prev);
      prev = v;
    }
  }
}

TEST_CASE("radial moments") {
  const auto p = derive_constants(2.0, 2.0, 1);
  CHECK(radial_moment(0, 1.0, p) == 1.0);
  CHECK(close_rel(radial_moment(2, 1.0, p), 1.2, 1e-12));
  CHECK_THROWS_AS(radial_moment(-1, 1.0, p), DomainError);
  CHECK_THROWS_AS(radial_moment(2, 0.0, p), DomainError);

  for (const auto& s : kParamSets) {
    const auto q = derive_constants(s.alpha, s.m, s.d);
    const double t = 1.7;
    const double radius = q.support_radius(t);
    // Second moment from E[B] with B ~ Beta(d/2, e + 1).
    const double a = 0.5 * s.d;
    const double b = q.profile_exponent() + 1.0;
    CHECK(close_rel(radial_moment(2, t, q), radius * radius * a / (a + b), 1e-12));
    for (int order = 1; order <= 4; ++order) {
      const double want = radial_simpson(
          [&](double r) { return std::pow(r, order) * radial_density(r, t, q); }, radius);
      CHECK(close_rel(radial_moment(order, t, q), want, 1e-8));
    }
  }
}

TEST_CASE("fourier transform closed form") {
  const auto p = derive_constants(2.0, 2.0, 1);
  CHECK(close_rel(fourier_transform(0.0, 1.0, p), 1.0 / std::sqrt(2.0 * kPi), 1e-15));
  const double z = std::sqrt(6.0);
  const double cf = 3.0 * (std::sin(z) - z * std::cos(z)) / (z * z * z);
  CHECK(close_rel(std::sqrt(2.0 * kPi) * fourier_transform(1.0, 1.0, p), cf, 1e-12));
  CHECK(std::abs(std::sqrt(2.0 * kPi) * fourier_transform(1.0, 1.0, p) - 0.5152) < 1e-4);

  for (const auto& s : kParamSets) {
    const auto q = derive_constants(s.alpha, s.m, s.d);
    const double scale = std::pow(2.0 * kPi, 0.5 * s.d);
    CHECK(close_rel(scale * fourier_transform(1e-9, 1.0, q), 1.0, 1e-12));
    for (double xi = 0.0; xi < 40.0; xi += 0.37) {
      CHECK(std::abs(scale * fourier_transform(xi, 2.0, q)) <= 1.0 + 1e-12);
    }
  }
  CHECK_THROWS_AS(fourier_transform(1.0, 0.0, p), DomainError);
}

TEST_CASE("rescaled density and its transform") {
  const auto p = derive_constants(2.0, 2.0, 1);
  const std::vector<double> origin = {0.0};
  CHECK(close_rel(rescaled_density(origin, p), 0.75, 1e-12));
  CHECK(rescaled_density_at_radius(1.0, p) == 0.0);

  for (const auto& s : kParamSets) {
    const auto q = derive_constants(s.alpha, s.m, s.d);
    const double area = sphere_area(s.d);
    const double mass = radial_simpson(
        [&](double r) { return area * std::pow(r, s.d - 1) * rescaled_density_at_radius(r, q); },
        1.0);
    CHECK(std::abs(mass - 1.0) < 1e-8);
    for (double t : {0.3, 2.0}) {
      const double radius = q.support_radius(t);
      for (double r : {0.0, 0.2, 0.7, 0.95}) {
        CHECK(close_rel(rescaled_density_at_radius(r, q),
                        std::pow(radius, s.d) * density_at_radius(radius * r, t, q), 1e-12));
      }
      for (double z : {0.0, 0.5, 3.0, 11.0}) {
        CHECK(std::abs(rescaled_cf(z, q) - fourier_transform(z / radius, t, q)) < 1e-14);
      }
    }
    CHECK(close_rel(rescaled_cf(0.0, q), std::pow(2.0 * kPi, -0.5 * s.d), 1e-15));
  }
}

TEST_CASE("m_from_flight") {
  CHECK(m_from_flight(3, 1, 2.0, FlightCase::D1) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(m_from_flight(4, 1, 1.0, FlightCase::D1) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(m_from_flight(2, 3, 1.5, FlightCase::DirA) == doctest::Approx(1.75).epsilon(1e-15));
  CHECK(m_from_flight(2, 4, 2.0, FlightCase::DirB) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK_THROWS_AS(m_from_flight(1, 2, 1.0, FlightCase::DirA), ValidityError);
  CHECK_THROWS_AS(m_from_flight(1, 3, 1.0, FlightCase::DirA), ValidityError);
  CHECK_THROWS_AS(m_from_flight(2, 3, 1.0, FlightCase::DirB), ValidityError);
  CHECK_THROWS_AS(m_from_flight(1, 1, 1.0, FlightCase::D1), ValidityError);
  CHECK_THROWS_AS(m_from_flight(2, 1, 1.0, FlightCase::D1), ValidityError);
  CHECK_THROWS_AS(m_from_flight(3, 2, 1.0, FlightCase::D1), ValidityError);
  CHECK_THROWS_AS(m_from_flight(3, 1, 1.0, FlightCase::DirA), ValidityError);
  CHECK_THROWS_AS(m_from_flight(3, 2, 1.0, FlightCase::DirB), ValidityError);
  CHECK_THROWS_AS(m_from_flight(0, 3, 1.0, FlightCase::DirA), ValidityError);

  // Validity boundaries: d > 2/n + 1 (dir_a) and d > 2/n + 2 (dir_b).
  for (int n = 1; n <= 8; ++n) {
    for (int d = 2; d <= 8; ++d) {
      const bool ok_a = d > 2.0 / n + 1.0;
      if (ok_a) {
        CHECK(m_from_flight(n, d, 1.0, FlightCase::DirA) > 1.0);
      } else {
        CHECK_THROWS_AS(m_from_flight(n, d, 1.0, FlightCase::DirA), ValidityError);
      }
      if (d >= 3) {
        const bool ok_b = d > 2.0 / n + 2.0;
        if (ok_b) {
          CHECK(m_from_flight(n, d, 1.0, FlightCase::DirB) > 1.0);
        } else {
          CHECK_THROWS_AS(m_from_flight(n, d, 1.0, FlightCase::DirB), ValidityError);
        }
      }
    }
  }
}

TEST_CASE("profile exponent of the mapped m equals the flight density exponent") {
  for (double alpha : {0.3, 1.0, 4.0 / 3.0, 2.0}) {
    for (int n = 1; n <= 7; ++n) {
      for (int d = 1; d <= 7; ++d) {
        for (auto c : {FlightCase::D1, FlightCase::DirA, FlightCase::DirB}) {
          double want = 0.0;
          try {
            want = flight_profile_exponent(n, d, c);
          } catch (const ValidityError&) {
            continue;
          }
          const auto p = derive_constants(alpha, m_from_flight(n, d, alpha, c), d);
          CHECK(std::abs(p.profile_exponent() - want) <= 1e-12 * want);
          if (c == FlightCase::DirA) CHECK(want == 0.5 * n * (d - 1) - 1.0);
          if (c == FlightCase::DirB) CHECK(want == n * (0.5 * d - 1.0) - 1.0);
        }
      }
    }
  }
}

TEST_CASE("diffusivity classification") {
  auto cls = classify_diffusivity(derive_constants(2.0, 2.0, 1));
  CHECK(cls.label == Diffusivity::Sub);
  CHECK(cls.exponent == doctest::Approx(2.0 / 3.0).epsilon(1e-14));

  cls = classify_diffusivity(derive_constants_for_flight(4.0 / 3.0, 3, 1, FlightCase::D1));
  CHECK(cls.label == Diffusivity::Normal);
  CHECK(cls.exponent == 1.0);

  cls = classify_diffusivity(derive_constants_for_flight(1.0, 3, 1, FlightCase::D1));
  CHECK(cls.label == Diffusivity::Super);
  CHECK(cls.exponent == doctest::Approx(4.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("classification thresholds as exact inequalities on alpha") {
  // d = 1: threshold 4k / (2k + 1) for n = 2k + 1 and n = 2k + 2.
  for (int k = 1; k <= 6; ++k) {
    const double want = 4.0 * k / (2.0 * k + 1.0);
    CHECK(diffusivity_threshold(2 * k + 1, 1, FlightCase::D1) == doctest::Approx(want));
    CHECK(diffusivity_threshold(2 * k + 2, 1, FlightCase::D1) == doctest::Approx(want));
    const Rational exact{4 * k, 2 * k + 1};
    CHECK(classify_flight(2 * k + 1, 1, FlightCase::D1, exact).label == Diffusivity::Normal);
    CHECK(classify_flight(2 * k + 1, 1, FlightCase::D1, Rational{4 * k + 1, 2 * k + 1}).label ==
          Diffusivity::Sub);
    CHECK(classify_flight(2 * k + 1, 1, FlightCase::D1, Rational{4 * k - 1, 2 * k + 1}).label ==
          Diffusivity::Super);
  }
  // dir_a: (2n(d-1) - 4) / ((n+1)(d-1) - 1); dir_b: (2n(d-2) - 4) / ((n+1)(d-2)).
  for (int n = 1; n <= 6; ++n) {
    for (int d = 2; d <= 7; ++d) {
      if (d > 2.0 / n + 1.0) {
        const std::int64_t num = 2 * n * (d - 1) - 4;
        const std::int64_t den = (n + 1) * (d - 1) - 1;
        CHECK(diffusivity_threshold(n, d, FlightCase::DirA) ==
              doctest::Approx(static_cast<double>(num) / den));
        if (num <= 2 * den) {
          CHECK(classify_flight(n, d, FlightCase::DirA, Rational{num, den}).label ==
                Diffusivity::Normal);
        }
      }
      if (d >= 3 && d > 2.0 / n + 2.0) {
        const std::int64_t num = 2 * n * (d - 2) - 4;
        const std::int64_t den = (n + 1) * (d - 2);
        CHECK(diffusivity_threshold(n, d, FlightCase::DirB) ==
              doctest::Approx(static_cast<double>(num) / den));
        if (num <= 2 * den) {
          CHECK(classify_flight(n, d, FlightCase::DirB, Rational{num, den}).label ==
                Diffusivity::Normal);
        }
      }
    }
  }
}

TEST_CASE("parse_rational") {
  auto r = parse_rational("4/3");
  CHECK(r.num == 4);
  CHECK(r.den == 3);
  r = parse_rational("1.5");
  CHECK(r.num == 3);
  CHECK(r.den == 2);
  r = parse_rational("2");
  CHECK(r.num == 2);
  CHECK(r.den == 1);
  CHECK_THROWS(parse_rational("abc"));
  CHECK_THROWS(parse_rational("1/0"));
  CHECK_THROWS(parse_rational(""));
}

TEST_CASE("pme residual: preconditions and second-order scheme") {
  const auto p = derive_constants(2.0, 2.0, 1);
  const std::vector<double> x = {0.1};
  CHECK_THROWS_AS(pme_residual(x, 1.0, 1e-3, derive_constants(1.5, 2.0, 1)), DomainError);
  const std::vector<double> edge = {0.999 * p.speed()};
  CHECK_THROWS_AS(pme_residual(edge, 1.0, 1e-3, p), DomainError);
  CHECK_THROWS_AS(pme_residual(x, 1.0, 2.0, p), DomainError);

  // Richardson ratio of successive differences is 4 for an O(h^2) scheme.
  for (const auto& s : kParamSets) {
    if (s.alpha != 2.0) continue;
    const auto q = derive_constants(2.0, s.m, s.d);
    std::vector<double> pt(static_cast<std::size_t>(s.d), 0.05);
    const double r1 = pme_residual(pt, 1.0, 4e-3, q);
    const double r2 = pme_residual(pt, 1.0, 2e-3, q);
    const double r3 = pme_residual(pt, 1.0, 1e-3, q);
    const double ratio = (r1 - r2) / (r2 - r3);
    CHECK(ratio > 3.5);
    CHECK(ratio < 4.5);
  }
}

TEST_CASE("self-similarity") {
  const auto p = derive_constants(2.0, 2.0, 1);
  const std::vector<double> x = {0.3};
  CHECK(self_similar_check(x, 1.0, 1.0, p) == 0.0);
  CHECK(self_similar_check(x, 1.0, 2.0, p) <= 1e-12 * density(x, 1.0, p));
  const std::vector<double> far = {100.0};
  CHECK(self_similar_check(far, 1.0, 2.0, p) == 0.0);
  CHECK_THROWS_AS(self_similar_check(x, 1.0, 0.0, p), DomainError);

  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (const auto& s : kParamSets) {
    const auto q = derive_constants(s.alpha, s.m, s.d);
    for (int i = 0; i < 30; ++i) {
      const double t = 0.1 + 5.0 * unit(gen);
      const double scale = 0.2 + 5.0 * unit(gen);
      std::vector<double> y(static_cast<std::size_t>(s.d));
      for (auto& c : y) c = (2.0 * unit(gen) - 1.0) * q.support_radius(t) / std::sqrt(s.d);
      CHECK(self_similar_check(y, t, scale, q) <= 1e-12 * std::max(density(y, t, q), 1e-300) + 1e-300);
    }
  }
}
