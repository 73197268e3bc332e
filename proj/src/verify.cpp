#include "npme/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "npme/errors.hpp"
#include "npme/specfun.hpp"

namespace npme::verify {

namespace {

struct CompensatedSum {
  double sum = 0.0;
  double carry = 0.0;
  void add(double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      carry += (sum - t) + v;
    } else {
      carry += (v - t) + sum;
    }
    sum = t;
  }
  double value() const { return sum + carry; }
};

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string label_with(const std::string& base, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s[%g]", base.c_str(), v);
  return buf;
}

// Integrates f(r) r^{d-1} area dr over [0, R] through r = R sin(theta).
template <class F>
double radial_integral(double radius, int d, F&& f) {
  const auto& rule = specfun::gauss_legendre_256();
  const double half = 0.25 * std::numbers::pi;  // theta in [0, pi/2]
  const double area = kernel::sphere_area(d);
  CompensatedSum acc;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double theta = half * (rule.nodes[i] + 1.0);
    const double r = radius * std::sin(theta);
    const double jac = radius * std::cos(theta);
    acc.add(rule.weights[i] * half * area * std::pow(r, d - 1) * f(r) * jac);
  }
  return acc.value();
}

}  // namespace

double ks_threshold(std::size_t n) {
  if (n == 0) throw ArgumentError("ks_threshold: need at least one sample");
  return kKsCoefficient / std::sqrt(static_cast<double>(n));
}

double two_sample_ks_threshold(std::size_t n_a, std::size_t n_b) {
  if (n_a == 0 || n_b == 0) throw ArgumentError("two_sample_ks_threshold: empty sample");
  const double a = static_cast<double>(n_a);
  const double b = static_cast<double>(n_b);
  return kKsCoefficient * std::sqrt((a + b) / (a * b));
}

double ks_statistic(std::span<const double> sorted, const std::function<double(double)>& cdf) {
  if (sorted.empty()) throw ArgumentError("ks_statistic: empty sample");
  if (!std::is_sorted(sorted.begin(), sorted.end())) {
    throw ArgumentError("ks_statistic: samples must be sorted");
  }
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    const double above = static_cast<double>(i + 1) / n - f;
    const double below = f - static_cast<double>(i) / n;
    d = std::max({d, above, below});
  }
  return std::clamp(d, 0.0, 1.0);
}

double two_sample_ks(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw ArgumentError("two_sample_ks: empty sample");
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < sa.size() && j < sb.size()) {
    const double x = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] == x) ++i;
    while (j < sb.size() && sb[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  // Once one side is exhausted its CDF is 1; the gap only shrinks from here.
  return d;
}

TestFragment make_fragment(std::string name, TestKind kind, double statistic, double threshold) {
  TestFragment f;
  f.name = std::move(name);
  f.kind = kind;
  f.statistic = statistic;
  f.threshold = threshold;
  f.pass = statistic <= threshold;
  f.error = statistic;
  return f;
}

TestFragment beta_square_test(std::span<const double> norms, const kernel::NpmeParams& p,
                              double t_obs) {
  if (norms.empty()) throw ArgumentError("beta_square_test: empty batch");
  const double radius = p.support_radius(t_obs);
  std::vector<double> squares(norms.size());
  std::transform(norms.begin(), norms.end(), squares.begin(), [&](double r) {
    const double s = std::min(r / radius, 1.0);
    return s * s;
  });
  std::sort(squares.begin(), squares.end());
  const double a = 0.5 * p.d();
  const double b = p.profile_exponent() + 1.0;
  const double stat =
      ks_statistic(squares, [&](double x) { return specfun::reg_inc_beta(a, b, x); });
  return make_fragment("beta_square_ks", TestKind::OneSampleKs, stat, ks_threshold(norms.size()));
}

TestFragment beta_square_test(const flight::SampleBatch& batch, const kernel::NpmeParams& p,
                              double t_obs) {
  if (batch.d != p.d()) throw ArgumentError("beta_square_test: batch dimension differs from d");
  const auto norms = batch.norms();
  return beta_square_test(std::span<const double>(norms), p, t_obs);
}

std::vector<MomentEstimate> empirical_moments(const flight::SampleBatch& batch,
                                              std::span<const int> orders) {
  if (batch.size() == 0) throw ArgumentError("empirical_moments: empty batch");
  const auto norms = batch.norms();
  const double n = static_cast<double>(norms.size());
  std::vector<MomentEstimate> out;
  out.reserve(orders.size());
  for (int order : orders) {
    if (order < 0) throw ArgumentError("empirical_moments: negative order");
    MomentEstimate est;
    est.order = order;
    if (order == 0) {
      est.mean = 1.0;
      out.push_back(est);
      continue;
    }
    CompensatedSum sum;
    for (double r : norms) sum.add(std::pow(r, order));
    est.mean = sum.value() / n;
    if (norms.size() > 1) {
      CompensatedSum sq;
      for (double r : norms) {
        const double dev = std::pow(r, order) - est.mean;
        sq.add(dev * dev);
      }
      est.std_error = std::sqrt(sq.value() / (n - 1.0) / n);
    }
    out.push_back(est);
  }
  return out;
}

std::vector<TestFragment> moment_tests(const flight::SampleBatch& batch,
                                       const kernel::NpmeParams& p, double t_obs,
                                       std::span<const int> orders, double sigmas) {
  std::vector<TestFragment> out;
  for (const auto& est : empirical_moments(batch, orders)) {
    const double expected = kernel::radial_moment(est.order, t_obs, p);
    auto f = make_fragment("moment_" + std::to_string(est.order), TestKind::Moment,
                           std::abs(est.mean - expected), sigmas * est.std_error);
    f.order = est.order;
    f.error = std::abs(est.mean - expected) / expected;
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<std::complex<double>> empirical_cf(const flight::SampleBatch& batch,
                                               std::span<const double> xi_grid) {
  if (batch.size() == 0) throw ArgumentError("empirical_cf: empty batch");
  const auto d = static_cast<std::size_t>(batch.d);
  if (xi_grid.empty() || xi_grid.size() % d != 0) {
    throw ArgumentError("empirical_cf: grid must hold a whole number of d-vectors");
  }
  const double n = static_cast<double>(batch.size());
  std::vector<std::complex<double>> out;
  for (std::size_t g = 0; g < xi_grid.size(); g += d) {
    const auto xi = xi_grid.subspan(g, d);
    CompensatedSum re;
    CompensatedSum im;
    for (std::size_t j = 0; j < batch.size(); ++j) {
      const auto x = batch.position(j);
      double phase = 0.0;
      for (std::size_t i = 0; i < d; ++i) phase += xi[i] * x[i];
      re.add(std::cos(phase));
      im.add(std::sin(phase));
    }
    out.emplace_back(re.value() / n, im.value() / n);
  }
  return out;
}

std::vector<TestFragment> cf_tests(const flight::SampleBatch& batch,
                                   const kernel::NpmeParams& p, double t_obs,
                                   std::span<const double> xi_norms, double sigmas) {
  if (xi_norms.empty()) throw ArgumentError("cf_tests: empty xi grid");
  const auto d = static_cast<std::size_t>(batch.d);
  std::vector<double> grid(xi_norms.size() * d, 0.0);
  for (std::size_t k = 0; k < xi_norms.size(); ++k) grid[k * d] = xi_norms[k];
  const auto values = empirical_cf(batch, grid);
  const double tol = sigmas / std::sqrt(static_cast<double>(batch.size()));
  const double cf_scale = std::pow(2.0 * std::numbers::pi, 0.5 * p.d());
  std::vector<TestFragment> out;
  for (std::size_t k = 0; k < xi_norms.size(); ++k) {
    const double target = cf_scale * kernel::fourier_transform(xi_norms[k], t_obs, p);
    out.push_back(make_fragment(label_with("cf_re", xi_norms[k]),
                                TestKind::CharacteristicFunction,
                                std::abs(values[k].real() - target), tol));
    out.push_back(make_fragment(label_with("cf_im", xi_norms[k]),
                                TestKind::CharacteristicFunction, std::abs(values[k].imag()),
                                tol));
  }
  return out;
}

double mass_quadrature(const kernel::NpmeParams& p, double t_obs) {
  const double radius = p.support_radius(t_obs);
  return radial_integral(radius, p.d(),
                         [&](double r) { return kernel::density_at_radius(r, t_obs, p); });
}

TestFragment mass_test(const kernel::NpmeParams& p, double t_obs, double tolerance) {
  return make_fragment(label_with("mass_t", t_obs), TestKind::Mass,
                       std::abs(mass_quadrature(p, t_obs) - 1.0), tolerance);
}

double fourier_quadrature(double xi_norm, double t_obs, const kernel::NpmeParams& p) {
  if (!(xi_norm >= 0.0)) throw DomainError("fourier_quadrature: |xi| must be non-negative");
  const int d = p.d();
  const double area = kernel::sphere_area(d);
  const double two_pi_half_d = std::pow(2.0 * std::numbers::pi, 0.5 * d);
  const double order = 0.5 * d - 1.0;
  // Average of exp(i z theta_1) over the unit sphere, normalized by its area.
  auto sphere_mean = [&](double z) {
    if (z == 0.0) return 1.0;
    if (d == 1) return std::cos(z);
    return two_pi_half_d * specfun::bessel_j(order, z) / std::pow(z, order) / area;
  };
  const double radius = p.support_radius(t_obs);
  const double integral = radial_integral(radius, d, [&](double r) {
    return kernel::density_at_radius(r, t_obs, p) * sphere_mean(r * xi_norm);
  });
  return integral / two_pi_half_d;
}

TestFragment scaling_test(int n, kernel::FlightCase c, const kernel::NpmeParams& p, double t,
                          double a, std::size_t count, std::uint64_t seed,
                          const ScalingOptions& options) {
  if (!(a > 0.0)) throw DomainError("scaling_test: a must be positive");
  if (!(t > 0.0)) throw DomainError("scaling_test: t must be positive");
  const flight::FlightConfig config{p.d(), n, flight::law_for_case(c), p.speed()};
  const auto lhs = flight::batch_sample_flight(count, t / a, config, seed, options.workers);
  const std::uint64_t rhs_seed = options.independent_streams ? mix64(seed) : seed;
  const auto rhs = flight::batch_sample_flight(count, t, config, rhs_seed, options.workers);
  auto lhs_norms = lhs.norms();
  if (options.apply_scale) {
    for (double& r : lhs_norms) r *= a;
  }
  const auto rhs_norms = rhs.norms();
  return make_fragment(label_with("scaling_a", a), TestKind::TwoSampleKs,
                       two_sample_ks(lhs_norms, rhs_norms),
                       two_sample_ks_threshold(lhs_norms.size(), rhs_norms.size()));
}

TestFragment parity_test(int n, double speed, double t, std::size_t count, std::uint64_t seed,
                         int workers) {
  if (n < 1 || n % 2 == 0) throw ArgumentError("parity_test: n must be odd");
  const flight::FlightConfig odd{1, n, flight::RenewalLaw::F1, speed};
  const flight::FlightConfig even{1, n + 1, flight::RenewalLaw::F1, speed};
  const auto a = flight::batch_sample_flight(count, t, odd, seed, workers).norms();
  const auto b = flight::batch_sample_flight(count, t, even, mix64(seed), workers).norms();
  return make_fragment("parity_n" + std::to_string(n), TestKind::TwoSampleKs,
                       two_sample_ks(a, b), two_sample_ks_threshold(a.size(), b.size()));
}

nlohmann::json VerificationReport::to_json() const {
  nlohmann::json tests_json = nlohmann::json::array();
  for (const auto& t : tests) {
    tests_json.push_back({{"name", t.name},
                          {"statistic", t.statistic},
                          {"threshold", t.threshold},
                          {"pass", t.pass}});
  }
  nlohmann::json moments = nlohmann::json::array();
  for (const auto& [order, err] : moment_errors) {
    moments.push_back({{"order", order}, {"relative_error", err}});
  }
  return {{"pass", pass},
          {"tests", tests_json},
          {"summary",
           {{"ks_stat", ks_stat},
            {"ks_threshold", ks_threshold},
            {"moment_errors", moments},
            {"cf_max_abs_err", cf_max_abs_err},
            {"mass_abs_err", mass_abs_err}}},
          {"metadata", metadata}};
}

std::string VerificationReport::to_csv() const {
  std::ostringstream os;
  os << "name,statistic,threshold,pass\n";
  for (const auto& t : tests) {
    os << t.name << ',' << format_double(t.statistic) << ',' << format_double(t.threshold) << ','
       << (t.pass ? "true" : "false") << '\n';
  }
  return os.str();
}

VerificationReport build_report(std::span<const TestFragment> fragments, nlohmann::json metadata) {
  if (fragments.empty()) throw ArgumentError("build_report: no test fragments");
  VerificationReport report;
  report.tests.assign(fragments.begin(), fragments.end());
  report.metadata = std::move(metadata);
  report.pass = true;
  for (const auto& f : fragments) {
    report.pass = report.pass && f.pass;
    switch (f.kind) {
      case TestKind::OneSampleKs:
        if (f.statistic >= report.ks_stat) {
          report.ks_stat = f.statistic;
          report.ks_threshold = f.threshold;
        }
        break;
      case TestKind::Moment:
        report.moment_errors.emplace_back(f.order, f.error);
        break;
      case TestKind::CharacteristicFunction:
        report.cf_max_abs_err = std::max(report.cf_max_abs_err, f.statistic);
        break;
      case TestKind::Mass:
        report.mass_abs_err = std::max(report.mass_abs_err, f.statistic);
        break;
      default:
        break;
    }
  }
  return report;
}

}  // namespace npme::verify
