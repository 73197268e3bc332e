#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "npme/flight.hpp"
#include "npme/kernel.hpp"

// Confronts simulated flights with the analytic kernel.
//
// All goodness-of-fit tests work at the 0.1% asymptotic level: the
// one-sample KS threshold is 1.95 / sqrt(N), the two-sample one
// 1.95 sqrt((N_a + N_b) / (N_a N_b)).
namespace npme::verify {

inline constexpr double kKsCoefficient = 1.95;

double ks_threshold(std::size_t n);
double two_sample_ks_threshold(std::size_t n_a, std::size_t n_b);

/// One-sample two-sided KS distance of sorted samples against `cdf`.
/// Throws ArgumentError on empty or unsorted input.
double ks_statistic(std::span<const double> sorted, const std::function<double(double)>& cdf);

/// Sup-distance between the empirical CDFs of a and b (order irrelevant).
double two_sample_ks(std::span<const double> a, std::span<const double> b);

enum class TestKind { OneSampleKs, TwoSampleKs, Moment, CharacteristicFunction, Mass, Other };

/// Outcome of one test: pass <=> statistic <= threshold.
struct TestFragment {
  std::string name;
  TestKind kind = TestKind::Other;
  double statistic = 0.0;
  double threshold = 0.0;
  bool pass = false;
  /// Moment order for TestKind::Moment, unused otherwise.
  int order = 0;
  /// Relative error for moment tests, absolute error otherwise.
  double error = 0.0;
};

TestFragment make_fragment(std::string name, TestKind kind, double statistic, double threshold);

/// KS test of s^2 = (|x| / (c t^beta))^2 against Beta(d/2, alpha/(2(m-1)) + 1).
TestFragment beta_square_test(const flight::SampleBatch& batch, const kernel::NpmeParams& p,
                              double t_obs);
/// Same test on precomputed norms.
TestFragment beta_square_test(std::span<const double> norms, const kernel::NpmeParams& p,
                              double t_obs);

struct MomentEstimate {
  int order = 0;
  double mean = 0.0;
  double std_error = 0.0;
};

/// Sample mean of |x|^p for each order, with its standard error.
std::vector<MomentEstimate> empirical_moments(const flight::SampleBatch& batch,
                                              std::span<const int> orders);

/// One fragment per order: |mean - radial_moment| against sigmas * std_error.
std::vector<TestFragment> moment_tests(const flight::SampleBatch& batch,
                                       const kernel::NpmeParams& p, double t_obs,
                                       std::span<const int> orders, double sigmas = 4.0);

/// (1/N) sum_j exp(i xi . x_j) for each xi (each of length d, stored
/// contiguously in `xi_grid`).
std::vector<std::complex<double>> empirical_cf(const flight::SampleBatch& batch,
                                               std::span<const double> xi_grid);

/// Real and imaginary parts of the empirical CF along e_1 against
/// (2 pi)^{d/2} times the closed-form transform, tolerance sigmas / sqrt(N).
std::vector<TestFragment> cf_tests(const flight::SampleBatch& batch,
                                   const kernel::NpmeParams& p, double t_obs,
                                   std::span<const double> xi_norms, double sigmas = 4.0);

/// Total mass of u(., t) by radial Gauss-Legendre quadrature (256 nodes,
/// r = c t^beta sin(theta) so the boundary factor becomes a smooth power of
/// cos(theta)).
double mass_quadrature(const kernel::NpmeParams& p, double t_obs);

TestFragment mass_test(const kernel::NpmeParams& p, double t_obs, double tolerance = 1e-8);

/// Fourier transform of u(., t) at |xi| by direct radial quadrature of the
/// density against the unit-sphere average of exp(i xi . x). Independent of
/// the closed-form Bessel expression in kernel::fourier_transform.
double fourier_quadrature(double xi_norm, double t_obs, const kernel::NpmeParams& p);

struct ScalingOptions {
  /// Draw the two sides from different seeds.
  bool independent_streams = true;
  /// Multiply the left side by a; turning this off gives a power check.
  bool apply_scale = true;
  int workers = 1;
};

/// Two-sample KS between |a X^n(t/a)| and |X^n(t)| for the flight with speed
/// p.speed() and the renewal law of `c`.
TestFragment scaling_test(int n, kernel::FlightCase c, const kernel::NpmeParams& p, double t,
                          double a, std::size_t count, std::uint64_t seed,
                          const ScalingOptions& options = {});

/// d = 1 telegraph parity: |X^n(t)| against |X^{n+1}(t)| for odd n.
TestFragment parity_test(int n, double speed, double t, std::size_t count, std::uint64_t seed,
                         int workers = 1);

struct VerificationReport {
  std::vector<TestFragment> tests;
  double ks_stat = 0.0;
  double ks_threshold = 0.0;
  std::vector<std::pair<int, double>> moment_errors;
  double cf_max_abs_err = 0.0;
  double mass_abs_err = 0.0;
  bool pass = false;
  nlohmann::json metadata = nlohmann::json::object();

  /// {"pass": ..., "tests": [{name, statistic, threshold, pass}, ...], ...}
  nlohmann::json to_json() const;
  /// name,statistic,threshold,pass
  std::string to_csv() const;
};

/// Overall pass is the conjunction of the fragments. Throws on an empty list.
VerificationReport build_report(std::span<const TestFragment> fragments,
                                nlohmann::json metadata = nlohmann::json::object());

}  // namespace npme::verify
