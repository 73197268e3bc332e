#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "npme/kernel.hpp"
#include "npme/rng.hpp"

// Isotropic random flights X^n(t): a particle leaves the origin with speed c,
// picks n + 1 directions V_0..V_n and spends the fraction tau_k / t of the
// time on V_k. The time-rescaled flight Y^n(t) = X^n(t^beta) with speed
// c = k^{-1/alpha} has the porous-medium profile u(., t) as its law.
namespace npme::flight {

enum class RenewalLaw {
  F1,   ///< uniform on the simplex, Dirichlet(1, ..., 1)
  F2A,  ///< Dirichlet(d-1, ..., d-1)
  F3B,  ///< Dirichlet(d/2-1, ..., d/2-1)
};

std::string_view to_string(RenewalLaw law);
RenewalLaw law_for_case(kernel::FlightCase c);

struct FlightConfig {
  int d = 1;
  int n = 1;  // number of direction changes; n + 1 directions
  RenewalLaw law = RenewalLaw::F1;
  double speed = 1.0;

  /// Throws ValidityError / DomainError when the invariants do not hold.
  void validate() const;
};

/// Gamma(shape, 1) variate. Marsaglia-Tsang squeeze for shape >= 1;
/// shape < 1 draws Gamma(shape + 1) and multiplies by U^{1/shape}.
double sample_gamma(double shape, RngStream& stream);

/// Uniform direction on S^{d-1}. For d = 1 the first draw is a fair sign and
/// every later call with `prev` returns -prev.
std::vector<double> sample_direction(int d, RngStream& stream,
                                     std::optional<std::span<const double>> prev = std::nullopt);

/// n + 1 renewal fractions tau_k / t drawn by normalizing independent
/// Gamma variates.
std::vector<double> sample_renewal_fractions(int n, RenewalLaw law, int d, RngStream& stream);

/// speed * t_obs * sum_k fraction_k V_k. `directions` holds fractions.size()
/// unit vectors of length d, stored contiguously.
std::vector<double> assemble_position(double speed, double t_obs, std::span<const double> fractions,
                                      std::span<const double> directions, int d);

std::vector<double> simulate_position(double t_obs, const FlightConfig& config, RngStream& stream);

/// Allocation-free variant of simulate_position(); `out` has size d.
void simulate_position_into(double t_obs, const FlightConfig& config, RngStream& stream,
                            std::span<double> out);

/// Y^n(t) = X^n(t^beta) with speed c from `p`. Checks that (n, d, case)
/// maps to p's m.
std::vector<double> simulate_rescaled(double t_obs, int n, kernel::FlightCase c,
                                      const kernel::NpmeParams& p, RngStream& stream);

/// Where a batch came from.
struct Provenance {
  std::uint64_t seed = 0;
  int workers = 1;
  /// Set when the batch is a rescaled flight tied to porous-medium params.
  std::optional<kernel::FlightCase> flight_case;
  std::optional<double> alpha;
  std::optional<double> m;
  /// Time at which the flight itself was observed (t_obs^beta when rescaled).
  double internal_time = 0.0;
};

/// N terminal positions in R^d, row-major.
struct SampleBatch {
  int d = 1;
  double t_obs = 1.0;
  FlightConfig config;
  Provenance provenance;
  std::vector<double> coords;

  std::size_t size() const { return d > 0 ? coords.size() / static_cast<std::size_t>(d) : 0; }
  std::span<const double> position(std::size_t i) const {
    return {coords.data() + i * static_cast<std::size_t>(d), static_cast<std::size_t>(d)};
  }
  /// Euclidean norms of all positions.
  std::vector<double> norms() const;
};

/// N rescaled flights at t_obs. Sample i uses RngStream(seed, i); workers
/// own contiguous index blocks, so the output does not depend on `workers`.
SampleBatch batch_sample(std::size_t count, double t_obs, int n, kernel::FlightCase c,
                         const kernel::NpmeParams& p, std::uint64_t seed, int workers);

/// Same partitioning for a plain flight observed at `t_obs` (no time change).
SampleBatch batch_sample_flight(std::size_t count, double t_obs, const FlightConfig& config,
                                std::uint64_t seed, int workers);

}  // namespace npme::flight
