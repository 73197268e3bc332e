#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace npme {

/// Reproducible random stream keyed by (seed, stream_id).
///
/// xoshiro256** whose state is expanded from the key with SplitMix64. Every
/// sample of a batch gets its own stream id, so the draws behind a sample do
/// not depend on how the batch is split across threads. Uniform and normal
/// variates are derived from the raw bits here rather than through
/// <random> distributions, whose output is implementation-defined.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();
  /// Standard normal, Marsaglia polar method.
  double normal();

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::array<std::uint64_t, 4> state_{};
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

/// SplitMix64 finalizer, also used to derive independent seeds.
std::uint64_t mix64(std::uint64_t x);

}  // namespace npme
