#include "npme/flight.hpp"

#include <cmath>
#include <functional>
#include <string>
#include <thread>

#include "npme/errors.hpp"

namespace npme::flight {

namespace {

// Neumaier summation; only engaged for long flights.
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

constexpr int kCompensateAbove = 1000;

double dirichlet_shape(RenewalLaw law, int d) {
  switch (law) {
    case RenewalLaw::F1:
      return 1.0;
    case RenewalLaw::F2A:
      return d - 1.0;
    case RenewalLaw::F3B:
      return 0.5 * d - 1.0;
  }
  return 1.0;
}

void check_law(RenewalLaw law, int d) {
  switch (law) {
    case RenewalLaw::F1:
      if (d != 1) throw ValidityError("renewal law F1 requires d = 1");
      break;
    case RenewalLaw::F2A:
      if (d < 2) throw ValidityError("renewal law F2A requires d >= 2");
      break;
    case RenewalLaw::F3B:
      if (d < 3) throw ValidityError("renewal law F3B requires d >= 3");
      break;
  }
}

double first_sign(RngStream& stream) { return (stream() >> 63) != 0 ? 1.0 : -1.0; }

void fill_direction(int d, RngStream& stream, std::span<double> out) {
  for (;;) {
    double sq = 0.0;
    for (int i = 0; i < d; ++i) {
      out[i] = stream.normal();
      sq += out[i] * out[i];
    }
    const double len = std::sqrt(sq);
    if (len >= 1e-300) {
      for (int i = 0; i < d; ++i) out[i] /= len;
      return;
    }
  }
}

void run_partitioned(std::size_t count, int workers, int d,
                     const std::function<void(std::size_t, std::span<double>)>& draw,
                     std::vector<double>& coords) {
  coords.assign(count * static_cast<std::size_t>(d), 0.0);
  const auto ud = static_cast<std::size_t>(d);
  auto block = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      draw(i, std::span<double>(coords.data() + i * ud, ud));
    }
  };
  const auto w = static_cast<std::size_t>(workers);
  std::vector<std::thread> threads;
  threads.reserve(w > 0 ? w - 1 : 0);
  for (std::size_t k = 1; k < w; ++k) {
    threads.emplace_back(block, k * count / w, (k + 1) * count / w);
  }
  block(0, count / w);
  for (auto& t : threads) t.join();
}

}  // namespace

std::string_view to_string(RenewalLaw law) {
  switch (law) {
    case RenewalLaw::F1:
      return "F1";
    case RenewalLaw::F2A:
      return "F2A";
    case RenewalLaw::F3B:
      return "F3B";
  }
  return "?";
}

RenewalLaw law_for_case(kernel::FlightCase c) {
  switch (c) {
    case kernel::FlightCase::D1:
      return RenewalLaw::F1;
    case kernel::FlightCase::DirA:
      return RenewalLaw::F2A;
    case kernel::FlightCase::DirB:
      return RenewalLaw::F3B;
  }
  return RenewalLaw::F1;
}

void FlightConfig::validate() const {
  if (d < 1) throw ValidityError("flight dimension d must be at least 1");
  if (n < 1) throw ValidityError("flight needs n >= 1 direction changes");
  check_law(law, d);
  if (!(speed > 0.0) || !std::isfinite(speed)) throw DomainError("flight speed must be positive");
}

double sample_gamma(double shape, RngStream& stream) {
  if (!(shape > 0.0) || !std::isfinite(shape)) {
    throw DomainError("sample_gamma: shape must be positive");
  }
  if (shape < 1.0) {
    const double boost = std::pow(stream.uniform(), 1.0 / shape);
    return sample_gamma(shape + 1.0, stream) * boost;
  }
  const double dd = shape - 1.0 / 3.0;
  const double cc = 1.0 / std::sqrt(9.0 * dd);
  for (;;) {
    double x = 0.0;
    double v = 0.0;
    do {
      x = stream.normal();
      v = 1.0 + cc * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = stream.uniform();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return dd * v;
    if (std::log(u) < 0.5 * x2 + dd * (1.0 - v + std::log(v))) return dd * v;
  }
}

std::vector<double> sample_direction(int d, RngStream& stream,
                                     std::optional<std::span<const double>> prev) {
  if (d < 1) throw DomainError("sample_direction: d must be at least 1");
  if (d == 1) {
    if (prev) {
      if (prev->size() != 1) throw ArgumentError("sample_direction: prev must have size 1");
      return {-(*prev)[0]};
    }
    return {first_sign(stream)};
  }
  std::vector<double> out(static_cast<std::size_t>(d));
  fill_direction(d, stream, out);
  return out;
}

std::vector<double> sample_renewal_fractions(int n, RenewalLaw law, int d, RngStream& stream) {
  if (n < 1) throw ValidityError("renewal fractions need n >= 1");
  check_law(law, d);
  const double shape = dirichlet_shape(law, d);
  std::vector<double> out(static_cast<std::size_t>(n) + 1);
  CompensatedSum total;
  for (double& g : out) {
    g = sample_gamma(shape, stream);
    total.add(g);
  }
  const double s = total.value();
  for (double& g : out) g /= s;
  return out;
}

std::vector<double> assemble_position(double speed, double t_obs, std::span<const double> fractions,
                                      std::span<const double> directions, int d) {
  if (d < 1) throw DomainError("assemble_position: d must be at least 1");
  const auto ud = static_cast<std::size_t>(d);
  if (directions.size() != fractions.size() * ud) {
    throw ArgumentError("assemble_position: need one direction per fraction");
  }
  std::vector<CompensatedSum> acc(ud);
  for (std::size_t k = 0; k < fractions.size(); ++k) {
    for (std::size_t i = 0; i < ud; ++i) acc[i].add(fractions[k] * directions[k * ud + i]);
  }
  std::vector<double> out(ud);
  for (std::size_t i = 0; i < ud; ++i) out[i] = speed * t_obs * acc[i].value();
  return out;
}

void simulate_position_into(double t_obs, const FlightConfig& config, RngStream& stream,
                            std::span<double> out) {
  if (!(t_obs > 0.0)) throw DomainError("simulate_position: t_obs must be positive");
  config.validate();
  const int d = config.d;
  if (static_cast<int>(out.size()) != d) {
    throw ArgumentError("simulate_position: output span has wrong size");
  }
  const double shape = dirichlet_shape(config.law, d);
  const double scale = config.speed * t_obs;

  // sum_k g_k V_k / sum_k g_k with g_k ~ Gamma(shape): the Dirichlet
  // normalization is applied once at the end.
  if (d == 1) {
    double sign = first_sign(stream);
    if (config.n > kCompensateAbove) {
      CompensatedSum total;
      CompensatedSum pos;
      for (int k = 0; k <= config.n; ++k, sign = -sign) {
        const double g = sample_gamma(shape, stream);
        total.add(g);
        pos.add(sign * g);
      }
      out[0] = scale * pos.value() / total.value();
    } else {
      double total = 0.0;
      double pos = 0.0;
      for (int k = 0; k <= config.n; ++k, sign = -sign) {
        const double g = sample_gamma(shape, stream);
        total += g;
        pos += sign * g;
      }
      out[0] = scale * pos / total;
    }
    return;
  }

  constexpr int kStackDim = 16;
  double dir_stack[kStackDim];
  std::vector<double> dir_heap;
  std::span<double> dir;
  if (d <= kStackDim) {
    dir = std::span<double>(dir_stack, static_cast<std::size_t>(d));
  } else {
    dir_heap.resize(static_cast<std::size_t>(d));
    dir = dir_heap;
  }

  if (config.n > kCompensateAbove) {
    CompensatedSum total;
    std::vector<CompensatedSum> pos(static_cast<std::size_t>(d));
    for (int k = 0; k <= config.n; ++k) {
      const double g = sample_gamma(shape, stream);
      fill_direction(d, stream, dir);
      total.add(g);
      for (int i = 0; i < d; ++i) pos[i].add(g * dir[i]);
    }
    const double s = total.value();
    for (int i = 0; i < d; ++i) out[i] = scale * pos[i].value() / s;
    return;
  }

  double total = 0.0;
  for (double& v : out) v = 0.0;
  for (int k = 0; k <= config.n; ++k) {
    const double g = sample_gamma(shape, stream);
    fill_direction(d, stream, dir);
    total += g;
    for (int i = 0; i < d; ++i) out[i] += g * dir[i];
  }
  for (double& v : out) v = scale * v / total;
}

std::vector<double> simulate_position(double t_obs, const FlightConfig& config, RngStream& stream) {
  config.validate();
  std::vector<double> out(static_cast<std::size_t>(config.d));
  simulate_position_into(t_obs, config, stream, out);
  return out;
}

namespace {

FlightConfig rescaled_config(int n, kernel::FlightCase c, const kernel::NpmeParams& p) {
  const int denom = kernel::flight_denominator(n, p.d(), c);
  const double m_minus_one = p.alpha() / denom;
  if (std::abs(m_minus_one - p.m_minus_one()) > 1e-12 * m_minus_one) {
    throw ValidityError("flight (n = " + std::to_string(n) + ", case " +
                        std::string(kernel::to_string(c)) +
                        ") does not correspond to the given m");
  }
  return FlightConfig{p.d(), n, law_for_case(c), p.speed()};
}

}  // namespace

std::vector<double> simulate_rescaled(double t_obs, int n, kernel::FlightCase c,
                                      const kernel::NpmeParams& p, RngStream& stream) {
  if (!(t_obs > 0.0)) throw DomainError("simulate_rescaled: t_obs must be positive");
  const FlightConfig config = rescaled_config(n, c, p);
  return simulate_position(std::pow(t_obs, p.beta()), config, stream);
}

std::vector<double> SampleBatch::norms() const {
  std::vector<double> out(size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double s = 0.0;
    for (double v : position(i)) s += v * v;
    out[i] = std::sqrt(s);
  }
  return out;
}

SampleBatch batch_sample_flight(std::size_t count, double t_obs, const FlightConfig& config,
                                std::uint64_t seed, int workers) {
  if (count == 0) throw ArgumentError("batch_sample: N must be at least 1");
  if (workers < 1) throw ArgumentError("batch_sample: workers must be at least 1");
  if (!(t_obs > 0.0)) throw DomainError("batch_sample: t_obs must be positive");
  config.validate();

  SampleBatch batch;
  batch.d = config.d;
  batch.t_obs = t_obs;
  batch.config = config;
  batch.provenance.seed = seed;
  batch.provenance.workers = workers;
  batch.provenance.internal_time = t_obs;
  run_partitioned(
      count, workers, config.d,
      [&](std::size_t i, std::span<double> out) {
        RngStream stream(seed, i);
        simulate_position_into(t_obs, config, stream, out);
      },
      batch.coords);
  return batch;
}

SampleBatch batch_sample(std::size_t count, double t_obs, int n, kernel::FlightCase c,
                         const kernel::NpmeParams& p, std::uint64_t seed, int workers) {
  if (!(t_obs > 0.0)) throw DomainError("batch_sample: t_obs must be positive");
  const FlightConfig config = rescaled_config(n, c, p);
  SampleBatch batch = batch_sample_flight(count, std::pow(t_obs, p.beta()), config, seed, workers);
  batch.t_obs = t_obs;
  batch.provenance.flight_case = c;
  batch.provenance.alpha = p.alpha();
  batch.provenance.m = p.m();
  return batch;
}

}  // namespace npme::flight
