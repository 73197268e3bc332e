#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "npme/kernel.hpp"

// Command-line front end. Each subcommand is a function of (experiment, input
// files) writing to a stream or to --out; the process exit code is
//   0 pass, 1 statistical failure, 2 invalid arguments, 3 I/O failure.
namespace npme::cli {

enum ExitCode : int { kExitOk = 0, kExitStatFail = 1, kExitInvalid = 2, kExitIo = 3 };

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Tolerances {
  double moment_sigmas = 4.0;
  double cf_sigmas = 4.0;
  double mass = 1e-8;
};

struct ExperimentSpec {
  std::string mode;
  /// Kept as text so that "4/3" classifies exactly.
  std::optional<std::string> alpha;
  std::optional<double> m;
  std::optional<int> n;
  std::optional<kernel::FlightCase> flight_case;
  std::optional<int> d;
  std::optional<double> t_obs;
  std::size_t count = 100000;
  std::uint64_t seed = 1;
  int workers = 1;
  Tolerances tolerances;
  int points = 101;
  std::vector<double> xi_grid;
  std::string rows;
  std::string out;
  std::string input;
  std::string csv;
};

/// Fills an ExperimentSpec from a JSON config document. Unknown keys are rejected.
void apply_config(const nlohmann::json& config, ExperimentSpec& spec);

/// Porous-medium params for an experiment: alpha and d are required, plus exactly
/// one of m or (n, case).
kernel::NpmeParams resolve_params(const ExperimentSpec& spec);

/// Fills in n from (m, case) when only m was given; throws ValidityError if
/// m does not come from any flight of that case.
void resolve_flight(ExperimentSpec& spec);

int cmd_params(const ExperimentSpec& spec, std::ostream& out);
int cmd_density(const ExperimentSpec& spec, std::ostream& out);
int cmd_simulate(const ExperimentSpec& spec, std::ostream& out);
int cmd_verify(const ExperimentSpec& spec, std::ostream& out);
int cmd_classify(const ExperimentSpec& spec, std::ostream& out);

/// Full entry point: parses args (without the program name), dispatches,
/// maps exceptions to exit codes and messages on `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace npme::cli
