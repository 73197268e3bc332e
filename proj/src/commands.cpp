#include "npme/commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "npme/errors.hpp"
#include "npme/flight.hpp"
#include "npme/verify.hpp"

namespace npme::cli {

namespace {

using kernel::FlightCase;
using kernel::NpmeParams;
using nlohmann::json;

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double alpha_value(const ExperimentSpec& spec) {
  if (!spec.alpha) throw ArgumentError("--alpha is required");
  return kernel::parse_rational(*spec.alpha).value();
}

double t_obs_of(const ExperimentSpec& spec) {
  const double t = spec.t_obs.value_or(1.0);
  if (!(t > 0.0)) throw DomainError("t must be positive");
  return t;
}

// Runs `write` against --out when set, else against `out`.
template <class F>
void emit(const ExperimentSpec& spec, std::ostream& out, F&& write) {
  if (spec.out.empty()) {
    write(out);
    return;
  }
  std::ofstream file(spec.out, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot open output file '" + spec.out + "'");
  write(file);
  file.flush();
  if (!file) throw IoError("failed writing '" + spec.out + "'");
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot open output file '" + path + "'");
  file << text;
  if (!file) throw IoError("failed writing '" + path + "'");
}

std::string alpha_text_from_json(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number()) return v.dump();
  throw ArgumentError("config: alpha must be a number or a string");
}

json params_json(const NpmeParams& p) {
  return {{"alpha", p.alpha()}, {"m", p.m()},         {"d", p.d()},
          {"beta", p.beta()},   {"k", p.k()},         {"C", p.big_c()},
          {"c", p.speed()},     {"two_beta", 2.0 * p.beta()}};
}

kernel::DiffusivityClass classify_spec(const ExperimentSpec& spec, const NpmeParams& p) {
  if (spec.n && spec.flight_case && spec.alpha) {
    return kernel::classify_flight(*spec.n, p.d(), *spec.flight_case,
                                   kernel::parse_rational(*spec.alpha));
  }
  return kernel::classify_diffusivity(p);
}

struct LoadedBatch {
  json header;
  flight::SampleBatch batch;
};

LoadedBatch read_batch(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open input file '" + path + "'");
  LoadedBatch loaded;
  std::string line;
  if (!std::getline(in, line)) throw IoError("input file '" + path + "' is empty");
  try {
    loaded.header = json::parse(line);
  } catch (const json::exception& e) {
    throw IoError("malformed JSONL header in '" + path + "': " + e.what());
  }
  if (!loaded.header.is_object() || !loaded.header.contains("d")) {
    throw IoError("JSONL header in '" + path + "' lacks the field d");
  }
  auto& batch = loaded.batch;
  batch.d = loaded.header.at("d").get<int>();
  batch.t_obs = loaded.header.value("t_obs", 1.0);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json row;
    try {
      row = json::parse(line);
    } catch (const json::exception& e) {
      throw IoError("malformed sample on line " + std::to_string(line_no) + " of '" + path + "'");
    }
    if (!row.is_array() || static_cast<int>(row.size()) != batch.d) {
      throw IoError("sample on line " + std::to_string(line_no) + " is not a " +
                    std::to_string(batch.d) + "-vector");
    }
    for (const auto& v : row) batch.coords.push_back(v.get<double>());
  }
  if (batch.size() == 0) throw IoError("input file '" + path + "' holds no samples");
  return loaded;
}

std::vector<std::vector<std::string>> parse_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::string chunk;
  std::istringstream all(text);
  while (std::getline(all, chunk, ';')) {
    std::istringstream line(chunk);
    std::string row_text;
    while (std::getline(line, row_text)) {
      std::vector<std::string> fields;
      std::string field;
      std::istringstream cells(row_text);
      while (std::getline(cells, field, ',')) {
        const auto b = field.find_first_not_of(" \t\r");
        const auto e = field.find_last_not_of(" \t\r");
        fields.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
      }
      if (fields.empty() || (fields.size() == 1 && fields[0].empty())) continue;
      if (fields[0] == "d") continue;  // header line
      if (fields.size() != 4) {
        throw ArgumentError("classify rows need 4 fields (d,n,case,alpha): '" + row_text + "'");
      }
      rows.push_back(std::move(fields));
    }
  }
  return rows;
}

int to_int(const std::string& s, const char* what) {
  std::size_t pos = 0;
  int v = 0;
  try {
    v = std::stoi(s, &pos);
  } catch (const std::exception&) {
    throw ArgumentError(std::string(what) + " must be an integer, got '" + s + "'");
  }
  if (pos != s.size()) throw ArgumentError(std::string(what) + " must be an integer, got '" + s + "'");
  return v;
}

}  // namespace

void apply_config(const json& config, ExperimentSpec& spec) {
  if (!config.is_object()) throw ArgumentError("config must be a JSON object");
  for (const auto& [key, v] : config.items()) {
    if (key == "mode") {
      spec.mode = v.get<std::string>();
    } else if (key == "alpha") {
      spec.alpha = alpha_text_from_json(v);
    } else if (key == "m") {
      spec.m = v.get<double>();
    } else if (key == "n") {
      spec.n = v.get<int>();
    } else if (key == "case") {
      spec.flight_case = kernel::parse_flight_case(v.get<std::string>());
    } else if (key == "d") {
      spec.d = v.get<int>();
    } else if (key == "t" || key == "t_obs") {
      spec.t_obs = v.get<double>();
    } else if (key == "N") {
      const auto count = v.get<long long>();
      if (count < 0) throw ArgumentError("N must be non-negative");
      spec.count = static_cast<std::size_t>(count);
    } else if (key == "seed") {
      spec.seed = v.get<std::uint64_t>();
    } else if (key == "workers") {
      spec.workers = v.get<int>();
    } else if (key == "points") {
      spec.points = v.get<int>();
    } else if (key == "xi") {
      spec.xi_grid = v.get<std::vector<double>>();
    } else if (key == "rows") {
      if (v.is_string()) {
        spec.rows = v.get<std::string>();
      } else {
        std::string joined;
        for (const auto& r : v) {
          joined += std::to_string(r.at("d").get<int>()) + "," +
                    std::to_string(r.at("n").get<int>()) + "," + r.at("case").get<std::string>() +
                    "," + alpha_text_from_json(r.at("alpha")) + ";";
        }
        spec.rows = joined;
      }
    } else if (key == "out") {
      spec.out = v.get<std::string>();
    } else if (key == "input") {
      spec.input = v.get<std::string>();
    } else if (key == "csv") {
      spec.csv = v.get<std::string>();
    } else if (key == "tolerances") {
      spec.tolerances.moment_sigmas = v.value("moment_sigmas", spec.tolerances.moment_sigmas);
      spec.tolerances.cf_sigmas = v.value("cf_sigmas", spec.tolerances.cf_sigmas);
      spec.tolerances.mass = v.value("mass", spec.tolerances.mass);
    } else {
      throw ArgumentError("unknown config key '" + key + "'");
    }
  }
}

void resolve_flight(ExperimentSpec& spec) {
  if (!spec.m || spec.n || !spec.flight_case) return;
  if (!spec.d) throw ArgumentError("--d is required");
  const double alpha = alpha_value(spec);
  if (!(*spec.m > 1.0)) throw DomainError("m must be greater than 1");
  const double exact = alpha / (*spec.m - 1.0);
  const double rounded = std::round(exact);
  if (std::abs(exact - rounded) > 1e-9 * exact || rounded < 1.0) {
    throw ValidityError("m = " + fmt_double(*spec.m) + " does not arise from any flight of case " +
                        std::string(kernel::to_string(*spec.flight_case)));
  }
  const int denom = static_cast<int>(rounded);
  const int d = *spec.d;
  int n = 0;
  switch (*spec.flight_case) {
    case FlightCase::D1:
      if (denom % 2 != 0) throw ValidityError("case d1 needs alpha / (m-1) even");
      n = denom + 1;
      break;
    case FlightCase::DirA:
      if (d < 2 || (denom + 2) % (d - 1) != 0) {
        throw ValidityError("no dir_a flight in d = " + std::to_string(d) + " gives this m");
      }
      n = (denom + 2) / (d - 1);
      break;
    case FlightCase::DirB:
      if (d < 3 || (denom + 2) % (d - 2) != 0) {
        throw ValidityError("no dir_b flight in d = " + std::to_string(d) + " gives this m");
      }
      n = (denom + 2) / (d - 2);
      break;
  }
  spec.n = n;
  spec.m.reset();
}

NpmeParams resolve_params(const ExperimentSpec& spec) {
  const double alpha = alpha_value(spec);
  if (!spec.d) throw ArgumentError("--d is required");
  const bool has_flight = spec.n.has_value() || spec.flight_case.has_value();
  if (spec.m && has_flight) {
    throw ArgumentError("give exactly one of --m or (--n, --case)");
  }
  if (spec.m) return kernel::derive_constants(alpha, *spec.m, *spec.d);
  if (spec.n && spec.flight_case) {
    return kernel::derive_constants_for_flight(alpha, *spec.n, *spec.d, *spec.flight_case);
  }
  throw ArgumentError("give exactly one of --m or (--n, --case)");
}

int cmd_params(const ExperimentSpec& spec, std::ostream& out) {
  const NpmeParams p = resolve_params(spec);
  json doc = params_json(p);
  const auto cls = classify_spec(spec, p);
  doc["diffusivity"] = std::string(kernel::to_string(cls.label));
  doc["two_beta"] = cls.exponent;
  if (spec.n) doc["n"] = *spec.n;
  if (spec.flight_case) doc["case"] = std::string(kernel::to_string(*spec.flight_case));
  emit(spec, out, [&](std::ostream& os) { os << doc.dump(2) << '\n'; });
  return kExitOk;
}

int cmd_density(const ExperimentSpec& spec, std::ostream& out) {
  const NpmeParams p = resolve_params(spec);
  const double t = t_obs_of(spec);
  if (spec.points < 2) throw ArgumentError("density grid needs at least 2 points");
  const double radius = p.support_radius(t);
  emit(spec, out, [&](std::ostream& os) {
    os << "r,u,radial_density,radial_cdf\n";
    for (int i = 0; i < spec.points; ++i) {
      const double r = i == spec.points - 1 ? radius : radius * i / (spec.points - 1);
      os << fmt_double(r) << ',' << fmt_double(kernel::density_at_radius(r, t, p)) << ','
         << fmt_double(kernel::radial_density(r, t, p)) << ','
         << fmt_double(kernel::radial_cdf(r, t, p)) << '\n';
    }
  });
  return kExitOk;
}

int cmd_simulate(const ExperimentSpec& spec_in, std::ostream& out) {
  ExperimentSpec spec = spec_in;
  resolve_flight(spec);
  if (!spec.n || !spec.flight_case) throw ArgumentError("simulate requires --n and --case");
  const NpmeParams p = resolve_params(spec);
  const double t = t_obs_of(spec);
  if (spec.count == 0) throw ArgumentError("N must be at least 1");
  if (spec.workers < 1) throw ArgumentError("workers must be at least 1");
  const auto batch =
      flight::batch_sample(spec.count, t, *spec.n, *spec.flight_case, p, spec.seed, spec.workers);

  json header = {{"type", "header"},
                 {"alpha", p.alpha()},
                 {"m", p.m()},
                 {"d", p.d()},
                 {"n", *spec.n},
                 {"case", std::string(kernel::to_string(*spec.flight_case))},
                 {"law", std::string(flight::to_string(batch.config.law))},
                 {"speed", batch.config.speed},
                 {"beta", p.beta()},
                 {"t_obs", t},
                 {"internal_time", batch.provenance.internal_time},
                 {"N", batch.size()},
                 {"seed", spec.seed},
                 {"workers", spec.workers}};
  emit(spec, out, [&](std::ostream& os) {
    os << header.dump() << '\n';
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const auto x = batch.position(i);
      os << json(std::vector<double>(x.begin(), x.end())).dump() << '\n';
    }
  });
  return kExitOk;
}

int cmd_verify(const ExperimentSpec& spec_in, std::ostream& out) {
  ExperimentSpec spec = spec_in;
  flight::SampleBatch batch;
  json source;
  if (!spec.input.empty()) {
    LoadedBatch loaded = read_batch(spec.input);
    const json& h = loaded.header;
    if (!spec.alpha && h.contains("alpha")) spec.alpha = alpha_text_from_json(h["alpha"]);
    if (!spec.d) spec.d = loaded.batch.d;
    if (!spec.m && !spec.n && !spec.flight_case) {
      if (h.contains("n") && h.contains("case")) {
        spec.n = h["n"].get<int>();
        spec.flight_case = kernel::parse_flight_case(h["case"].get<std::string>());
      } else if (h.contains("m")) {
        spec.m = h["m"].get<double>();
      }
    }
    if (!spec.t_obs) spec.t_obs = loaded.batch.t_obs;
    batch = std::move(loaded.batch);
    source = {{"input", spec.input}, {"header", h}};
  } else {
    resolve_flight(spec);
    if (!spec.n || !spec.flight_case) throw ArgumentError("verify requires --n and --case or --input");
    if (spec.count == 0) throw ArgumentError("N must be at least 1");
    if (spec.workers < 1) throw ArgumentError("workers must be at least 1");
  }
  const NpmeParams p = resolve_params(spec);
  const double t = t_obs_of(spec);
  if (spec.input.empty()) {
    batch = flight::batch_sample(spec.count, t, *spec.n, *spec.flight_case, p, spec.seed,
                                 spec.workers);
    source = {{"simulated", true}, {"N", spec.count}, {"seed", spec.seed}, {"workers", spec.workers}};
  }
  if (batch.d != p.d()) throw ArgumentError("sample dimension does not match --d");

  std::vector<double> xi = spec.xi_grid;
  if (xi.empty()) {
    for (int k = 1; k <= 10; ++k) xi.push_back(0.5 * k);
  }
  const std::vector<int> orders = {1, 2, 3, 4};

  std::vector<verify::TestFragment> fragments;
  fragments.push_back(verify::beta_square_test(batch, p, t));
  for (auto& f : verify::moment_tests(batch, p, t, orders, spec.tolerances.moment_sigmas)) {
    fragments.push_back(std::move(f));
  }
  for (auto& f : verify::cf_tests(batch, p, t, xi, spec.tolerances.cf_sigmas)) {
    fragments.push_back(std::move(f));
  }
  fragments.push_back(verify::mass_test(p, t, spec.tolerances.mass));

  json meta = {{"params", params_json(p)}, {"t_obs", t}, {"source", source}};
  if (spec.n) meta["n"] = *spec.n;
  if (spec.flight_case) meta["case"] = std::string(kernel::to_string(*spec.flight_case));
  const auto report = verify::build_report(fragments, meta);

  emit(spec, out, [&](std::ostream& os) { os << report.to_json().dump(2) << '\n'; });
  if (!spec.csv.empty()) write_text_file(spec.csv, report.to_csv());
  return report.pass ? kExitOk : kExitStatFail;
}

int cmd_classify(const ExperimentSpec& spec, std::ostream& out) {
  std::vector<std::vector<std::string>> rows;
  if (!spec.input.empty()) {
    std::ifstream in(spec.input, std::ios::binary);
    if (!in) throw IoError("cannot open input file '" + spec.input + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    rows = parse_rows(buf.str());
  }
  if (!spec.rows.empty()) {
    auto more = parse_rows(spec.rows);
    rows.insert(rows.end(), more.begin(), more.end());
  }
  if (rows.empty()) {
    if (!spec.d || !spec.n || !spec.flight_case || !spec.alpha) {
      throw ArgumentError("classify needs --rows, --input or all of --d --n --case --alpha");
    }
    rows.push_back({std::to_string(*spec.d), std::to_string(*spec.n),
                    std::string(kernel::to_string(*spec.flight_case)), *spec.alpha});
  }

  emit(spec, out, [&](std::ostream& os) {
    os << "d,n,case,alpha,m,two_beta,label,note\n";
    for (const auto& r : rows) {
      os << r[0] << ',' << r[1] << ',' << r[2] << ',' << r[3] << ',';
      try {
        const int d = to_int(r[0], "d");
        const int n = to_int(r[1], "n");
        const auto c = kernel::parse_flight_case(r[2]);
        const auto alpha = kernel::parse_rational(r[3]);
        const auto cls = kernel::classify_flight(n, d, c, alpha);
        const double m = alpha.value() / kernel::flight_denominator(n, d, c) + 1.0;
        os << fmt_double(m) << ',' << fmt_double(cls.exponent) << ','
           << kernel::to_string(cls.label) << ",\n";
      } catch (const std::invalid_argument& e) {
        os << ",,invalid," << e.what() << '\n';
      } catch (const std::domain_error& e) {
        os << ",,invalid," << e.what() << '\n';
      }
    }
  });
  return kExitOk;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Porous-medium profiles and the random flights that realize them"};
  app.require_subcommand(1);

  struct Flags {
    std::string alpha, kase, out, config, input, csv, rows;
    double m = 0.0, t = 1.0;
    int n = 0, d = 0, workers = 1, points = 101;
    long long count = 0;
    std::uint64_t seed = 0;
    std::vector<double> xi;
  } flags;
  struct Options {
    CLI::Option *alpha, *kase, *out, *config, *input, *csv, *rows, *m, *t, *n, *d, *workers,
        *points, *count, *seed, *xi;
  };
  std::map<std::string, Options> options;

  auto add_common = [&](CLI::App* sub) {
    Options o{};
    o.alpha = sub->add_option("--alpha", flags.alpha, "fractional order in (0,2], e.g. 1.5 or 4/3");
    o.m = sub->add_option("--m", flags.m, "porous-medium exponent m > 1");
    o.n = sub->add_option("--n", flags.n, "number of direction changes");
    o.kase = sub->add_option("--case", flags.kase, "flight family: d1, dir_a or dir_b");
    o.d = sub->add_option("--d", flags.d, "space dimension");
    o.t = sub->add_option("--t", flags.t, "observation time");
    o.count = sub->add_option("--N", flags.count, "number of samples");
    o.seed = sub->add_option("--seed", flags.seed, "random seed");
    o.workers = sub->add_option("--workers", flags.workers, "sampling threads");
    o.out = sub->add_option("--out", flags.out, "output file (default stdout)");
    o.config = sub->add_option("--config", flags.config, "JSON experiment file; flags override it");
    o.input = sub->add_option("--input", flags.input, "input JSONL batch (verify) or CSV rows (classify)");
    o.csv = sub->add_option("--csv", flags.csv, "also write the report as CSV (verify)");
    o.rows = sub->add_option("--rows", flags.rows, "classify rows 'd,n,case,alpha;...'");
    o.points = sub->add_option("--points", flags.points, "density grid size");
    o.xi = sub->add_option("--xi", flags.xi, "|xi| grid for characteristic-function checks");
    options[sub->get_name()] = o;
  };

  const std::vector<std::pair<std::string, std::string>> subs = {
      {"params", "print the derived constants as JSON"},
      {"density", "tabulate u, the radial density and the radial CDF as CSV"},
      {"simulate", "sample rescaled flights to JSONL"},
      {"verify", "test simulated or stored samples against the analytic law"},
      {"classify", "sub/normal/super-diffusion table as CSV"}};
  for (const auto& [name, help] : subs) add_common(app.add_subcommand(name, help));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  std::string mode;
  for (const auto& [name, help] : subs) {
    if (app.got_subcommand(name)) mode = name;
  }
  const Options& o = options.at(mode);

  try {
    ExperimentSpec spec;
    if (o.config->count() > 0) {
      std::ifstream in(flags.config, std::ios::binary);
      if (!in) throw IoError("cannot open config file '" + flags.config + "'");
      json config;
      try {
        config = json::parse(in);
      } catch (const json::exception& e) {
        throw ArgumentError(std::string("malformed config: ") + e.what());
      }
      apply_config(config, spec);
    }
    spec.mode = mode;
    if (o.alpha->count() > 0) spec.alpha = flags.alpha;
    if (o.m->count() > 0) spec.m = flags.m;
    if (o.n->count() > 0) spec.n = flags.n;
    if (o.kase->count() > 0) spec.flight_case = kernel::parse_flight_case(flags.kase);
    if (o.d->count() > 0) spec.d = flags.d;
    if (o.t->count() > 0) spec.t_obs = flags.t;
    if (o.count->count() > 0) {
      if (flags.count < 0) throw ArgumentError("N must be non-negative");
      spec.count = static_cast<std::size_t>(flags.count);
    }
    if (o.seed->count() > 0) spec.seed = flags.seed;
    if (o.workers->count() > 0) spec.workers = flags.workers;
    if (o.out->count() > 0) spec.out = flags.out;
    if (o.input->count() > 0) spec.input = flags.input;
    if (o.csv->count() > 0) spec.csv = flags.csv;
    if (o.rows->count() > 0) spec.rows = flags.rows;
    if (o.points->count() > 0) spec.points = flags.points;
    if (o.xi->count() > 0) spec.xi_grid = flags.xi;

    if (mode == "params") return cmd_params(spec, out);
    if (mode == "density") return cmd_density(spec, out);
    if (mode == "simulate") return cmd_simulate(spec, out);
    if (mode == "verify") return cmd_verify(spec, out);
    return cmd_classify(spec, out);
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
}

}  // namespace npme::cli
