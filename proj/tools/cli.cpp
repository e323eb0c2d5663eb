#include "tgh/cli.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "tgh/estimators.hpp"
#include "tgh/inference.hpp"
#include "tgh/normal.hpp"
#include "tgh/report.hpp"
#include "tgh/simharness.hpp"

namespace tgh::cli {

using Json = nlohmann::ordered_json;

namespace {

std::vector<std::string> split_cells(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::optional<double> parse_number(const std::string& text) {
  const std::string t = trim(text);
  if (t.empty()) return std::nullopt;
  double v = 0.0;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) return std::nullopt;
  return v;
}

bool all_numeric(const std::vector<std::string>& cells) {
  for (const auto& c : cells) {
    if (!parse_number(c)) return false;
  }
  return true;
}

std::optional<std::size_t> parse_index(const std::string& s) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace

std::vector<double> read_numeric_column(std::istream& in, const std::string& column) {
  std::vector<double> values;
  std::optional<std::size_t> col;
  if (column.empty()) {
    col = 0;
  } else {
    col = parse_index(column);
  }
  bool first_row = true;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;
    const auto cells = split_cells(line);
    if (first_row) {
      first_row = false;
      if (!all_numeric(cells)) {
        for (std::size_t c = 0; c < cells.size() && !col; ++c) {
          if (trim(cells[c]) == column) col = c;
        }
        if (!col) {
          throw UsageError("line " + std::to_string(line_no) + ": no column named '" + column + "'");
        }
        continue;
      }
      if (!col) {
        throw UsageError("column '" + column + "' requested but the input has no header");
      }
    }
    if (*col >= cells.size()) {
      throw UsageError("line " + std::to_string(line_no) + ": missing column " + std::to_string(*col));
    }
    const auto v = parse_number(cells[*col]);
    if (!v) {
      throw UsageError("line " + std::to_string(line_no) + ": not a finite number: '" +
                       trim(cells[*col]) + "'");
    }
    values.push_back(*v);
  }
  if (in.bad()) throw UsageError("read error");
  return values;
}

namespace {

struct Options {
  std::string input;
  std::string column;
  std::string method = "male";
  std::string null;
  double bn = 10.0;
  std::size_t kn = 0;
  std::optional<std::uint64_t> seed;
  double level = 0.05;
  std::string format;
  std::string output;
  GhParams theta;
  std::size_t n = 0;
  // density
  std::optional<double> from;
  std::optional<double> to;
  std::size_t points = 201;
  // simulate
  std::string study;
  std::vector<std::size_t> sizes;
  std::optional<std::size_t> replicates;
  std::vector<std::string> methods;
  std::vector<double> d_values{0.0, 1.5, 3.0};
  std::vector<double> levels{0.10, 0.05, 0.01};
  std::vector<double> g0_values{-0.5, -0.25, 0.0, 0.25, 0.5};
  std::size_t reference_n = 100000;
  bool theta_given[4] = {false, false, false, false};
};

std::uint64_t resolve_seed(const Options& o, std::uint64_t fallback) {
  if (const char* env = std::getenv("GH_SEED"); env && *env) {
    std::uint64_t v = 0;
    const std::string s(env);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw UsageError("GH_SEED is not an unsigned integer: '" + s + "'");
    }
    return v;
  }
  return o.seed.value_or(fallback);
}

GridConfig grid_of(const Options& o) {
  GridConfig g;
  g.bn = o.bn;
  g.kn = o.kn;
  if (!(o.bn > 0.0)) throw UsageError("--bn must be positive");
  if (o.kn != 0 && o.kn < 3) throw UsageError("--kn must be at least 3");
  return g;
}

Sample load_sample(const Options& o) {
  if (o.input.empty()) throw UsageError("--input is required");
  std::vector<double> values;
  if (o.input == "-") {
    values = read_numeric_column(std::cin, o.column);
  } else {
    std::ifstream in(o.input);
    if (!in) throw UsageError("cannot open '" + o.input + "'");
    values = read_numeric_column(in, o.column);
  }
  if (values.size() < 5) {
    throw DegenerateSample("insufficient sample: " + std::to_string(values.size()) +
                           " observations, need at least 5");
  }
  return Sample(std::move(values));
}

void emit(const Options& o, const std::string& default_format, const StudyReport& rep,
          std::ostream& out) {
  const std::string fmt = o.format.empty() ? default_format : o.format;
  const std::string text = fmt == "csv" ? rep.to_csv() : rep.to_json().dump(2) + "\n";
  if (o.output.empty()) {
    out << text;
  } else {
    try {
      write_text_file(o.output, text);
    } catch (const std::runtime_error& e) {
      throw UsageError(e.what());
    }
  }
}

Json theta_json(const GhParams& p) {
  return Json{{"xi", p.xi}, {"omega", p.omega}, {"g", p.g}, {"h", p.h}};
}

void put_theta(Json& row, const std::string& prefix, const GhParams& p) {
  row[prefix + "xi"] = p.xi;
  row[prefix + "omega"] = p.omega;
  row[prefix + "g"] = p.g;
  row[prefix + "h"] = p.h;
}

Json input_config(const Options& o, const Sample& s) {
  Json c;
  c["input"] = o.input;
  if (!o.column.empty()) c["column"] = o.column;
  c["n"] = s.size();
  c["bn"] = o.bn;
  c["kn"] = GridConfig{o.bn, o.kn}.knots_for(s.size());
  return c;
}

int cmd_fit(const Options& o, std::ostream& out) {
  const Sample s = load_sample(o);
  const Method m = parse_method(o.method);
  const GridConfig grid = grid_of(o);
  FitResult fit;
  switch (m) {
    case Method::LV: fit = fit_lv(s); break;
    case Method::QLS: fit = fit_qls(s); break;
    case Method::MALE: fit = fit_male(s, grid); break;
    case Method::NMLE: fit = fit_nmle(s); break;
  }

  StudyReport rep;
  rep.study = "fit";
  rep.config = input_config(o, s);
  rep.config["method"] = std::string(method_name(m));
  Json row;
  row["method"] = std::string(method_name(m));
  row["n"] = s.size();
  put_theta(row, "", fit.theta_hat);
  const char* names[4] = {"se_xi", "se_omega", "se_g", "se_h"};
  for (int j = 0; j < 4; ++j) {
    if (fit.std_errors) {
      row[names[j]] = (*fit.std_errors)[j];
    } else {
      row[names[j]] = nullptr;
    }
  }
  row["loglik"] = exact_loglik(s, fit.theta_hat);
  row["objective"] = fit.objective;
  row["h_at_boundary"] = fit.h_at_boundary;
  row["converged"] = fit.converged;
  row["iterations"] = fit.iterations;
  row["message"] = fit.message;
  rep.rows.push_back(row);
  emit(o, "json", rep, out);
  return fit.converged ? kOk : kNumerical;
}

std::string describe(const MixedChiSq& d) {
  auto part = [](int df) { return "chi2_" + std::to_string(df); };
  if (d.weight0 == 1.0) return part(d.df_a);
  std::ostringstream s;
  s << d.weight0 << "*" << part(d.df_a) << "+" << 1.0 - d.weight0 << "*" << part(d.df_b);
  return s.str();
}

int cmd_test(const Options& o, std::ostream& out) {
  if (o.null.empty()) throw UsageError("--null is required for test");
  NullKind null;
  try {
    null = parse_null(o.null);
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }
  if (!(o.level > 0.0 && o.level < 1.0)) throw UsageError("--level must lie in (0,1)");
  const Sample s = load_sample(o);
  const AlrtResult res = alrt(s, null, grid_of(o), o.level);

  StudyReport rep;
  rep.study = "test";
  rep.config = input_config(o, s);
  rep.config["null"] = std::string(null_name(null));
  rep.config["level"] = o.level;
  Json row;
  row["null"] = std::string(null_name(null));
  row["n"] = s.size();
  row["d_n"] = res.d_n;
  row["reference"] = describe(res.ref_dist);
  row["level"] = res.level;
  row["critical_value"] = res.critical_value;
  row["p_value"] = res.p_value;
  row["decision"] = res.reject ? "Reject" : "Fail to reject";
  put_theta(row, "restricted_", res.restricted_fit.theta_hat);
  put_theta(row, "full_", res.full_fit.theta_hat);
  row["restricted_objective"] = res.restricted_fit.objective;
  row["full_objective"] = res.full_fit.objective;
  row["clamped"] = res.clamped;
  row["converged"] = res.converged;
  rep.rows.push_back(row);
  emit(o, "json", rep, out);
  return res.converged ? kOk : kNumerical;
}

int cmd_sample(const Options& o, std::ostream& out) {
  if (o.n < 1) throw UsageError("--n must be at least 1");
  o.theta.validate();
  const auto ys = draw(o.n, o.theta, resolve_seed(o, 1));
  std::string text;
  for (double y : ys) text += format_double(y) + "\n";
  if (o.output.empty()) {
    out << text;
  } else {
    try {
      write_text_file(o.output, text);
    } catch (const std::runtime_error& e) {
      throw UsageError(e.what());
    }
  }
  return kOk;
}

int cmd_density(const Options& o, std::ostream& out) {
  o.theta.validate();
  const double lo = o.from.value_or(quantile(1e-5, o.theta));
  const double hi = o.to.value_or(quantile(1.0 - 1e-5, o.theta));
  if (!(lo < hi)) throw UsageError("density range must satisfy from < to");
  if (o.points < 2) throw UsageError("--points must be at least 2");

  StudyReport rep;
  rep.study = "density";
  rep.config["theta"] = theta_json(o.theta);
  rep.config["from"] = lo;
  rep.config["to"] = hi;
  rep.config["points"] = o.points;
  for (std::size_t i = 0; i < o.points; ++i) {
    const double y = i + 1 == o.points ? hi : lo + (hi - lo) * i / (o.points - 1);
    const double ld = log_density_exact(y, o.theta);
    Json row;
    row["y"] = y;
    row["density"] = std::exp(ld);
    row["log_density"] = ld;
    row["cdf"] = cdf(y, o.theta);
    rep.rows.push_back(row);
  }
  emit(o, "csv", rep, out);
  return kOk;
}

int cmd_simulate(const Options& o, std::ostream& out) {
  StudyConfig cfg;
  if (o.study == "boundary") cfg.theta0.h = 0.0;
  if (o.theta_given[0]) cfg.theta0.xi = o.theta.xi;
  if (o.theta_given[1]) cfg.theta0.omega = o.theta.omega;
  if (o.theta_given[2]) cfg.theta0.g = o.theta.g;
  if (o.theta_given[3]) cfg.theta0.h = o.theta.h;
  cfg.seed = resolve_seed(o, cfg.seed);
  cfg.grid = grid_of(o);
  if (!o.methods.empty()) {
    cfg.methods.clear();
    for (const auto& m : o.methods) cfg.methods.push_back(parse_method(m));
  }

  StudyReport rep;
  if (o.study == "recovery") {
    cfg.sample_sizes = o.sizes.empty() ? std::vector<std::size_t>{1000} : o.sizes;
    cfg.replicates = o.replicates.value_or(200);
    rep = run_recovery_study(cfg, o.reference_n).to_report(cfg);
  } else if (o.study == "power") {
    if (o.null.empty()) throw UsageError("--null is required for the power study");
    cfg.sample_sizes = o.sizes.empty() ? std::vector<std::size_t>{400} : o.sizes;
    cfg.replicates = o.replicates.value_or(500);
    rep = run_power_study(parse_null(o.null), o.d_values, cfg, o.levels).to_report(cfg);
  } else if (o.study == "timing") {
    cfg.sample_sizes = o.sizes.empty() ? std::vector<std::size_t>{2000} : o.sizes;
    cfg.replicates = o.replicates.value_or(10);
    if (o.methods.empty()) cfg.methods = {Method::MALE, Method::NMLE};
    rep = run_timing_study(cfg).to_report(cfg);
  } else if (o.study == "boundary") {
    cfg.sample_sizes = o.sizes.empty() ? std::vector<std::size_t>{200} : o.sizes;
    cfg.replicates = o.replicates.value_or(300);
    rep = run_boundary_study(o.g0_values, cfg).to_report(cfg);
  } else {
    throw UsageError("unknown study '" + o.study + "' (expected recovery, power, timing, boundary)");
  }
  rep.config["seed_derivation"] = "splitmix64 mix of (seed, stream, n, replicate)";
  emit(o, "json", rep, out);
  return kOk;
}

void add_grid_flags(CLI::App* app, Options& o) {
  app->add_option("--bn", o.bn, "Half-width of the knot grid in z (default 10)");
  app->add_option("--kn", o.kn, "Number of knots (default max(1000, n))");
}

void add_output_flags(CLI::App* app, Options& o) {
  app->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
  app->add_option("--output,-o", o.output, "Output path (default stdout)");
}

void add_input_flags(CLI::App* app, Options& o) {
  app->add_option("--input,-i", o.input, "CSV file with the data ('-' for stdin)")->required();
  app->add_option("--column,-c", o.column, "Column name or zero-based index");
}

void add_theta_flags(CLI::App* app, Options& o) {
  app->add_option("--xi", o.theta.xi, "Location")->each([&](const std::string&) { o.theta_given[0] = true; });
  app->add_option("--omega", o.theta.omega, "Scale")->each([&](const std::string&) { o.theta_given[1] = true; });
  app->add_option("--g", o.theta.g, "Skewness")->each([&](const std::string&) { o.theta_given[2] = true; });
  app->add_option("--h", o.theta.h, "Tail weight")->each([&](const std::string&) { o.theta_given[3] = true; });
}

void add_seed_flag(CLI::App* app, Options& o) {
  app->add_option("--seed", o.seed, "Random seed (GH_SEED overrides)");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Fit, test and simulate Tukey g-and-h distributions", "ghfit"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1);
  app.set_version_flag("--version", "ghfit 1.0");

  auto* fit = app.add_subcommand("fit", "Estimate (xi, omega, g, h) from data");
  add_input_flags(fit, o);
  fit->add_option("--method,-m", o.method, "male, nmle, lv or qls")
      ->transform(CLI::IsMember({"male", "nmle", "lv", "qls"}, CLI::ignore_case));
  add_grid_flags(fit, o);
  add_output_flags(fit, o);

  auto* test = app.add_subcommand("test", "Approximated likelihood ratio test on g and/or h");
  add_input_flags(test, o);
  test->add_option("--null", o.null, "g, h or gh")->required();
  test->add_option("--level", o.level, "Significance level");
  add_grid_flags(test, o);
  add_output_flags(test, o);

  auto* smp = app.add_subcommand("sample", "Draw a sample, one value per line");
  add_theta_flags(smp, o);
  smp->add_option("--n", o.n, "Sample size")->required();
  add_seed_flag(smp, o);
  smp->add_option("--output,-o", o.output, "Output path (default stdout)");

  auto* den = app.add_subcommand("density", "Tabulate density, log-density and cdf");
  add_theta_flags(den, o);
  den->add_option("--from", o.from, "Lower end (default quantile 1e-5)");
  den->add_option("--to", o.to, "Upper end (default quantile 1 - 1e-5)");
  den->add_option("--points", o.points, "Number of grid points");
  add_output_flags(den, o);

  auto* sim = app.add_subcommand("simulate", "Run a Monte Carlo study");
  sim->add_option("study", o.study, "recovery, power, timing or boundary")->required();
  add_theta_flags(sim, o);
  add_seed_flag(sim, o);
  add_grid_flags(sim, o);
  sim->add_option("--sizes", o.sizes, "Sample sizes")->delimiter(',');
  sim->add_option("--replicates,-r", o.replicates, "Replicates per cell");
  sim->add_option("--methods", o.methods, "Estimators (recovery, timing)")->delimiter(',');
  sim->add_option("--null", o.null, "Null for the power study: g, h or gh");
  sim->add_option("--d", o.d_values, "Local alternatives d (power)")->delimiter(',');
  sim->add_option("--levels", o.levels, "Test levels (power)")->delimiter(',');
  sim->add_option("--g0", o.g0_values, "True g values (boundary)")->delimiter(',');
  sim->add_option("--reference-n", o.reference_n, "Reference sample size for information (recovery)");
  add_output_flags(sim, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  try {
    if (fit->parsed()) return cmd_fit(o, out);
    if (test->parsed()) return cmd_test(o, out);
    if (smp->parsed()) return cmd_sample(o, out);
    if (den->parsed()) return cmd_density(o, out);
    if (sim->parsed()) return cmd_simulate(o, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

}  // namespace tgh::cli
