// Command-line front end: analyze single states, sweep families, locate
// criterion thresholds, evaluate CHSH settings, run Monte Carlo audits.

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qent/audit.hpp"
#include "qent/criteria.hpp"
#include "qent/errors.hpp"
#include "qent/format.hpp"
#include "qent/scan.hpp"
#include "qent/states.hpp"

namespace {

using nlohmann::json;

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw qent::Error("cannot open for writing: " + path);
  out << content;
  if (!out) throw qent::Error("write failed: " + path);
}

qent::Vec3 vec3_from_json(const json& j, const char* field) {
  if (!j.contains(field))
    throw qent::ParseError(std::string("settings JSON: missing field \"") + field + "\"");
  const json& arr = j.at(field);
  if (!arr.is_array() || arr.size() != 3)
    throw qent::ParseError(std::string("settings JSON: field \"") + field +
                           "\" must be an array of 3 numbers");
  qent::Vec3 v{};
  for (int i = 0; i < 3; ++i) {
    const json& cell = arr.at(static_cast<std::size_t>(i));
    if (!cell.is_number())
      throw qent::ParseError(std::string("settings JSON: field \"") + field +
                             "\" entry is not a number");
    v[static_cast<std::size_t>(i)] = cell.get<double>();
  }
  return v;
}

qent::MeasurementSettings load_settings_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw qent::FileNotFoundError("cannot open settings file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw qent::ParseError("settings JSON: " + std::string(e.what()));
  }
  qent::MeasurementSettings s;
  s.a = vec3_from_json(j, "a");
  s.a_prime = vec3_from_json(j, "a_prime");
  s.b = vec3_from_json(j, "b");
  s.b_prime = vec3_from_json(j, "b_prime");
  return s;
}

json settings_to_json(const qent::MeasurementSettings& s) {
  auto vec = [](const qent::Vec3& v) {
    return json::array({qent::round12(v[0]), qent::round12(v[1]), qent::round12(v[2])});
  };
  return {{"a", vec(s.a)}, {"a_prime", vec(s.a_prime)}, {"b", vec(s.b)},
          {"b_prime", vec(s.b_prime)}};
}

struct RangeSpec {
  double lo = 0.0, hi = 0.0, step = 0.0;
};

RangeSpec parse_range(const std::string& text) {
  RangeSpec r;
  char extra = 0;
  const int got = std::sscanf(text.c_str(), "%lf:%lf:%lf%c", &r.lo, &r.hi, &r.step, &extra);
  if (got != 3) throw qent::ParseError("range must be lo:hi:step, got '" + text + "'");
  if (!(r.step > 0.0)) throw qent::ParamOutOfRangeError("ParamOutOfRange: step must be > 0");
  return r;
}

std::string path_stem(const std::string& path) {
  const std::size_t slash = path.find_last_of('/');
  const std::size_t dot = path.find_last_of('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return path;
  return path.substr(0, dot);
}

void run_analyze(const std::string& state_file, const std::string& format) {
  const qent::DensityMatrix rho = qent::load_state_file(state_file);
  const qent::CriteriaReport rep = qent::classify(rho);
  if (format == "csv") {
    std::cout << qent::kReportCsvColumns << '\n' << qent::report_csv_fields(rep) << '\n';
  } else {
    std::cout << qent::report_to_json(rep).dump(2) << '\n';
  }
}

void run_family(const std::string& name, const std::string& range, const std::string& out_path,
                const std::vector<std::string>& plot_criteria) {
  const qent::StateFamily family = qent::family_by_name(name);
  const RangeSpec r = parse_range(range);
  const std::vector<qent::SweepRow> rows = qent::sweep(family, {r.lo, r.hi, r.step});

  std::ostringstream csv;
  qent::write_sweep_csv(csv, rows);
  write_text_file(out_path, csv.str());
  std::cout << "wrote " << rows.size() << " rows to " << out_path << '\n';

  for (const std::string& crit : plot_criteria) {
    const qent::Functional f = qent::functional_by_name(crit);
    std::ostringstream dat;
    dat << "# param " << crit << '\n';
    for (const qent::SweepRow& row : rows) {
      double v = 0.0;
      switch (f) {
        case qent::Functional::kM: v = row.report.m_value; break;
        case qent::Functional::kN: v = row.report.n_value; break;
        case qent::Functional::kQ: v = row.report.q_value; break;
        case qent::Functional::kSLinear: v = row.report.s_linear; break;
        default: v = row.report.concurrence; break;
      }
      dat << qent::fmt12(row.parameter) << ' ' << qent::fmt12(v) << '\n';
    }
    const std::string dat_path = path_stem(out_path) + "." + crit + ".dat";
    write_text_file(dat_path, dat.str());
    std::cout << "wrote plot data to " << dat_path << '\n';
  }
}

void run_thresholds(const std::string& name) {
  const qent::StateFamily family = qent::family_by_name(name);
  json list = json::array();
  if (family.name == qent::FamilyName::kWerner) {
    list.push_back(qent::threshold_to_json(
        qent::find_threshold(family, qent::Functional::kM, 1.0, 0.01, 1.0)));
    list.push_back(qent::threshold_to_json(
        qent::find_threshold(family, qent::Functional::kSLinear, 2.0 / 3.0, 0.0, 1.0)));
    list.push_back(qent::threshold_to_json(
        qent::find_threshold(family, qent::Functional::kN, 1.0, 0.01, 1.0)));
    list.push_back(qent::threshold_to_json(
        qent::find_threshold(family, qent::Functional::kSLinear, 8.0 / 9.0, 0.0, 1.0)));
  } else {
    list.push_back(qent::threshold_to_json(
        qent::find_threshold(family, qent::Functional::kM, 1.0, 0.01, 1.0)));
    // concurrence = p turns on at the lower edge; located as the flag flip
    const auto flips =
        qent::detail::flag_transitions(family, qent::RegionFlag::kOracleEntangled);
    if (!flips.empty()) {
      qent::ThresholdResult t;
      t.functional = qent::Functional::kConcurrence;
      t.target = 0.0;
      t.parameter_star = flips.front();
      t.bracket_lo = family.lo;
      t.bracket_hi = family.hi;
      t.achieved_residual = qent::evaluate_functional(family, t.functional, t.parameter_star);
      list.push_back(qent::threshold_to_json(t));
    }
  }
  const json out = {{"family", name},
                    {"thresholds", list},
                    {"regions", qent::region_table_to_json(qent::region_table(family))}};
  std::cout << out.dump(2) << '\n';
}

void run_chsh(const std::string& state_file, const std::string& settings_path, bool optimize,
              long random_n, std::uint64_t seed) {
  const qent::DensityMatrix rho = qent::load_state_file(state_file);
  const double bound = 2.0 * std::sqrt(std::max(qent::m_value(rho), 0.0));
  json out;
  if (!settings_path.empty()) {
    const qent::MeasurementSettings s = load_settings_file(settings_path);
    const double value = qent::chsh_value(rho, s);
    out = {{"value", qent::round12(value)},
           {"bound", qent::round12(bound)},
           {"gap", qent::round12(bound - value)}};
  } else if (optimize) {
    const qent::MeasurementSettings s = qent::chsh_optimal_settings(rho);
    const double value = qent::chsh_value(rho, s);
    out = {{"value", qent::round12(value)},
           {"bound", qent::round12(bound)},
           {"gap", qent::round12(bound - value)},
           {"settings", settings_to_json(s)}};
  } else {
    if (random_n < 1)
      throw qent::ParamOutOfRangeError("ParamOutOfRange: --random needs n >= 1");
    qent::NormalStream stream(seed);
    double best = -std::numeric_limits<double>::infinity();
    for (long k = 0; k < random_n; ++k) {
      qent::MeasurementSettings s;
      s.a = stream.next_unit_vector();
      s.a_prime = stream.next_unit_vector();
      s.b = stream.next_unit_vector();
      s.b_prime = stream.next_unit_vector();
      best = std::max(best, std::abs(qent::chsh_value(rho, s)));
    }
    out = {{"samples", random_n},
           {"seed", seed},
           {"max_value", qent::round12(best)},
           {"bound", qent::round12(bound)},
           {"gap", qent::round12(bound - best)}};
  }
  std::cout << out.dump(2) << '\n';
}

void run_audit_cmd(long samples, std::uint64_t seed, int rank, const std::string& out_path,
                   std::string cells_path) {
  if (samples < 1) throw qent::ParamOutOfRangeError("ParamOutOfRange: --samples must be >= 1");
  const qent::AuditReport rep =
      qent::run_audit(static_cast<std::uint64_t>(samples), seed, rank);
  write_text_file(out_path, qent::audit_report_to_json(rep).dump(2) + "\n");
  if (cells_path.empty()) cells_path = out_path + ".cells.csv";
  std::ostringstream csv;
  qent::write_audit_cells_csv(csv, rep);
  write_text_file(cells_path, csv.str());
  std::cout << "audit: " << rep.samples << " samples, " << rep.total_violations()
            << " implication violations, report at " << out_path << '\n';
}

void run_counterexample(const std::string& predicate) {
  const qent::Counterexample ce = qent::find_counterexample(predicate);
  std::cout << qent::counterexample_to_json(ce).dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qent: entanglement-detection criteria for two-qubit states"};
  app.require_subcommand(1);

  // analyze
  std::string an_file, an_format = "json";
  CLI::App* analyze = app.add_subcommand("analyze", "criteria report for a state JSON file");
  analyze->add_option("state_file", an_file, "state JSON file")->required();
  analyze->add_option("--format", an_format, "output format")
      ->check(CLI::IsMember({"json", "csv"}));

  // family
  std::string fam_name, fam_range, fam_out;
  std::vector<std::string> fam_plots;
  CLI::App* family = app.add_subcommand("family", "sweep a state family to CSV");
  family->add_option("--name", fam_name, "mems or werner")->required();
  family->add_option("--range", fam_range, "lo:hi:step")->required();
  family->add_option("--out", fam_out, "output CSV path")->required();
  family->add_option("--plot-data", fam_plots,
                     "criterion names (m,n,q,s_linear,concurrence) to emit as two-column files");

  // thresholds
  std::string th_name;
  CLI::App* thresholds =
      app.add_subcommand("thresholds", "criterion thresholds and regions for a family");
  thresholds->add_option("--name", th_name, "mems or werner")->required();

  // chsh
  std::string ch_file, ch_settings;
  bool ch_optimize = false;
  long ch_random = 0;
  std::uint64_t ch_seed = 0;
  CLI::App* chsh = app.add_subcommand("chsh", "CHSH value vs the Horodecki bound");
  chsh->add_option("state_file", ch_file, "state JSON file")->required();
  auto* opt_settings = chsh->add_option("--settings", ch_settings, "settings JSON file");
  auto* opt_optimize = chsh->add_flag("--optimize", ch_optimize, "use optimal settings");
  auto* opt_random = chsh->add_option("--random", ch_random, "number of random settings");
  chsh->add_option("--seed", ch_seed, "seed for --random");
  opt_settings->excludes(opt_optimize)->excludes(opt_random);
  opt_optimize->excludes(opt_random);

  // audit
  long au_samples = 10000;
  std::uint64_t au_seed = 0;
  int au_rank = 4;
  std::string au_out, au_cells;
  CLI::App* audit = app.add_subcommand("audit", "Monte Carlo criteria audit vs the oracles");
  audit->add_option("--samples", au_samples, "number of random states");
  audit->add_option("--seed", au_seed, "master seed");
  audit->add_option("--rank", au_rank, "state rank 1..4")->check(CLI::Range(1, 4));
  audit->add_option("--out", au_out, "report JSON path")->required();
  audit->add_option("--cells", au_cells, "cells CSV path (default <out>.cells.csv)");

  // counterexample
  std::string ce_predicate;
  CLI::App* counterexample =
      app.add_subcommand("counterexample", "certified state for a catalog predicate");
  counterexample->add_option("--predicate", ce_predicate, "catalog predicate name")->required();

  try {
    app.parse(argc, argv);
    if (analyze->parsed()) run_analyze(an_file, an_format);
    if (family->parsed()) run_family(fam_name, fam_range, fam_out, fam_plots);
    if (thresholds->parsed()) run_thresholds(th_name);
    if (chsh->parsed()) {
      if (ch_settings.empty() && !ch_optimize && ch_random == 0)
        throw qent::ParseError("chsh: one of --settings, --optimize, --random is required");
      run_chsh(ch_file, ch_settings, ch_optimize, ch_random, ch_seed);
    }
    if (audit->parsed()) run_audit_cmd(au_samples, au_seed, au_rank, au_out, au_cells);
    if (counterexample->parsed()) run_counterexample(ce_predicate);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const qent::NotFoundError& e) {
    std::cerr << e.what() << '\n';
    return 1;
  } catch (const qent::Error& e) {
    std::cerr << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
