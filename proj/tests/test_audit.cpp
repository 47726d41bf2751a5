#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>

#include "qent/audit.hpp"
#include "qent/scan.hpp"

using namespace qent;

TEST_CASE("run_audit: reproducible, including across worker counts") {
  const std::string a = audit_report_to_json(run_audit(2000, 7, 4)).dump();
  const std::string b = audit_report_to_json(run_audit(2000, 7, 4)).dump();
  REQUIRE(a == b);

  setenv("QENT_THREADS", "1", 1);
  const std::string serial = audit_report_to_json(run_audit(5000, 11, 4)).dump();
  setenv("QENT_THREADS", "3", 1);
  const std::string parallel = audit_report_to_json(run_audit(5000, 11, 4)).dump();
  unsetenv("QENT_THREADS");
  REQUIRE(serial == parallel);
}

TEST_CASE("run_audit: sound implications never fire, fractions are ordered") {
  const AuditReport rep = run_audit(10000, 42, 4);
  REQUIRE(rep.violations_m_implies_q == 0);
  REQUIRE(rep.violations_q_implies_n == 0);
  REQUIRE(rep.violations_q_implies_npt == 0);
  REQUIRE(rep.violations_separable_implies_n_le_1 == 0);

  REQUIRE(rep.count_m <= rep.count_q);
  REQUIRE(rep.count_q <= rep.count_n);
  REQUIRE(rep.count_n <= rep.count_oracle);
  REQUIRE(rep.count_q < rep.count_oracle);  // Q is strictly weaker than PPT

  // regression bands: first-run fractions +- 3 sigma for this seed/ensemble
  const double n_samples = static_cast<double>(rep.samples);
  auto fraction = [&](long c) { return static_cast<double>(c) / n_samples; };
  REQUIRE(std::abs(fraction(rep.count_m) - 0.0082) <= 0.0027);
  REQUIRE(std::abs(fraction(rep.count_q) - 0.0369) <= 0.0057);
  REQUIRE(std::abs(fraction(rep.count_n) - 0.5545) <= 0.0149);
  REQUIRE(std::abs(fraction(rep.count_sl) - 0.2989) <= 0.0137);
  REQUIRE(std::abs(fraction(rep.count_oracle) - 0.7648) <= 0.0127);

  long cell_total = 0;
  for (const auto& [key, count] : rep.cells) cell_total += count;
  REQUIRE(cell_total == static_cast<long>(rep.samples));

  // Corollary-2 cells are populated: Q < 1 < N occurs, and so does N <= 1
  long q0n1 = 0, n0 = 0;
  for (const auto& [key, count] : rep.cells) {
    const bool q = (key >> 3) & 1, n = (key >> 2) & 1;
    if (!q && n) q0n1 += count;
    if (!n) n0 += count;
  }
  REQUIRE(q0n1 > 0);
  REQUIRE(n0 > 0);
}

TEST_CASE("run_audit: rank-1 ensemble, pure-state CHSH completeness") {
  const AuditReport rep = run_audit(10000, 5, 1);
  REQUIRE(rep.violations_m_implies_q == 0);
  REQUIRE(rep.violations_q_implies_n == 0);
  REQUIRE(rep.violations_q_implies_npt == 0);
  REQUIRE(rep.violations_separable_implies_n_le_1 == 0);
  // random pure states are entangled almost surely
  REQUIRE(static_cast<double>(rep.count_oracle) / static_cast<double>(rep.samples) > 0.999);

  // every clearly entangled pure state violates some CHSH inequality
  for (std::uint64_t k = 0; k < 10000; ++k) {
    const CriteriaReport r = classify(random_state(stream_seed(5, k), 1));
    if (r.concurrence > 1e-4) REQUIRE(r.m_value > 1.0);
  }
}

TEST_CASE("find_counterexample: the whole catalog certifies and re-certifies") {
  for (Predicate p : predicate_catalog()) {
    const Counterexample ce = find_counterexample(p);
    REQUIRE(ce.provenance == "analytic");
    REQUIRE(certifies(ce.report, p));
    // fresh evaluation, no stale numerics
    REQUIRE(certifies(classify(ce.state), p));
  }
}

TEST_CASE("find_counterexample: the two headline states of the corollaries") {
  const Counterexample entangled_mixed =
      find_counterexample(std::string("entangled_with_SL_above_2/3"));
  REQUIRE(entangled_mixed.report.s_linear > 2.0 / 3.0);
  REQUIRE(entangled_mixed.report.concurrence > 0.2);

  const Counterexample useful = find_counterexample(std::string("useful_with_SL_above_2/3"));
  REQUIRE(useful.report.s_linear > 2.0 / 3.0);
  REQUIRE(useful.report.s_linear < 8.0 / 9.0);
  REQUIRE(useful.report.n_value > 1.0);

  const Counterexample separable =
      find_counterexample(std::string("separable_with_SL_below_2/3"));
  REQUIRE(separable.report.s_linear < 2.0 / 3.0);
  REQUIRE(separable.report.s_linear > 0.0);  // mixed, yet separable
  REQUIRE(separable.report.min_ppt_eigenvalue >= -1e-10);

  REQUIRE_THROWS_AS(find_counterexample(std::string("no_such_predicate")), ParseError);
}

TEST_CASE("run_audit: stored counterexamples re-certify from their serialized state") {
  const AuditReport rep = run_audit(5000, 13, 4);
  REQUIRE_FALSE(rep.counterexamples.empty());
  for (const StoredCounterexample& ce : rep.counterexamples) {
    const DensityMatrix rho = state_from_json(raw_matrix_to_json(ce.state));
    REQUIRE(certifies(classify(rho), ce.predicate));
  }
}

TEST_CASE("santos_comparison: windows are nested on the Werner line and in counts") {
  // Santos's S_L < 1/2 window coincides with the CHSH window on Werner states
  const ThresholdResult santos_r =
      find_threshold(werner_family(), Functional::kSLinear, 0.5, 0.5, 0.9);
  const ThresholdResult chsh_r = find_threshold(werner_family(), Functional::kM, 1.0, 0.5, 0.9);
  REQUIRE(std::abs(santos_r.parameter_star - chsh_r.parameter_star) <= 1e-8);
  // while the Q window r > 1/sqrt(3) is strictly larger
  const ThresholdResult q_r = find_threshold(werner_family(), Functional::kQ, 1.0, 0.3, 0.9);
  REQUIRE(q_r.parameter_star < chsh_r.parameter_star - 0.1);

  const SantosTable table = santos_comparison(10000, 3);
  REQUIRE(table.rows.size() == 4);
  long count_santos = 0, count_paper = 0, count_q = 0, count_m = 0;
  for (const SantosRow& row : table.rows) {
    REQUIRE(row.count >= 0);
    REQUIRE(row.count <= table.entangled_count);
    REQUIRE(row.wilson_lo >= 0.0);
    REQUIRE(row.wilson_hi <= 1.0);
    REQUIRE(row.wilson_lo <= row.fraction + 1e-12);
    REQUIRE(row.fraction <= row.wilson_hi + 1e-12);
    if (row.criterion == "s_linear<1/2") count_santos = row.count;
    if (row.criterion == "s_linear<2/3") count_paper = row.count;
    if (row.criterion == "q>1") count_q = row.count;
    if (row.criterion == "m>1") count_m = row.count;
  }
  REQUIRE(count_m <= count_q);        // M <= Q pointwise
  REQUIRE(count_santos <= count_paper);  // nested entropy windows

  // regression bands from the first run of this seed (fractions +- 3 sigma)
  const double n = static_cast<double>(table.entangled_count);
  REQUIRE(std::abs(static_cast<double>(count_santos) / n - 0.0314) <= 0.006);
  REQUIRE(std::abs(static_cast<double>(count_paper) / n - 0.3677) <= 0.017);
  REQUIRE(std::abs(static_cast<double>(count_q) / n - 0.0552) <= 0.008);
  REQUIRE(std::abs(static_cast<double>(count_m) / n - 0.0125) <= 0.004);
}

TEST_CASE("audit JSON and cells CSV: shape and totals") {
  const AuditReport rep = run_audit(3000, 21, 4);
  const nlohmann::json j = audit_report_to_json(rep);
  REQUIRE(j["samples"] == 3000);
  REQUIRE(j["ensemble"] == "ginibre(rank=4)");
  double fraction_sum = j["fractions"]["oracle_entangled"].get<double>();
  REQUIRE(fraction_sum >= 0.0);
  REQUIRE(fraction_sum <= 1.0);

  std::ostringstream csv;
  write_audit_cells_csv(csv, rep);
  std::istringstream in(csv.str());
  std::string line;
  std::getline(in, line);
  REQUIRE(line ==
          "signature,bell_violating,q_detected,tele_useful,sl_window,oracle_entangled,count");
  long total = 0;
  while (std::getline(in, line)) {
    const std::size_t last_comma = line.find_last_of(',');
    total += std::stol(line.substr(last_comma + 1));
  }
  REQUIRE(total == 3000);
}
