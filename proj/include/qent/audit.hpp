#pragma once

#include <cstdint>
#include <cstdlib>
#include <exception>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "qent/criteria.hpp"
#include "qent/errors.hpp"
#include "qent/format.hpp"
#include "qent/states.hpp"

namespace qent {

inline constexpr double kBoundaryBand = 1e-8;   // distance to a threshold that parks a
                                                // sample in the boundary bin
inline constexpr std::uint64_t kCounterexampleSearchCap = 1000000;
inline constexpr int kMaxStoredCounterexamples = 3;

// ---------------------------------------------------------------------------
// Counterexample predicates.

enum class Predicate {
  kEntangledWithSlAbove23,
  kSeparableWithSlBelow23,
  kUsefulWithSlAbove23,
  kQBelow1NAbove1,
  kSatisfiesChshButQDetected,
};

inline const char* predicate_label(Predicate p) {
  switch (p) {
    case Predicate::kEntangledWithSlAbove23: return "entangled_with_SL_above_2/3";
    case Predicate::kSeparableWithSlBelow23: return "separable_with_SL_below_2/3";
    case Predicate::kUsefulWithSlAbove23: return "useful_with_SL_above_2/3";
    case Predicate::kQBelow1NAbove1: return "Q_below_1_N_above_1";
    default: return "satisfies_CHSH_but_Q_detected";
  }
}

inline const std::vector<Predicate>& predicate_catalog() {
  static const std::vector<Predicate> catalog{
      Predicate::kEntangledWithSlAbove23, Predicate::kSeparableWithSlBelow23,
      Predicate::kUsefulWithSlAbove23, Predicate::kQBelow1NAbove1,
      Predicate::kSatisfiesChshButQDetected};
  return catalog;
}

inline Predicate predicate_by_name(const std::string& name) {
  for (Predicate p : predicate_catalog())
    if (name == predicate_label(p)) return p;
  throw ParseError("unknown predicate '" + name + "'");
}

/// Certification at tolerance 1e-10: every inequality must hold with margin,
/// and entanglement/separability claims must satisfy both oracles.
inline bool certifies(const CriteriaReport& r, Predicate p) {
  constexpr double tol = 1e-10;
  const double third = 2.0 / 3.0;
  switch (p) {
    case Predicate::kEntangledWithSlAbove23:
      return r.s_linear > third + tol && r.concurrence > kOracleConcurrenceTol &&
             r.min_ppt_eigenvalue < -kPptEigTol;
    case Predicate::kSeparableWithSlBelow23:
      return r.s_linear < third - tol && r.concurrence <= kOracleConcurrenceTol &&
             r.min_ppt_eigenvalue >= -kPptEigTol;
    case Predicate::kUsefulWithSlAbove23:
      return r.s_linear > third + tol && r.n_value > 1.0 + tol;
    case Predicate::kQBelow1NAbove1:
      return r.q_value < 1.0 - tol && r.n_value > 1.0 + tol;
    default:  // M <= 1 < Q
      return r.m_value < 1.0 - tol && r.q_value > 1.0 + tol;
  }
}

namespace detail {

inline std::vector<DensityMatrix> analytic_candidates(Predicate p) {
  switch (p) {
    case Predicate::kEntangledWithSlAbove23:
      return {werner(0.5)};
    case Predicate::kSeparableWithSlBelow23: {
      // 0.9 |00><00| + 0.1 I/4: PPT with S_L well below 2/3
      CMat4 m = 0.9 * pure_state({1.0, 0.0, 0.0, 0.0}).matrix();
      m += 0.025 * CMat4::identity();
      return {validate(m), product_state({0, 0, 1}, {0, 0, 1})};
    }
    case Predicate::kUsefulWithSlAbove23:
      return {werner(0.4)};
    case Predicate::kQBelow1NAbove1:
      return {werner(0.4)};
    default:
      // inside the Werner gap (1/sqrt(3), 1/sqrt(2))
      return {werner(0.645)};
  }
}

}  // namespace detail

struct Counterexample {
  Predicate predicate = Predicate::kEntangledWithSlAbove23;
  DensityMatrix state;
  CriteriaReport report;
  std::string provenance;           // "analytic" or "random"
  std::uint64_t searched = 0;       // random draws consumed
};

/// Finds a state certified to satisfy the predicate: analytic family
/// candidates first, then a seeded random search capped at 10^6 draws.
inline Counterexample find_counterexample(Predicate predicate) {
  for (const DensityMatrix& rho : detail::analytic_candidates(predicate)) {
    const CriteriaReport rep = classify(rho);
    if (certifies(rep, predicate)) return {predicate, rho, rep, "analytic", 0};
  }
  constexpr std::uint64_t search_seed = 0x5EEDCA7A106ULL;
  for (std::uint64_t k = 0; k < kCounterexampleSearchCap; ++k) {
    const DensityMatrix rho = random_state(stream_seed(search_seed, k), 4);
    const CriteriaReport rep = classify(rho);
    if (certifies(rep, predicate)) return {predicate, rho, rep, "random", k + 1};
  }
  std::ostringstream os;
  os << "NotFound: no state satisfying '" << predicate_label(predicate) << "' after "
     << kCounterexampleSearchCap << " random draws";
  throw NotFoundError(os.str());
}

inline Counterexample find_counterexample(const std::string& predicate_name) {
  return find_counterexample(predicate_by_name(predicate_name));
}

// ---------------------------------------------------------------------------
// Monte Carlo audit.

struct StoredCounterexample {
  Predicate predicate = Predicate::kEntangledWithSlAbove23;
  std::uint64_t sample_index = 0;
  CMat4 state;
  CriteriaReport report;
};

struct AuditReport {
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;
  int rank = 4;
  std::string ensemble;

  // key packs the flag signature: (bell<<4)|(q<<3)|(tele<<2)|(sl<<1)|oracle
  std::map<int, long> cells;
  long boundary_count = 0;

  long violations_m_implies_q = 0;
  long violations_q_implies_n = 0;
  long violations_q_implies_npt = 0;
  long violations_separable_implies_n_le_1 = 0;

  long count_m = 0;        // M > 1
  long count_q = 0;        // Q > 1
  long count_n = 0;        // N > 1
  long count_sl = 0;       // 0 < S_L < 2/3
  long count_oracle = 0;   // concurrence > 1e-10

  std::vector<StoredCounterexample> counterexamples;

  long total_violations() const {
    return violations_m_implies_q + violations_q_implies_n + violations_q_implies_npt +
           violations_separable_implies_n_le_1;
  }
};

namespace detail {

inline bool near_any_threshold(const CriteriaReport& r) {
  return std::abs(r.m_value - 1.0) < kBoundaryBand || std::abs(r.q_value - 1.0) < kBoundaryBand ||
         std::abs(r.n_value - 1.0) < kBoundaryBand ||
         std::abs(r.concurrence_margin - kOracleConcurrenceTol) < kBoundaryBand ||
         std::abs(r.min_ppt_eigenvalue + kPptEigTol) < kBoundaryBand;
}

/// The two oracles are both exact for two qubits; a strong contradiction
/// means an eigensolver bug, not a boundary effect, and aborts the audit.
inline void check_oracle_agreement(const CMat4& state, const CriteriaReport& r) {
  const bool conc_entangled_strong = r.concurrence > 1e-4;
  const bool ppt_says_separable = r.min_ppt_eigenvalue >= -kPptEigTol;
  const bool npt_strong = r.min_ppt_eigenvalue < -1e-6;
  const bool conc_says_separable = r.concurrence <= kOracleConcurrenceTol;
  if ((conc_entangled_strong && ppt_says_separable) || (npt_strong && conc_says_separable)) {
    nlohmann::json dump;
    dump["state"] = [&] {
      nlohmann::json re = nlohmann::json::array(), im = nlohmann::json::array();
      for (int i = 0; i < 4; ++i) {
        nlohmann::json rr = nlohmann::json::array(), ir = nlohmann::json::array();
        for (int j = 0; j < 4; ++j) {
          rr.push_back(state(i, j).real());
          ir.push_back(state(i, j).imag());
        }
        re.push_back(rr);
        im.push_back(ir);
      }
      return nlohmann::json{{"re", re}, {"im", im}};
    }();
    dump["concurrence"] = r.concurrence;
    dump["min_ppt_eigenvalue"] = r.min_ppt_eigenvalue;
    throw OracleMismatchError("PPT and concurrence oracles disagree: " + dump.dump());
  }
}

inline int cell_key(const CriteriaReport& r) {
  return (r.verdicts.bell_chsh_violating << 4) | (r.verdicts.q_detected << 3) |
         (r.verdicts.teleportation_useful << 2) | (r.verdicts.paper_linear_entropy_flag << 1) |
         static_cast<int>(r.verdicts.oracle_entangled);
}

struct AuditAccum {
  std::map<int, long> cells;
  long boundary = 0;
  long viol_mq = 0, viol_qn = 0, viol_qnpt = 0, viol_sep_n = 0;
  long count_m = 0, count_q = 0, count_n = 0, count_sl = 0, count_oracle = 0;
  std::vector<StoredCounterexample> counterexamples;

  void absorb_sample(std::uint64_t index, const CMat4& state, const CriteriaReport& r) {
    check_oracle_agreement(state, r);
    ++cells[cell_key(r)];
    if (r.verdicts.bell_chsh_violating) ++count_m;
    if (r.verdicts.q_detected) ++count_q;
    if (r.verdicts.teleportation_useful) ++count_n;
    if (r.verdicts.paper_linear_entropy_flag) ++count_sl;
    if (r.verdicts.oracle_entangled) ++count_oracle;

    if (near_any_threshold(r)) {
      ++boundary;
    } else {
      const bool npt = r.min_ppt_eigenvalue < -kPptEigTol;
      if (r.m_value > 1.0 && !(r.q_value > 1.0)) ++viol_mq;
      if (r.q_value > 1.0 && !(r.n_value > 1.0)) ++viol_qn;
      if (r.q_value > 1.0 && !npt) ++viol_qnpt;
      if (!npt && r.n_value > 1.0 + kPptEigTol) ++viol_sep_n;
    }

    for (Predicate p : predicate_catalog()) {
      if (certifies(r, p)) {
        long stored = 0;
        for (const auto& ce : counterexamples)
          if (ce.predicate == p) ++stored;
        if (stored < kMaxStoredCounterexamples)
          counterexamples.push_back({p, index, state, r});
      }
    }
  }

  void merge(const AuditAccum& other) {
    for (const auto& [key, n] : other.cells) cells[key] += n;
    boundary += other.boundary;
    viol_mq += other.viol_mq;
    viol_qn += other.viol_qn;
    viol_qnpt += other.viol_qnpt;
    viol_sep_n += other.viol_sep_n;
    count_m += other.count_m;
    count_q += other.count_q;
    count_n += other.count_n;
    count_sl += other.count_sl;
    count_oracle += other.count_oracle;
    // chunks arrive in index order; a final trim keeps the earliest k
    for (const auto& ce : other.counterexamples) counterexamples.push_back(ce);
  }
};

inline int worker_count(std::uint64_t samples) {
  long n = 0;
  if (const char* env = std::getenv("QENT_THREADS")) n = std::strtol(env, nullptr, 10);
  if (n <= 0) n = static_cast<long>(std::thread::hardware_concurrency());
  if (n <= 0) n = 1;
  if (samples < 1024) n = 1;
  return static_cast<int>(std::min<std::uint64_t>(static_cast<std::uint64_t>(n), samples));
}

}  // namespace detail

/// Classifies `samples` Ginibre-induced random states and tallies every
/// criterion against the oracles. Deterministic for fixed (samples, seed,
/// rank) regardless of worker count: sample k draws from stream (seed, k).
inline AuditReport run_audit(std::uint64_t samples, std::uint64_t seed, int rank) {
  if (samples < 1) throw ParamOutOfRangeError("ParamOutOfRange: samples must be >= 1");
  if (rank < 1 || rank > 4) throw ParamOutOfRangeError("ParamOutOfRange: rank outside [1, 4]");

  const int workers = detail::worker_count(samples);
  std::vector<detail::AuditAccum> parts(static_cast<std::size_t>(workers));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));

  auto run_chunk = [&](int w, std::uint64_t begin, std::uint64_t end) {
    try {
      for (std::uint64_t k = begin; k < end; ++k) {
        const DensityMatrix rho = random_state(stream_seed(seed, k), rank);
        parts[static_cast<std::size_t>(w)].absorb_sample(k, rho.matrix(), classify(rho));
      }
    } catch (...) {
      errors[static_cast<std::size_t>(w)] = std::current_exception();
    }
  };

  if (workers == 1) {
    run_chunk(0, 0, samples);
  } else {
    const std::uint64_t chunk = (samples + static_cast<std::uint64_t>(workers) - 1) /
                                static_cast<std::uint64_t>(workers);
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      const std::uint64_t begin = chunk * static_cast<std::uint64_t>(w);
      const std::uint64_t end = std::min(samples, begin + chunk);
      pool.emplace_back(run_chunk, w, begin, end);
    }
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  detail::AuditAccum total;
  for (const auto& part : parts) total.merge(part);

  AuditReport rep;
  rep.samples = samples;
  rep.seed = seed;
  rep.rank = rank;
  rep.ensemble = "ginibre(rank=" + std::to_string(rank) + ")";
  rep.cells = std::move(total.cells);
  rep.boundary_count = total.boundary;
  rep.violations_m_implies_q = total.viol_mq;
  rep.violations_q_implies_n = total.viol_qn;
  rep.violations_q_implies_npt = total.viol_qnpt;
  rep.violations_separable_implies_n_le_1 = total.viol_sep_n;
  rep.count_m = total.count_m;
  rep.count_q = total.count_q;
  rep.count_n = total.count_n;
  rep.count_sl = total.count_sl;
  rep.count_oracle = total.count_oracle;

  std::map<Predicate, long> kept;
  for (const auto& ce : total.counterexamples) {
    if (kept[ce.predicate] < kMaxStoredCounterexamples) {
      ++kept[ce.predicate];
      rep.counterexamples.push_back(ce);
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Santos comparison: how much of the entangled population each linear-entropy
// window and criterion catches.

struct SantosRow {
  std::string criterion;
  long count = 0;
  double fraction = 0.0;
  double wilson_lo = 0.0;
  double wilson_hi = 0.0;
};

struct SantosTable {
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;
  int rank = 4;
  std::string ensemble;
  long entangled_count = 0;
  std::vector<SantosRow> rows;
};

namespace detail {

inline SantosRow wilson_row(const std::string& name, long k, long n) {
  SantosRow row;
  row.criterion = name;
  row.count = k;
  if (n <= 0) return row;
  constexpr double z = 1.959963984540054;  // 95% two-sided
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(k) / nn;
  const double denom = 1.0 + z * z / nn;
  const double center = (p + z * z / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z * z / (4.0 * nn * nn)) / denom;
  row.fraction = p;
  row.wilson_lo = center - half;
  row.wilson_hi = center + half;
  return row;
}

}  // namespace detail

inline SantosTable santos_comparison(std::uint64_t samples, std::uint64_t seed) {
  if (samples < 1) throw ParamOutOfRangeError("ParamOutOfRange: samples must be >= 1");
  SantosTable table;
  table.samples = samples;
  table.seed = seed;
  table.ensemble = "ginibre(rank=4)";

  long k_santos = 0, k_paper = 0, k_q = 0, k_m = 0;
  for (std::uint64_t k = 0; k < samples; ++k) {
    const CriteriaReport r = classify(random_state(stream_seed(seed, k), 4));
    if (!(r.concurrence > kOracleConcurrenceTol)) continue;
    ++table.entangled_count;
    if (r.s_linear < 0.5) ++k_santos;
    if (r.s_linear < 2.0 / 3.0) ++k_paper;
    if (r.q_value > 1.0) ++k_q;
    if (r.m_value > 1.0) ++k_m;
  }
  const long n = table.entangled_count;
  table.rows.push_back(detail::wilson_row("s_linear<1/2", k_santos, n));
  table.rows.push_back(detail::wilson_row("s_linear<2/3", k_paper, n));
  table.rows.push_back(detail::wilson_row("q>1", k_q, n));
  table.rows.push_back(detail::wilson_row("m>1", k_m, n));
  return table;
}

// ---------------------------------------------------------------------------
// Serialization.

namespace detail {

inline std::string cell_signature(int key) {
  std::ostringstream os;
  os << "m" << ((key >> 4) & 1) << "q" << ((key >> 3) & 1) << "n" << ((key >> 2) & 1) << "s"
     << ((key >> 1) & 1) << "o" << (key & 1);
  return os.str();
}

}  // namespace detail

inline nlohmann::json raw_matrix_to_json(const CMat4& m) {
  nlohmann::json re = nlohmann::json::array(), im = nlohmann::json::array();
  for (int i = 0; i < 4; ++i) {
    nlohmann::json rr = nlohmann::json::array(), ir = nlohmann::json::array();
    for (int j = 0; j < 4; ++j) {
      rr.push_back(m(i, j).real());
      ir.push_back(m(i, j).imag());
    }
    re.push_back(rr);
    im.push_back(ir);
  }
  return {{"re", re}, {"im", im}};
}

inline nlohmann::json audit_report_to_json(const AuditReport& rep) {
  const double n = static_cast<double>(rep.samples);
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& [key, count] : rep.cells) {
    cells.push_back({{"signature", detail::cell_signature(key)},
                     {"bell_chsh_violating", static_cast<bool>((key >> 4) & 1)},
                     {"q_detected", static_cast<bool>((key >> 3) & 1)},
                     {"teleportation_useful", static_cast<bool>((key >> 2) & 1)},
                     {"paper_linear_entropy_flag", static_cast<bool>((key >> 1) & 1)},
                     {"oracle_entangled", static_cast<bool>(key & 1)},
                     {"count", count}});
  }
  nlohmann::json ces = nlohmann::json::array();
  for (const auto& ce : rep.counterexamples) {
    ces.push_back({{"predicate", predicate_label(ce.predicate)},
                   {"sample_index", ce.sample_index},
                   {"state", raw_matrix_to_json(ce.state)},
                   {"report", report_to_json(ce.report)}});
  }
  return {{"samples", rep.samples},
          {"seed", rep.seed},
          {"rank", rep.rank},
          {"ensemble", rep.ensemble},
          {"boundary_count", rep.boundary_count},
          {"cells", cells},
          {"violations",
           {{"m_gt_1_implies_q_gt_1", rep.violations_m_implies_q},
            {"q_gt_1_implies_n_gt_1", rep.violations_q_implies_n},
            {"q_gt_1_implies_npt", rep.violations_q_implies_npt},
            {"separable_implies_n_le_1", rep.violations_separable_implies_n_le_1}}},
          {"fractions",
           {{"m_gt_1", round12(static_cast<double>(rep.count_m) / n)},
            {"q_gt_1", round12(static_cast<double>(rep.count_q) / n)},
            {"n_gt_1", round12(static_cast<double>(rep.count_n) / n)},
            {"sl_window", round12(static_cast<double>(rep.count_sl) / n)},
            {"oracle_entangled", round12(static_cast<double>(rep.count_oracle) / n)}}},
          {"counterexamples", ces}};
}

inline void write_audit_cells_csv(std::ostream& os, const AuditReport& rep) {
  os << "signature,bell_violating,q_detected,tele_useful,sl_window,oracle_entangled,count\n";
  for (const auto& [key, count] : rep.cells) {
    os << detail::cell_signature(key) << ',' << ((key >> 4) & 1) << ',' << ((key >> 3) & 1) << ','
       << ((key >> 2) & 1) << ',' << ((key >> 1) & 1) << ',' << (key & 1) << ',' << count << '\n';
  }
}

inline nlohmann::json santos_to_json(const SantosTable& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (const SantosRow& r : t.rows) {
    rows.push_back({{"criterion", r.criterion},
                    {"count", r.count},
                    {"fraction", round12(r.fraction)},
                    {"wilson95", {round12(r.wilson_lo), round12(r.wilson_hi)}}});
  }
  return {{"samples", t.samples}, {"seed", t.seed},           {"rank", t.rank},
          {"ensemble", t.ensemble}, {"entangled_count", t.entangled_count}, {"rows", rows}};
}

inline nlohmann::json counterexample_to_json(const Counterexample& ce) {
  return {{"predicate", predicate_label(ce.predicate)},
          {"provenance", ce.provenance},
          {"searched", ce.searched},
          {"state", state_to_json(ce.state)},
          {"report", report_to_json(ce.report)}};
}

}  // namespace qent
