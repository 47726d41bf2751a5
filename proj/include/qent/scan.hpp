#pragma once

#include <cmath>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qent/criteria.hpp"
#include "qent/errors.hpp"
#include "qent/format.hpp"
#include "qent/states.hpp"

namespace qent {

inline constexpr double kBisectParamTol = 1e-9;
inline constexpr double kBisectResidualTol = 1e-9;
inline constexpr int kBisectMaxIter = 200;
inline constexpr int kPreScanPoints = 100;

struct SweepRow {
  double parameter = 0.0;
  CriteriaReport report;
};

struct Grid {
  double start = 0.0;
  double stop = 1.0;
  double step = 0.1;
};

namespace detail {

inline std::vector<double> grid_points(const Grid& g) {
  if (!(g.step > 0.0)) throw ParamOutOfRangeError("ParamOutOfRange: step must be > 0");
  if (!(g.start <= g.stop))
    throw ParamOutOfRangeError("ParamOutOfRange: grid start exceeds stop");
  const long n = static_cast<long>(std::floor((g.stop - g.start) / g.step + 1e-9));
  std::vector<double> xs;
  xs.reserve(static_cast<std::size_t>(n) + 1);
  for (long k = 0; k <= n; ++k) xs.push_back(g.start + static_cast<double>(k) * g.step);
  return xs;
}

}  // namespace detail

/// One classification per grid point, in parameter order.
inline std::vector<SweepRow> sweep(const StateFamily& family, const Grid& grid) {
  if (grid.start < family.lo - 1e-12 || grid.stop > family.hi + 1e-12) {
    std::ostringstream os;
    os << "ParamOutOfRange: grid [" << grid.start << ", " << grid.stop
       << "] outside family range [" << family.lo << ", " << family.hi << "]";
    throw ParamOutOfRangeError(os.str());
  }
  std::vector<SweepRow> rows;
  for (double x : detail::grid_points(grid)) {
    const double p = std::min(std::max(x, family.lo), family.hi);
    rows.push_back({p, classify(make_state(family, p))});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Threshold search.

enum class Functional { kM, kN, kQ, kSLinear, kConcurrence };

inline const char* functional_label(Functional f) {
  switch (f) {
    case Functional::kM: return "m";
    case Functional::kN: return "n";
    case Functional::kQ: return "q";
    case Functional::kSLinear: return "s_linear";
    default: return "concurrence";
  }
}

inline Functional functional_by_name(const std::string& name) {
  if (name == "m") return Functional::kM;
  if (name == "n") return Functional::kN;
  if (name == "q") return Functional::kQ;
  if (name == "s_linear") return Functional::kSLinear;
  if (name == "concurrence") return Functional::kConcurrence;
  throw ParseError("unknown functional '" + name + "', expected m|n|q|s_linear|concurrence");
}

inline double evaluate_functional(const StateFamily& family, Functional f, double param) {
  const DensityMatrix rho = make_state(family, param);
  switch (f) {
    case Functional::kM: return m_value(rho);
    case Functional::kN: return n_value(rho);
    case Functional::kQ: return q_value(rho);
    case Functional::kSLinear: return linear_entropy(rho);
    default: return concurrence(rho);
  }
}

struct ThresholdResult {
  Functional functional = Functional::kM;
  double target = 0.0;
  double parameter_star = 0.0;
  double bracket_lo = 0.0;  // refined bracket actually straddling the target
  double bracket_hi = 0.0;
  double achieved_residual = 0.0;
  bool non_monotone = false;  // pre-scan found multiple crossings
};

namespace detail {

inline int sign_of(double v) { return v > 0.0 ? 1 : (v < 0.0 ? -1 : 1); }

template <typename F>
ThresholdResult bisect_threshold(F&& f, double lo, double hi) {
  // 100-point pre-scan isolates a straddling subinterval; piecewise
  // functionals (e.g. M over MEMS with its kink at p = 1/3) may cross
  // the target more than once inside a careless bracket.
  std::vector<double> xs(kPreScanPoints);
  std::vector<int> sg(kPreScanPoints);
  for (int i = 0; i < kPreScanPoints; ++i) {
    xs[i] = lo + (hi - lo) * static_cast<double>(i) / (kPreScanPoints - 1);
    sg[i] = sign_of(f(xs[i]));
  }
  int crossings = 0;
  int first = -1;
  for (int i = 0; i + 1 < kPreScanPoints; ++i) {
    if (sg[i] * sg[i + 1] < 0) {
      ++crossings;
      if (first < 0) first = i;
    }
  }
  if (crossings == 0)
    throw NoSignChangeError("NoSignChange: functional - target has the same sign on the bracket");

  ThresholdResult out;
  out.non_monotone = crossings > 1;
  double xa = xs[first], xb = xs[first + 1];
  out.bracket_lo = xa;
  out.bracket_hi = xb;
  int sa = sg[first];

  for (int iter = 0; iter < kBisectMaxIter; ++iter) {
    const double mid = 0.5 * (xa + xb);
    if (mid <= xa || mid >= xb) break;  // bracket at floating-point resolution
    const double fm = f(mid);
    if (sign_of(fm) == sa)
      xa = mid;
    else
      xb = mid;
    if (xb - xa <= kBisectParamTol && std::abs(fm) <= kBisectResidualTol) break;
  }
  out.parameter_star = 0.5 * (xa + xb);
  out.achieved_residual = f(out.parameter_star);
  return out;
}

}  // namespace detail

/// Bisection for functional(param) = target inside the bracket.
/// Converges to |Δparam| <= 1e-9 and residual <= 1e-9 (the bracket keeps
/// halving past the parameter tolerance until the residual is met too).
inline ThresholdResult find_threshold(const StateFamily& family, Functional functional,
                                      double target, double lo, double hi) {
  if (lo < family.lo - 1e-12 || hi > family.hi + 1e-12 || !(lo < hi)) {
    std::ostringstream os;
    os << "ParamOutOfRange: bracket [" << lo << ", " << hi << "] invalid for family range ["
       << family.lo << ", " << family.hi << "]";
    throw ParamOutOfRangeError(os.str());
  }
  ThresholdResult out = detail::bisect_threshold(
      [&](double x) { return evaluate_functional(family, functional, x) - target; }, lo, hi);
  out.functional = functional;
  out.target = target;
  return out;
}

// ---------------------------------------------------------------------------
// Region tables.

enum class RegionFlag { kBellViolating, kQDetected, kTeleportationUseful, kOracleEntangled };

inline const char* region_flag_label(RegionFlag f) {
  switch (f) {
    case RegionFlag::kBellViolating: return "bell_chsh_violating";
    case RegionFlag::kQDetected: return "q_detected";
    case RegionFlag::kTeleportationUseful: return "teleportation_useful";
    default: return "oracle_entangled";
  }
}

namespace detail {

/// Flag with a 1e-12 guard band so families sitting exactly on a threshold
/// (MEMS has N = 1 identically on p <= 1/2) do not flicker with rounding.
inline bool region_flag_value(const CriteriaReport& rep, RegionFlag f) {
  switch (f) {
    case RegionFlag::kBellViolating: return rep.m_value > 1.0 + 1e-12;
    case RegionFlag::kQDetected: return rep.q_value > 1.0 + 1e-12;
    case RegionFlag::kTeleportationUseful: return rep.n_value > 1.0 + 1e-12;
    default: return rep.concurrence > kOracleConcurrenceTol + 1e-12;
  }
}

/// All parameters where the flag flips, located by boolean bisection.
inline std::vector<double> flag_transitions(const StateFamily& family, RegionFlag flag,
                                            int scan_points = 512) {
  auto value = [&](double x) {
    return region_flag_value(classify(make_state(family, x)), flag);
  };
  std::vector<double> out;
  double x_prev = family.lo;
  bool v_prev = value(x_prev);
  for (int i = 1; i < scan_points; ++i) {
    const double x = family.lo + (family.hi - family.lo) * static_cast<double>(i) /
                                     (scan_points - 1);
    const bool v = value(x);
    if (v != v_prev) {
      double xa = x_prev, xb = x;
      while (xb - xa > kBisectParamTol) {
        const double mid = 0.5 * (xa + xb);
        if (mid <= xa || mid >= xb) break;
        if (value(mid) == v_prev)
          xa = mid;
        else
          xb = mid;
      }
      out.push_back(0.5 * (xa + xb));
    }
    x_prev = x;
    v_prev = v;
  }
  return out;
}

}  // namespace detail

struct RegionBoundary {
  std::string label;
  double parameter = 0.0;
};

struct Region {
  double lo = 0.0;
  double hi = 0.0;
  bool bell_chsh_violating = false;
  bool q_detected = false;
  bool teleportation_useful = false;
  bool oracle_entangled = false;
  std::string signature;  // e.g. "bell=0,q=1,tele=1,oracle=1"
};

struct RegionTable {
  StateFamily family;
  std::vector<RegionBoundary> boundaries;
  std::vector<Region> regions;
};

/// Parameter intervals labeled by the verdict-flag signature, with flag
/// boundaries from bisection and S_L = 2/3, 8/9 crossings as markers.
inline RegionTable region_table(const StateFamily& family) {
  RegionTable table;
  table.family = family;

  std::vector<double> cuts{family.lo, family.hi};
  for (RegionFlag flag :
       {RegionFlag::kOracleEntangled, RegionFlag::kTeleportationUseful, RegionFlag::kQDetected,
        RegionFlag::kBellViolating}) {
    for (double x : detail::flag_transitions(family, flag)) {
      table.boundaries.push_back({region_flag_label(flag), x});
      cuts.push_back(x);
    }
  }
  for (double sl_target : {2.0 / 3.0, 8.0 / 9.0}) {
    try {
      const ThresholdResult t =
          find_threshold(family, Functional::kSLinear, sl_target, family.lo, family.hi);
      std::ostringstream os;
      os << "s_linear=" << fmt12(sl_target);
      table.boundaries.push_back({os.str(), t.parameter_star});
    } catch (const NoSignChangeError&) {
      // the family never crosses this level; no marker
    }
  }

  std::sort(cuts.begin(), cuts.end());
  std::vector<double> unique_cuts;
  for (double c : cuts) {
    if (unique_cuts.empty() || c - unique_cuts.back() > 1e-7) unique_cuts.push_back(c);
  }

  for (std::size_t i = 0; i + 1 < unique_cuts.size(); ++i) {
    Region reg;
    reg.lo = unique_cuts[i];
    reg.hi = unique_cuts[i + 1];
    const CriteriaReport rep = classify(make_state(family, 0.5 * (reg.lo + reg.hi)));
    reg.bell_chsh_violating = detail::region_flag_value(rep, RegionFlag::kBellViolating);
    reg.q_detected = detail::region_flag_value(rep, RegionFlag::kQDetected);
    reg.teleportation_useful = detail::region_flag_value(rep, RegionFlag::kTeleportationUseful);
    reg.oracle_entangled = detail::region_flag_value(rep, RegionFlag::kOracleEntangled);
    std::ostringstream sig;
    sig << "bell=" << reg.bell_chsh_violating << ",q=" << reg.q_detected
        << ",tele=" << reg.teleportation_useful << ",oracle=" << reg.oracle_entangled;
    reg.signature = sig.str();
    table.regions.push_back(reg);
  }
  return table;
}

// ---------------------------------------------------------------------------
// Serialization.

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "param," << kReportCsvColumns << '\n';
  for (const SweepRow& row : rows)
    os << fmt12(row.parameter) << ',' << report_csv_fields(row.report) << '\n';
}

inline nlohmann::json sweep_to_json(const std::vector<SweepRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const SweepRow& row : rows) {
    nlohmann::json j = report_to_json(row.report);
    j["param"] = round12(row.parameter);
    arr.push_back(std::move(j));
  }
  return arr;
}

inline nlohmann::json threshold_to_json(const ThresholdResult& t) {
  return {{"functional", functional_label(t.functional)},
          {"target", round12(t.target)},
          {"parameter_star", round12(t.parameter_star)},
          {"bracket", {round12(t.bracket_lo), round12(t.bracket_hi)}},
          {"achieved_residual", round12(t.achieved_residual)},
          {"non_monotone", t.non_monotone}};
}

inline nlohmann::json region_table_to_json(const RegionTable& table) {
  nlohmann::json boundaries = nlohmann::json::array();
  for (const RegionBoundary& b : table.boundaries)
    boundaries.push_back({{"label", b.label}, {"parameter", round12(b.parameter)}});
  nlohmann::json regions = nlohmann::json::array();
  for (const Region& r : table.regions)
    regions.push_back({{"lo", round12(r.lo)},
                       {"hi", round12(r.hi)},
                       {"signature", r.signature},
                       {"bell_chsh_violating", r.bell_chsh_violating},
                       {"q_detected", r.q_detected},
                       {"teleportation_useful", r.teleportation_useful},
                       {"oracle_entangled", r.oracle_entangled}});
  return {{"family", family_label(table.family.name)},
          {"boundaries", boundaries},
          {"regions", regions}};
}

}  // namespace qent
