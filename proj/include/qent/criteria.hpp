#pragma once

#include <cmath>
#include <sstream>
#include <string>

#include <json.hpp>

#include "qent/errors.hpp"
#include "qent/format.hpp"
#include "qent/smallmat.hpp"
#include "qent/states.hpp"

namespace qent {

inline constexpr double kOracleConcurrenceTol = 1e-10;  // concurrence > this => entangled
inline constexpr double kPptEigTol = 1e-10;             // min PT eigenvalue >= -this => PPT
inline constexpr double kCtcClipTol = 1e-12;            // CᵀC eigenvalue clip before sqrt
inline constexpr double kSettingsUnitTol = 1e-9;

/// Four measurement directions defining a CHSH Bell operator
///   B = a·σ ⊗ (b+b')·σ + a'·σ ⊗ (b-b')·σ.
struct MeasurementSettings {
  Vec3 a{};
  Vec3 a_prime{};
  Vec3 b{};
  Vec3 b_prime{};
};

inline void validate_settings(const MeasurementSettings& s, double tol = kSettingsUnitTol) {
  for (const Vec3* v : {&s.a, &s.a_prime, &s.b, &s.b_prime}) {
    const double dev = std::abs(norm(*v) - 1.0);
    if (!(dev <= tol)) {
      std::ostringstream os;
      os << "NonUnitVector: |v| deviates from 1 by " << dev;
      throw NonUnitVectorError(os.str());
    }
  }
}

namespace detail {

inline SymSpectrum3 correlation_spectrum(const DensityMatrix& rho) {
  const BlochForm b = bloch_decompose(rho);
  return eig_sym3(SymMat3::gram(b.c));
}

}  // namespace detail

/// Linear entropy S_L = (4/3)(1 - Tr rho²); 0 for pure states, 1 at I/4.
/// Rounding can push Tr rho² of a pure state a few ulps past 1; the clamp
/// keeps S_L in [0, 1 + 1e-12].
inline double linear_entropy(const DensityMatrix& rho) {
  return std::max(0.0, (4.0 / 3.0) * (1.0 - purity(rho)));
}

/// Q = 3(1 - S_L) - Σ(r_i² + s_i²); equals Tr(CᵀC), the full correlation
/// strength, and sits between M and N in the criterion chain.
inline double q_value(const DensityMatrix& rho) {
  const BlochForm b = bloch_decompose(rho);
  const double r2 = dot(b.r, b.r);
  const double s2 = dot(b.s, b.s);
  return 3.0 * (1.0 - linear_entropy(rho)) - (r2 + s2);
}

/// Horodecki criterion value: sum of the two largest eigenvalues of CᵀC.
/// The state violates some CHSH inequality iff M > 1.
inline double m_value(const DensityMatrix& rho) {
  const SymSpectrum3 s = detail::correlation_spectrum(rho);
  return s.eigenvalues[0] + s.eigenvalues[1];
}

/// N = Tr sqrt(CᵀC) = Σ sqrt(λ_i). N > 1 iff the state violates a
/// generalized Bell-CHSH inequality and is useful for teleportation.
inline double n_value(const DensityMatrix& rho) {
  const SymSpectrum3 s = detail::correlation_spectrum(rho);
  double n = 0.0;
  for (double lam : s.eigenvalues) {
    // CᵀC is PSD by construction; small negatives are rounding.
    n += std::sqrt(std::max(lam, 0.0));
  }
  return n;
}

/// Tr(rho B) for the Bell operator built from the settings. Real within
/// 1e-10 by Hermiticity; |result| <= 2 sqrt(M) for any settings.
inline double chsh_value(const DensityMatrix& rho, const MeasurementSettings& s) {
  validate_settings(s);
  const CMat4 bell_op = kron(pauli_dot(s.a), pauli_dot(s.b + s.b_prime)) +
                        kron(pauli_dot(s.a_prime), pauli_dot(s.b - s.b_prime));
  return detail::real_trace_product(rho.matrix(), bell_op);
}

/// Settings achieving the Horodecki maximum 2 sqrt(M), built from the two
/// leading eigenvectors v1, v2 of CᵀC:
///   b, b' = cosθ v1 ± sinθ v2 with tanθ = sqrt(λ2/λ1),
///   a = C v1 / |C v1|,  a' = C v2 / |C v2|.
inline MeasurementSettings chsh_optimal_settings(const DensityMatrix& rho) {
  const BlochForm bloch = bloch_decompose(rho);
  const SymSpectrum3 s = eig_sym3(SymMat3::gram(bloch.c));
  const double lam1 = std::max(s.eigenvalues[0], 0.0);
  const double lam2 = std::max(s.eigenvalues[1], 0.0);
  if (lam1 < 1e-18) {
    throw DegenerateCorrelationError(
        "DegenerateCorrelation: top two eigenvalues of CᵀC are both zero");
  }
  const Vec3 v1 = s.eigenvector(0);
  const Vec3 v2 = s.eigenvector(1);

  const double theta = std::atan2(std::sqrt(lam2), std::sqrt(lam1));
  const double ct = std::cos(theta), st = std::sin(theta);

  MeasurementSettings out;
  out.b = normalized(scaled(v1, ct) + scaled(v2, st));
  out.b_prime = normalized(scaled(v1, ct) - scaled(v2, st));
  out.a = normalized(bloch.c * v1);
  if (lam2 >= 1e-18) {
    out.a_prime = normalized(bloch.c * v2);
  } else {
    // sinθ = 0: a' never contributes, any unit vector completes the settings
    int k = 0;
    for (int i = 1; i < 3; ++i)
      if (std::abs(out.a[i]) < std::abs(out.a[k])) k = i;
    Vec3 e{};
    e[k] = 1.0;
    out.a_prime = normalized(cross(out.a, e));
  }
  return out;
}

namespace detail {

/// kron(σ_y, σ_y), the two-qubit spin-flip operator (real, anti-diagonal).
inline const CMat4& spin_flip_op() {
  static const CMat4 yy = kron(pauli_y(), pauli_y());
  return yy;
}

/// Unclamped Wootters difference μ1 - μ2 - μ3 - μ4 where the μ_i are the
/// descending eigenvalues of sqrt(sqrt(rho) rho~ sqrt(rho)).
inline double wootters_margin(const DensityMatrix& rho) {
  const CMat4& yy = spin_flip_op();
  const CMat4 sqrt_rho = psd_sqrt(rho.matrix());
  const CMat4 rho_tilde = yy * rho.matrix().conjugate() * yy;
  const Spectrum<4> s = eig_hermitian(sqrt_rho * rho_tilde * sqrt_rho);
  double margin = 0.0;
  for (int i = 0; i < 4; ++i) {
    const double mu = std::sqrt(std::max(s.eigenvalues[i], 0.0));
    margin += (i == 0) ? mu : -mu;
  }
  return margin;
}

}  // namespace detail

/// Wootters concurrence, via the Hermitian form sqrt(sqrt(rho) rho~ sqrt(rho))
/// with rho~ = (σ_y⊗σ_y) rho* (σ_y⊗σ_y). Positive exactly for entangled states.
inline double concurrence(const DensityMatrix& rho) {
  return std::max(0.0, detail::wootters_margin(rho));
}

struct PptResult {
  bool is_ppt = true;
  double min_eigenvalue = 0.0;
};

/// Peres-Horodecki test: for two qubits, a positive partial transpose is
/// exact for separability.
inline PptResult ppt_check(const DensityMatrix& rho) {
  const Spectrum<4> s = eig_hermitian(partial_transpose(rho.matrix()));
  PptResult r;
  r.min_eigenvalue = s.eigenvalues[3];
  r.is_ppt = r.min_eigenvalue >= -kPptEigTol;
  return r;
}

// ---------------------------------------------------------------------------

struct CriteriaVerdicts {
  bool bell_chsh_violating = false;     // M > 1
  bool q_detected = false;              // Q > 1
  bool paper_linear_entropy_flag = false;  // 0 < S_L < 2/3
  bool teleportation_useful = false;    // N > 1
  bool oracle_entangled = false;        // concurrence > 1e-10
};

/// Every scalar criterion and verdict for one state. Flags are computed
/// independently so disagreements between criteria stay visible.
struct CriteriaReport {
  double s_linear = 0.0;
  double q_value = 0.0;
  double m_value = 0.0;
  double n_value = 0.0;
  double concurrence = 0.0;
  double min_ppt_eigenvalue = 0.0;
  double r_norm_sq = 0.0;  // Σ r_i²
  double s_norm_sq = 0.0;  // Σ s_i²
  CriteriaVerdicts verdicts;

  // unclamped Wootters difference, kept for boundary-band detection in audits
  double concurrence_margin = 0.0;
};

inline CriteriaReport classify(const DensityMatrix& rho) {
  CriteriaReport rep;
  const BlochForm b = bloch_decompose(rho);
  rep.r_norm_sq = dot(b.r, b.r);
  rep.s_norm_sq = dot(b.s, b.s);
  rep.s_linear = linear_entropy(rho);
  rep.q_value = q_value(rho);
  rep.m_value = m_value(rho);
  rep.n_value = n_value(rho);
  rep.concurrence_margin = detail::wootters_margin(rho);
  rep.concurrence = std::max(0.0, rep.concurrence_margin);
  rep.min_ppt_eigenvalue = ppt_check(rho).min_eigenvalue;

  // strict inequalities; boundary states classify as non-violating
  rep.verdicts.bell_chsh_violating = rep.m_value > 1.0;
  rep.verdicts.q_detected = rep.q_value > 1.0;
  rep.verdicts.paper_linear_entropy_flag = rep.s_linear > 0.0 && rep.s_linear < 2.0 / 3.0;
  rep.verdicts.teleportation_useful = rep.n_value > 1.0;
  rep.verdicts.oracle_entangled = rep.concurrence > kOracleConcurrenceTol;
  return rep;
}

inline nlohmann::json report_to_json(const CriteriaReport& r) {
  return {{"s_linear", round12(r.s_linear)},
          {"q_value", round12(r.q_value)},
          {"m_value", round12(r.m_value)},
          {"n_value", round12(r.n_value)},
          {"concurrence", round12(r.concurrence)},
          {"min_ppt_eigenvalue", round12(r.min_ppt_eigenvalue)},
          {"r_norm_sq", round12(r.r_norm_sq)},
          {"s_norm_sq", round12(r.s_norm_sq)},
          {"bell_chsh_violating", r.verdicts.bell_chsh_violating},
          {"q_detected", r.verdicts.q_detected},
          {"paper_linear_entropy_flag", r.verdicts.paper_linear_entropy_flag},
          {"teleportation_useful", r.verdicts.teleportation_useful},
          {"oracle_entangled", r.verdicts.oracle_entangled}};
}

/// Report fields in the CSV column order (without the leading param column).
inline std::string report_csv_fields(const CriteriaReport& r) {
  std::ostringstream os;
  os << fmt12(r.s_linear) << ',' << fmt12(r.q_value) << ',' << fmt12(r.m_value) << ','
     << fmt12(r.n_value) << ',' << fmt12(r.concurrence) << ',' << fmt12(r.min_ppt_eigenvalue)
     << ',' << (r.verdicts.bell_chsh_violating ? 1 : 0) << ',' << (r.verdicts.q_detected ? 1 : 0)
     << ',' << (r.verdicts.teleportation_useful ? 1 : 0) << ','
     << (r.verdicts.oracle_entangled ? 1 : 0);
  return os.str();
}

inline constexpr const char* kReportCsvColumns =
    "s_linear,q,m,n,concurrence,min_ppt_eig,bell_violating,q_detected,tele_useful,"
    "oracle_entangled";

}  // namespace qent
