#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "qent/errors.hpp"
#include "qent/smallmat.hpp"

namespace qent {

inline constexpr double kTraceTol = 1e-9;
inline constexpr double kImagDiscardTol = 1e-10;

// ---------------------------------------------------------------------------
// Pauli matrices, axis 0..2 = x, y, z; computational basis |00>,|01>,|10>,|11>.

inline CMat2 pauli_x() {
  CMat2 m;
  m(0, 1) = 1.0;
  m(1, 0) = 1.0;
  return m;
}

inline CMat2 pauli_y() {
  CMat2 m;
  m(0, 1) = cplx(0.0, -1.0);
  m(1, 0) = cplx(0.0, 1.0);
  return m;
}

inline CMat2 pauli_z() {
  CMat2 m;
  m(0, 0) = 1.0;
  m(1, 1) = -1.0;
  return m;
}

inline CMat2 pauli(int axis) {
  switch (axis) {
    case 0: return pauli_x();
    case 1: return pauli_y();
    default: return pauli_z();
  }
}

/// v·σ for a real 3-vector v (not necessarily unit length).
inline CMat2 pauli_dot(const Vec3& v) {
  CMat2 m;
  m(0, 0) = v[2];
  m(1, 1) = -v[2];
  m(0, 1) = cplx(v[0], -v[1]);
  m(1, 0) = cplx(v[0], v[1]);
  return m;
}

// ---------------------------------------------------------------------------

/// A validated two-qubit density matrix: Hermitian (symmetrized on entry),
/// unit trace, positive semidefinite within tolerance. Immutable.
class DensityMatrix {
 public:
  const CMat4& matrix() const { return m_; }

 private:
  explicit DensityMatrix(const CMat4& m) : m_(m) {}
  friend DensityMatrix validate(const CMat4& raw);
  CMat4 m_;
};

/// Checks the density-matrix invariants and returns the validated state.
/// Hermiticity deviation within 1e-9 is symmetrized away; larger deviations,
/// trace errors beyond 1e-9 and eigenvalues below -1e-10 are rejected with
/// the measured deviation in the message.
inline DensityMatrix validate(const CMat4& raw) {
  const double defect = raw.hermiticity_defect();
  if (!(defect <= kHermitianTol)) {
    std::ostringstream os;
    if (!raw.all_finite())
      os << "NotHermitian: matrix has non-finite entries";
    else
      os << "NotHermitian: max |m - m†| = " << defect << " exceeds " << kHermitianTol;
    throw NotHermitianError(os.str());
  }

  CMat4 m;
  for (int i = 0; i < 4; ++i) {
    m(i, i) = raw(i, i).real();
    for (int j = i + 1; j < 4; ++j) {
      const cplx z = 0.5 * (raw(i, j) + std::conj(raw(j, i)));
      m(i, j) = z;
      m(j, i) = std::conj(z);
    }
  }

  const double trace_dev = std::abs(m.trace() - cplx(1.0));
  if (!(trace_dev <= kTraceTol)) {
    std::ostringstream os;
    os << "TraceNotOne: |Tr - 1| = " << trace_dev << " exceeds " << kTraceTol;
    throw TraceNotOneError(os.str());
  }

  const Spectrum<4> s = eig_hermitian(m);
  const double min_eig = s.eigenvalues[3];
  if (!(min_eig >= -kEigClipTol)) {
    std::ostringstream os;
    os << "NotPSD: minimum eigenvalue " << min_eig << " below " << -kEigClipTol;
    throw NotPsdError(os.str());
  }

  return DensityMatrix(m);
}

// ---------------------------------------------------------------------------
// Hilbert-Schmidt (Bloch) decomposition
//   rho = (1/4)(I⊗I + Σ r_i σ_i⊗I + Σ s_i I⊗σ_i + Σ c_ij σ_i⊗σ_j).

struct BlochForm {
  Vec3 r{};  // first-qubit Bloch vector
  Vec3 s{};  // second-qubit Bloch vector
  Mat3 c;    // correlation matrix c_ij = Tr(rho σ_i⊗σ_j)
};

namespace detail {

inline double real_trace_product(const CMat4& rho, const CMat4& op) {
  cplx t = 0.0;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) t += rho(a, b) * op(b, a);
  if (std::abs(t.imag()) > kImagDiscardTol) {
    std::ostringstream os;
    os << "trace of rho * observable has imaginary part " << t.imag();
    throw Error(os.str());
  }
  return t.real();
}

}  // namespace detail

inline BlochForm bloch_decompose(const DensityMatrix& rho) {
  const CMat4& m = rho.matrix();
  const CMat2 eye = CMat2::identity();
  BlochForm b;
  for (int i = 0; i < 3; ++i) {
    b.r[i] = detail::real_trace_product(m, kron(pauli(i), eye));
    b.s[i] = detail::real_trace_product(m, kron(eye, pauli(i)));
    for (int j = 0; j < 3; ++j) b.c(i, j) = detail::real_trace_product(m, kron(pauli(i), pauli(j)));
  }
  return b;
}

/// Rebuilds the state from its Bloch form; rejects unphysical inputs
/// (NotPSD) through validation.
inline DensityMatrix reconstruct(const BlochForm& b) {
  const CMat2 eye = CMat2::identity();
  CMat4 m = CMat4::identity();
  for (int i = 0; i < 3; ++i) {
    m += b.r[i] * kron(pauli(i), eye);
    m += b.s[i] * kron(eye, pauli(i));
    for (int j = 0; j < 3; ++j) m += b.c(i, j) * kron(pauli(i), pauli(j));
  }
  m *= 0.25;
  return validate(m);
}

/// Tr(rho²), computed as Σ|rho_ij|² (exact real for Hermitian input).
inline double purity(const DensityMatrix& rho) {
  const CMat4& m = rho.matrix();
  double p = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) p += std::norm(m(i, j));
  return p;
}

// ---------------------------------------------------------------------------
// Named one-parameter families.

namespace detail {

inline void check_param(double x, double lo, double hi, const char* what) {
  if (!(x >= lo && x <= hi)) {
    std::ostringstream os;
    os << "ParamOutOfRange: " << what << " = " << x << " outside [" << lo << ", " << hi << "]";
    throw ParamOutOfRangeError(os.str());
  }
}

}  // namespace detail

/// Maximally entangled mixed state, parameter p in [0,1]:
/// diag(p/2, 1-p, 0, p/2) with -p/2 in the outer corners.
inline DensityMatrix mems(double p) {
  detail::check_param(p, 0.0, 1.0, "p");
  CMat4 m;
  m(0, 0) = 0.5 * p;
  m(1, 1) = 1.0 - p;
  m(3, 3) = 0.5 * p;
  m(0, 3) = -0.5 * p;
  m(3, 0) = -0.5 * p;
  return validate(m);
}

/// Werner family, parameter r in [0,1]: mixture of the Bell state
/// (|00>+|11>)/sqrt(2) with the maximally mixed state.
inline DensityMatrix werner(double r) {
  detail::check_param(r, 0.0, 1.0, "r");
  CMat4 m;
  m(0, 0) = 0.25 * (1.0 + r);
  m(1, 1) = 0.25 * (1.0 - r);
  m(2, 2) = 0.25 * (1.0 - r);
  m(3, 3) = 0.25 * (1.0 + r);
  m(0, 3) = 0.5 * r;
  m(3, 0) = 0.5 * r;
  return validate(m);
}

/// Rank-1 projector |ψ><ψ|; the amplitude vector is normalized internally.
inline DensityMatrix pure_state(const std::array<cplx, 4>& amplitudes) {
  double nrm2 = 0.0;
  for (const cplx& a : amplitudes) nrm2 += std::norm(a);
  if (!(nrm2 > 0.0)) throw ZeroVectorError("pure_state: amplitude vector has zero norm");

  CMat4 m;
  for (int i = 0; i < 4; ++i) {
    m(i, i) = std::norm(amplitudes[i]) / nrm2;
    for (int j = i + 1; j < 4; ++j) {
      const cplx z = amplitudes[i] * std::conj(amplitudes[j]) / nrm2;
      m(i, j) = z;
      m(j, i) = std::conj(z);
    }
  }
  return validate(m);
}

/// Product state ½(I + a·σ) ⊗ ½(I + b·σ) for Bloch vectors inside the ball.
inline DensityMatrix product_state(const Vec3& a, const Vec3& b) {
  for (const auto* v : {&a, &b}) {
    const double n = norm(*v);
    if (!(n <= 1.0 + 1e-12)) {
      std::ostringstream os;
      os << "BlochOutOfBall: |v| = " << n << " exceeds 1";
      throw BlochOutOfBallError(os.str());
    }
  }
  const CMat2 eye = CMat2::identity();
  const CMat2 qa = 0.5 * (eye + pauli_dot(a));
  const CMat2 qb = 0.5 * (eye + pauli_dot(b));
  return validate(kron(qa, qb));
}

// ---------------------------------------------------------------------------
// Random states (Ginibre-induced, Hilbert-Schmidt measure at rank 4).

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Seed for sample `index` of a run with the given master seed. Counter-based
/// so parallel and serial evaluation orders agree.
inline std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index) {
  return detail::splitmix64(master ^ detail::splitmix64(index));
}

/// Deterministic standard-normal stream: mt19937_64 + explicit Box-Muller,
/// identical across platforms (no implementation-defined distributions).
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : gen_(seed) {}

  double uniform_open01() {
    // in (0,1]: 53 random bits, shifted off zero
    return static_cast<double>((gen_() >> 11) + 1) * 0x1.0p-53;
  }

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_open01();
    const double u2 = uniform_open01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * 3.141592653589793238462643383279502884 * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

  cplx next_complex() {
    const double re = next();
    const double im = next();
    return cplx(re, im);
  }

  /// Uniform direction on the unit sphere.
  Vec3 next_unit_vector() {
    while (true) {
      Vec3 v{next(), next(), next()};
      const double n = norm(v);
      if (n > 1e-12) return scaled(v, 1.0 / n);
    }
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

/// rho = G G† / Tr(G G†) with G a 4×rank matrix of independent complex
/// normal entries drawn from the seeded stream. Deterministic per (seed, rank).
inline DensityMatrix random_state(std::uint64_t seed, int rank) {
  if (rank < 1 || rank > 4) {
    std::ostringstream os;
    os << "ParamOutOfRange: rank = " << rank << " outside [1, 4]";
    throw ParamOutOfRangeError(os.str());
  }
  NormalStream stream(seed);
  std::array<std::array<cplx, 4>, 4> g{};
  for (int i = 0; i < 4; ++i)
    for (int k = 0; k < rank; ++k) g[i][k] = stream.next_complex();

  CMat4 m;
  for (int i = 0; i < 4; ++i)
    for (int j = i; j < 4; ++j) {
      cplx acc = 0.0;
      for (int k = 0; k < rank; ++k) acc += g[i][k] * std::conj(g[j][k]);
      if (i == j) {
        m(i, i) = acc.real();
      } else {
        m(i, j) = acc;
        m(j, i) = std::conj(acc);
      }
    }
  const double tr = m.trace().real();
  m *= cplx(1.0 / tr);
  return validate(m);
}

// ---------------------------------------------------------------------------
// Families as data, for sweeps and threshold searches.

enum class FamilyName { kMems, kWerner };

struct StateFamily {
  FamilyName name = FamilyName::kMems;
  double lo = 0.0;
  double hi = 1.0;
};

inline StateFamily mems_family() { return {FamilyName::kMems, 0.0, 1.0}; }
inline StateFamily werner_family() { return {FamilyName::kWerner, 0.0, 1.0}; }

inline const char* family_label(FamilyName name) {
  return name == FamilyName::kMems ? "mems" : "werner";
}

inline StateFamily family_by_name(std::string_view name) {
  if (name == "mems") return mems_family();
  if (name == "werner") return werner_family();
  throw ParseError("unknown family '" + std::string(name) + "', expected mems or werner");
}

inline DensityMatrix make_state(const StateFamily& family, double param) {
  detail::check_param(param, family.lo, family.hi, "parameter");
  return family.name == FamilyName::kMems ? mems(param) : werner(param);
}

// ---------------------------------------------------------------------------
// State JSON format: {"re": 4x4 row-major, "im": 4x4 row-major}.

inline nlohmann::json state_to_json(const DensityMatrix& rho) {
  nlohmann::json re = nlohmann::json::array();
  nlohmann::json im = nlohmann::json::array();
  for (int i = 0; i < 4; ++i) {
    nlohmann::json re_row = nlohmann::json::array();
    nlohmann::json im_row = nlohmann::json::array();
    for (int j = 0; j < 4; ++j) {
      re_row.push_back(rho.matrix()(i, j).real());
      im_row.push_back(rho.matrix()(i, j).imag());
    }
    re.push_back(re_row);
    im.push_back(im_row);
  }
  return {{"re", re}, {"im", im}};
}

namespace detail {

inline void fill_part_from_json(const nlohmann::json& j, const char* field, bool imag_part,
                                CMat4& m) {
  if (!j.contains(field))
    throw ParseError(std::string("state JSON: missing field \"") + field + "\"");
  const nlohmann::json& part = j.at(field);
  if (!part.is_array() || part.size() != 4) {
    std::ostringstream os;
    os << "state JSON: field \"" << field << "\" must be an array of 4 rows";
    throw ParseError(os.str());
  }
  for (int i = 0; i < 4; ++i) {
    const nlohmann::json& row = part.at(static_cast<std::size_t>(i));
    if (!row.is_array() || row.size() != 4) {
      std::ostringstream os;
      os << "state JSON: field \"" << field << "\" row " << i << " must have 4 entries";
      throw ParseError(os.str());
    }
    for (int k = 0; k < 4; ++k) {
      const nlohmann::json& cell = row.at(static_cast<std::size_t>(k));
      if (!cell.is_number()) {
        std::ostringstream os;
        os << "state JSON: field \"" << field << "\" entry (" << i << "," << k
           << ") is not a number";
        throw ParseError(os.str());
      }
      const double v = cell.get<double>();
      if (!std::isfinite(v)) {
        std::ostringstream os;
        os << "state JSON: field \"" << field << "\" entry (" << i << "," << k
           << ") is not finite";
        throw ParseError(os.str());
      }
      cplx& e = m(i, k);
      e = imag_part ? cplx(e.real(), v) : cplx(v, e.imag());
    }
  }
}

}  // namespace detail

/// Parses the raw matrix; shape violations raise ParseError naming the field.
inline CMat4 state_matrix_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("state JSON: top level must be an object");
  CMat4 m;
  detail::fill_part_from_json(j, "re", false, m);
  detail::fill_part_from_json(j, "im", true, m);
  return m;
}

inline DensityMatrix state_from_json(const nlohmann::json& j) {
  return validate(state_matrix_from_json(j));
}

inline DensityMatrix load_state_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileNotFoundError("cannot open state file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("state JSON: " + std::string(e.what()));
  }
  return state_from_json(j);
}

}  // namespace qent
