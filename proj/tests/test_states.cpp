#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "qent/states.hpp"
#include "test_support.hpp"

using namespace qent;

TEST_CASE("validate: maximally mixed state passes") {
  const DensityMatrix rho = validate(0.25 * CMat4::identity());
  REQUIRE(std::abs(rho.matrix().trace() - cplx(1.0)) <= 1e-15);
}

TEST_CASE("validate: names the violated invariant") {
  CMat4 indefinite;
  indefinite(0, 0) = 0.5;
  indefinite(1, 1) = 0.6;
  indefinite(3, 3) = -0.1;
  REQUIRE_THROWS_AS(validate(indefinite), NotPsdError);
  REQUIRE_THROWS_WITH(validate(indefinite), Catch::Matchers::ContainsSubstring("NotPSD"));

  CMat4 wrong_trace;
  for (int i = 0; i < 4; ++i) wrong_trace(i, i) = 0.3;
  REQUIRE_THROWS_AS(validate(wrong_trace), TraceNotOneError);

  CMat4 skew = 0.25 * CMat4::identity();
  skew(0, 1) = 0.1;  // missing conjugate partner
  REQUIRE_THROWS_AS(validate(skew), NotHermitianError);
}

TEST_CASE("validate: accepts the MEMS matrix at p = 0.3") {
  CMat4 m;
  m(0, 0) = 0.15;
  m(1, 1) = 0.7;
  m(3, 3) = 0.15;
  m(0, 3) = -0.15;
  m(3, 0) = -0.15;
  REQUIRE_NOTHROW(validate(m));
}

TEST_CASE("bloch_decompose: MEMS correlation matrix is diag(-p, p, 2p-1)") {
  for (int k = 0; k <= 10; ++k) {
    const double p = 0.1 * k;
    const BlochForm b = bloch_decompose(mems(p));
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const double expected = (i != j) ? 0.0 : (i == 0 ? -p : (i == 1 ? p : 2.0 * p - 1.0));
        REQUIRE(std::abs(b.c(i, j) - expected) <= 1e-12);
      }
    REQUIRE(std::abs(b.r[2] - (1.0 - p)) <= 1e-12);
    REQUIRE(std::abs(b.s[2] - (p - 1.0)) <= 1e-12);
    REQUIRE(std::abs(b.r[0]) + std::abs(b.r[1]) + std::abs(b.s[0]) + std::abs(b.s[1]) <= 1e-12);
  }
}

TEST_CASE("bloch_decompose: maximally mixed state has vanishing Bloch data") {
  const BlochForm b = bloch_decompose(validate(0.25 * CMat4::identity()));
  for (int i = 0; i < 3; ++i) {
    REQUIRE(b.r[i] == 0.0);
    REQUIRE(b.s[i] == 0.0);
    for (int j = 0; j < 3; ++j) REQUIRE(b.c(i, j) == 0.0);
  }
}

TEST_CASE("bloch_decompose: Werner(1) against entrywise trace evaluation") {
  const DensityMatrix rho = werner(1.0);
  const BlochForm b = bloch_decompose(rho);
  // independent route: explicit sum over matrix entries of rho (σ_i ⊗ σ_j)
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const CMat4 op = kron(pauli(i), pauli(j));
      cplx tr = 0.0;
      for (int a = 0; a < 4; ++a)
        for (int c = 0; c < 4; ++c) tr += rho.matrix()(a, c) * op(c, a);
      REQUIRE(std::abs(b.c(i, j) - tr.real()) <= 1e-14);
      const double expected = (i != j) ? 0.0 : (i == 1 ? -1.0 : 1.0);
      REQUIRE(std::abs(b.c(i, j) - expected) <= 1e-12);
    }
}

TEST_CASE("reconstruct: zero Bloch data gives the maximally mixed state") {
  const DensityMatrix rho = reconstruct(BlochForm{});
  REQUIRE(max_abs_diff(rho.matrix(), 0.25 * CMat4::identity()) <= 1e-15);
}

TEST_CASE("reconstruct: round-trips the families and random states to 1e-12") {
  REQUIRE(max_abs_diff(reconstruct(bloch_decompose(mems(0.7))).matrix(), mems(0.7).matrix()) <=
          1e-12);
  NormalStream stream(5);
  for (int trial = 0; trial < 100; ++trial) {
    const DensityMatrix rho = testsup::random_density(stream);
    REQUIRE(max_abs_diff(reconstruct(bloch_decompose(rho)).matrix(), rho.matrix()) <= 1e-12);
  }
}

TEST_CASE("reconstruct: Bloch poles give |00><00|") {
  BlochForm b;
  b.r = {0.0, 0.0, 1.0};
  b.s = {0.0, 0.0, 1.0};
  b.c(2, 2) = 1.0;
  const DensityMatrix rho = reconstruct(b);
  CMat4 expected;
  expected(0, 0) = 1.0;
  REQUIRE(max_abs_diff(rho.matrix(), expected) <= 1e-15);
}

TEST_CASE("reconstruct: rejects unphysical Bloch data") {
  BlochForm b;  // c = diag(1,1,1) is inside the cited eigenvalue bound yet unphysical
  for (int i = 0; i < 3; ++i) b.c(i, i) = 1.0;
  REQUIRE_THROWS_AS(reconstruct(b), NotPsdError);
}

TEST_CASE("purity: known values and the Bloch-sum identity") {
  REQUIRE(purity(validate(0.25 * CMat4::identity())) == 0.25);
  REQUIRE(std::abs(purity(pure_state({0.3, cplx(0.1, 0.7), -0.2, cplx(0.0, 0.4)})) - 1.0) <=
          1e-12);
  REQUIRE(std::abs(purity(mems(0.5)) - 0.5) <= 1e-12);

  NormalStream stream(9);
  for (int trial = 0; trial < 100; ++trial) {
    const DensityMatrix rho = testsup::random_density(stream);
    const BlochForm b = bloch_decompose(rho);
    const double bloch_sum = 0.25 * (1.0 + dot(b.r, b.r) + dot(b.s, b.s) + b.c.sum_sq());
    REQUIRE(std::abs(purity(rho) - bloch_sum) <= 1e-12);
  }
}

TEST_CASE("mems: endpoint and midpoint matrices") {
  const CMat4 at0 = mems(0.0).matrix();
  CMat4 sep;
  sep(1, 1) = 1.0;
  REQUIRE(max_abs_diff(at0, sep) == 0.0);

  const CMat4 at1 = mems(1.0).matrix();
  REQUIRE(at1(0, 3) == cplx(-0.5));
  REQUIRE(std::abs(purity(mems(1.0)) - 1.0) <= 1e-12);

  const CMat4 half = mems(0.5).matrix();
  REQUIRE(half(0, 0) == cplx(0.25));
  REQUIRE(half(1, 1) == cplx(0.5));
  REQUIRE(half(2, 2) == cplx(0.0));
  REQUIRE(half(3, 3) == cplx(0.25));

  REQUIRE_THROWS_AS(mems(-0.01), ParamOutOfRangeError);
  REQUIRE_THROWS_AS(mems(1.01), ParamOutOfRangeError);
}

TEST_CASE("werner: endpoint and midpoint matrices") {
  REQUIRE(max_abs_diff(werner(0.0).matrix(), 0.25 * CMat4::identity()) == 0.0);

  const CMat4 bell = werner(1.0).matrix();
  REQUIRE(bell(0, 3) == cplx(0.5));
  REQUIRE(std::abs(purity(werner(1.0)) - 1.0) <= 1e-12);

  const CMat4 half = werner(0.5).matrix();
  REQUIRE(half(0, 0) == cplx(0.375));
  REQUIRE(half(1, 1) == cplx(0.125));
  REQUIRE(half(2, 2) == cplx(0.125));
  REQUIRE(half(3, 3) == cplx(0.375));
  REQUIRE(half(0, 3) == cplx(0.25));

  REQUIRE_THROWS_AS(werner(1.5), ParamOutOfRangeError);
}

TEST_CASE("pure_state: projectors and normalization") {
  CMat4 zerozero;
  zerozero(0, 0) = 1.0;
  REQUIRE(max_abs_diff(pure_state({1.0, 0.0, 0.0, 0.0}).matrix(), zerozero) == 0.0);

  // (1,0,0,-1)/sqrt(2), un-normalized on purpose
  REQUIRE(max_abs_diff(pure_state({2.0, 0.0, 0.0, -2.0}).matrix(), mems(1.0).matrix()) <= 1e-15);

  const BlochForm b = bloch_decompose(pure_state({0.5, 0.5, 0.5, 0.5}));
  REQUIRE(std::abs(b.r[0] - 1.0) <= 1e-12);
  REQUIRE(std::abs(b.s[0] - 1.0) <= 1e-12);

  REQUIRE_THROWS_AS(pure_state({0.0, 0.0, 0.0, 0.0}), ZeroVectorError);
}

TEST_CASE("product_state: poles, center, and the outer-product correlation law") {
  CMat4 zerozero;
  zerozero(0, 0) = 1.0;
  REQUIRE(max_abs_diff(product_state({0, 0, 1}, {0, 0, 1}).matrix(), zerozero) == 0.0);
  REQUIRE(max_abs_diff(product_state({0, 0, 0}, {0, 0, 0}).matrix(),
                       0.25 * CMat4::identity()) == 0.0);
  REQUIRE_THROWS_AS(product_state({0, 0, 1.2}, {0, 0, 1}), BlochOutOfBallError);

  NormalStream stream(13);
  for (int trial = 0; trial < 100; ++trial) {
    const double la = stream.uniform_open01();
    const double lb = stream.uniform_open01();
    const Vec3 a = scaled(stream.next_unit_vector(), la);
    const Vec3 b = scaled(stream.next_unit_vector(), lb);
    const BlochForm bloch = bloch_decompose(product_state(a, b));
    double defect = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        defect = std::max(defect, std::abs(bloch.c(i, j) - bloch.r[i] * bloch.s[j]));
    REQUIRE(defect <= 1e-12);
    REQUIRE(std::abs(bloch.c.sum_sq() - dot(bloch.r, bloch.r) * dot(bloch.s, bloch.s)) <= 1e-12);
  }
}

TEST_CASE("random_state: deterministic, rank-aware, correct mean purity") {
  const DensityMatrix a = random_state(99, 4);
  const DensityMatrix b = random_state(99, 4);
  REQUIRE(max_abs_diff(a.matrix(), b.matrix()) == 0.0);
  REQUIRE(max_abs_diff(a.matrix(), random_state(100, 4).matrix()) > 1e-3);

  REQUIRE(std::abs(purity(random_state(1, 1)) - 1.0) <= 1e-12);
  REQUIRE_THROWS_AS(random_state(1, 0), ParamOutOfRangeError);
  REQUIRE_THROWS_AS(random_state(1, 5), ParamOutOfRangeError);

  // Hilbert-Schmidt ensemble mean purity: E[Tr rho^2] = 8/17 ~ 0.4706 at
  // dim 4, rank 4. Band frozen from an independent straightforward sampler
  // (see test_support.hpp checks below); spec-level bound is [0.3, 0.5].
  double mean = 0.0;
  const int n = 10000;
  for (int k = 0; k < n; ++k) mean += purity(random_state(stream_seed(2024, k), 4));
  mean /= n;
  REQUIRE(mean > 0.3);
  REQUIRE(mean < 0.5);
  REQUIRE(std::abs(mean - 8.0 / 17.0) <= 0.003);  // observed 3 sigma ~ 0.0026

  // independent sampler agrees within the combined Monte Carlo band
  NormalStream stream(505);
  double oracle_mean = 0.0;
  for (int k = 0; k < n; ++k) oracle_mean += purity(testsup::random_density(stream));
  oracle_mean /= n;
  REQUIRE(std::abs(mean - oracle_mean) <= 0.006);
}

TEST_CASE("state JSON: round-trip and shape rejection naming the field") {
  NormalStream stream(17);
  const DensityMatrix rho = testsup::random_density(stream);
  const DensityMatrix back = state_from_json(state_to_json(rho));
  REQUIRE(max_abs_diff(rho.matrix(), back.matrix()) == 0.0);

  nlohmann::json j = state_to_json(rho);
  j.erase("im");
  REQUIRE_THROWS_WITH(state_from_json(j), Catch::Matchers::ContainsSubstring("\"im\""));

  nlohmann::json short_row = state_to_json(rho);
  short_row["re"][2] = {1.0, 2.0};
  REQUIRE_THROWS_WITH(state_from_json(short_row),
                      Catch::Matchers::ContainsSubstring("row 2"));

  nlohmann::json bad_cell = state_to_json(rho);
  bad_cell["re"][0][0] = "x";
  REQUIRE_THROWS_AS(state_from_json(bad_cell), ParseError);

  REQUIRE_THROWS_AS(state_from_json(nlohmann::json::array()), ParseError);
}

TEST_CASE("stream_seed: distinct indices give distinct streams") {
  REQUIRE(stream_seed(42, 0) != stream_seed(42, 1));
  REQUIRE(stream_seed(42, 0) != stream_seed(43, 0));
  REQUIRE(stream_seed(42, 7) == stream_seed(42, 7));
}

TEST_CASE("bloch forms of physical states respect the ball and spectral bounds") {
  NormalStream stream(19);
  for (int trial = 0; trial < 300; ++trial) {
    const DensityMatrix rho =
        (trial % 3 == 0) ? testsup::random_density(stream, 1 + trial % 4)
                         : testsup::random_density(stream);
    const BlochForm b = bloch_decompose(rho);
    REQUIRE(norm(b.r) <= 1.0 + 1e-9);
    REQUIRE(norm(b.s) <= 1.0 + 1e-9);
    const SymSpectrum3 s = eig_sym3(SymMat3::gram(b.c));
    REQUIRE(s.eigenvalues[0] <= 1.0 + 1e-9);
    const double pur = purity(rho);
    REQUIRE(pur >= 0.25);
    REQUIRE(pur <= 1.0 + 1e-12);
  }
}
