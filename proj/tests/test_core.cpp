// Copyright 2026 The wvsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <catch2/catch_amalgamated.hpp>
#include <wvsim/core.hpp>

#include "test_util.hpp"

using namespace wvsim;

TEST_CASE("validate_density accepts the maximally mixed qubit") {
  Matrix m(2, 2);
  m << 0.5, 0, 0, 0.5;
  const DensityMatrix rho = validate_density(m, 1e-10);
  REQUIRE(max_abs(rho.matrix() - m) < 1e-14);
}

TEST_CASE("validate_density rejects indefinite and non-unit-trace input") {
  Matrix bad(2, 2);
  bad << 0.5, 0.6, 0.6, 0.5;
  // Characteristic polynomial: eigenvalues 0.5 +- 0.6 = {1.1, -0.1}.
  const auto [lo, hi] = test::eig2x2(bad);
  REQUIRE(lo == Catch::Approx(-0.1).margin(1e-12));
  REQUIRE(hi == Catch::Approx(1.1).margin(1e-12));
  REQUIRE_THROWS_AS(validate_density(bad, 1e-10), NotPositive);

  Matrix off_trace(2, 2);
  off_trace << 1.0, 0, 0, 0.1;
  REQUIRE_THROWS_AS(validate_density(off_trace, 1e-10), TraceNotOne);

  Matrix non_herm(2, 2);
  non_herm << 0.5, 0.2, 0.0, 0.5;
  REQUIRE_THROWS_AS(validate_density(non_herm, 1e-10), NotHermitian);
}

TEST_CASE("validate_density clips tiny negative eigenvalues") {
  Matrix m(2, 2);
  m << 1.0 + 5e-11, 0, 0, -5e-11;
  const DensityMatrix rho = validate_density(m, 1e-10);
  Eigen::SelfAdjointEigenSolver<Matrix> es(rho.matrix());
  REQUIRE(es.eigenvalues().minCoeff() >= 0.0);
  REQUIRE(std::abs(rho.matrix().trace().real() - 1.0) < 1e-12);
}

TEST_CASE("spectral_decompose on Pauli Z and X") {
  const auto sz = spectral_decompose(HermitianOperator(pauli_z()));
  REQUIRE(sz.eigenvalues(0) == Catch::Approx(-1.0));
  REQUIRE(sz.eigenvalues(1) == Catch::Approx(1.0));
  // |1> then |0>, phase-fixed to a real positive leading component.
  REQUIRE(std::abs(sz.eigenvectors(1, 0) - Complex(1, 0)) < 1e-12);
  REQUIRE(std::abs(sz.eigenvectors(0, 1) - Complex(1, 0)) < 1e-12);

  const auto sx = spectral_decompose(HermitianOperator(pauli_x()));
  const double s = 1.0 / std::sqrt(2.0);
  REQUIRE(std::abs(sx.eigenvectors(0, 0) - Complex(s, 0)) < 1e-12);
  REQUIRE(std::abs(sx.eigenvectors(1, 0) - Complex(-s, 0)) < 1e-12);
  REQUIRE(std::abs(sx.eigenvectors(0, 1) - Complex(s, 0)) < 1e-12);
  REQUIRE(std::abs(sx.eigenvectors(1, 1) - Complex(s, 0)) < 1e-12);
}

TEST_CASE("spectral_decompose matches the 2x2 characteristic polynomial") {
  Matrix m(2, 2);
  m << 2.0, Complex(1, -1), Complex(1, 1), 3.0;
  const HermitianOperator a(m);
  const auto sd = spectral_decompose(a);
  const auto [lo, hi] = test::eig2x2(m);
  REQUIRE(sd.eigenvalues(0) == Catch::Approx(lo).margin(1e-12));
  REQUIRE(sd.eigenvalues(1) == Catch::Approx(hi).margin(1e-12));
  REQUIRE(lo == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(hi == Catch::Approx(4.0).margin(1e-12));
  REQUIRE(max_abs(sd.reconstruct() - m) < 1e-10);
}

TEST_CASE("spectral_decompose round trip on random Hermitian matrices") {
  Rng rng(12345);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index dim = 2 + (trial % 5);
    const Matrix m = test::random_hermitian(dim, rng);
    const auto sd = spectral_decompose(HermitianOperator(m));
    REQUIRE(max_abs(sd.reconstruct() - m) < 1e-10 * std::max(1.0, max_abs(m)));
    REQUIRE(max_abs(sd.eigenvectors.adjoint() * sd.eigenvectors -
                    identity(dim)) < 1e-10);
    for (Eigen::Index i = 0; i + 1 < dim; ++i) {
      REQUIRE(sd.eigenvalues(i) <= sd.eigenvalues(i + 1));
    }
  }
}

TEST_CASE("spectral_decompose handles degenerate spectra deterministically") {
  // The identity has one eigenspace; the canonical convention returns e_j.
  const auto sd = spectral_decompose(HermitianOperator(identity(3)));
  REQUIRE(max_abs(sd.eigenvectors - identity(3)) < 1e-12);

  // Projector with a 2-fold degenerate zero eigenvalue.
  Matrix p(3, 3);
  p.setZero();
  p(2, 2) = 1.0;
  const auto sp1 = spectral_decompose(HermitianOperator(p));
  const auto sp2 = spectral_decompose(HermitianOperator(p));
  REQUIRE(max_abs(sp1.eigenvectors - sp2.eigenvectors) == 0.0);
  REQUIRE(max_abs(sp1.reconstruct() - p) < 1e-10);
}

TEST_CASE("haar_unitary is unitary and deterministic") {
  for (Eigen::Index dim : {1, 2, 3, 5}) {
    const Matrix u = haar_unitary(dim, 7);
    REQUIRE(max_abs(u.adjoint() * u - identity(dim)) < 1e-12);
  }
  const Matrix u1 = haar_unitary(4, 99);
  const Matrix u2 = haar_unitary(4, 99);
  REQUIRE(max_abs(u1 - u2) == 0.0);
  // dim=1 draws a unit-modulus scalar.
  REQUIRE(std::abs(std::abs(haar_unitary(1, 3)(0, 0)) - 1.0) < 1e-12);
}

TEST_CASE("haar_unitary first moment matches the Weingarten value 1/2") {
  // E[Tr(U rho U† rho_f)] = 1/2 for pure rho, rho_f on a qubit.
  Rng state_rng(2024);
  const Matrix rho = random_state(2, StateKind::Pure, state_rng).matrix();
  const Matrix rho_f = random_state(2, StateKind::Pure, state_rng).matrix();
  Rng rng(31337);
  const int n = 100000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const Matrix u = haar_unitary(2, rng);
    const double v = (u * rho * u.adjoint() * rho_f).trace().real();
    sum += v;
    sumsq += v * v;
  }
  const double mean = sum / n;
  const double sd = std::sqrt((sumsq / n - mean * mean) / (n - 1.0));
  REQUIRE(std::abs(mean - 0.5) < 3.0 * sd);
}

TEST_CASE("random_state produces valid pure and mixed states") {
  const DensityMatrix pure = random_state(2, StateKind::Pure, 5);
  REQUIRE(pure.purity() == Catch::Approx(1.0).margin(1e-10));

  const DensityMatrix mixed = random_state(2, StateKind::Mixed, 5);
  REQUIRE(mixed.purity() >= 0.5 - 1e-12);
  REQUIRE(mixed.purity() <= 1.0 + 1e-12);

  const DensityMatrix again = random_state(2, StateKind::Mixed, 5);
  REQUIRE(max_abs(mixed.matrix() - again.matrix()) == 0.0);

  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const DensityMatrix rho = random_state(3, StateKind::Mixed, seed);
    REQUIRE_NOTHROW(validate_density(rho.matrix(), 1e-10));
  }
}

TEST_CASE("pure states validate their norm") {
  REQUIRE_THROWS_AS(PureState(test::ket({1.0, 1.0})), InvalidState);
  const PureState plus = PureState::normalized(test::ket({1.0, 1.0}));
  REQUIRE(plus.amplitudes()(0).real() == Catch::Approx(1.0 / std::sqrt(2.0)));
  REQUIRE(max_abs(plus.projector() - 0.5 * (identity(2) + pauli_x())) < 1e-12);
}
