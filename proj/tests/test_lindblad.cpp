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
#include <wvsim/channels.hpp>
#include <wvsim/lindblad.hpp>

#include "test_util.hpp"

using namespace wvsim;

namespace {

Matrix trace_out_probe(const Vector& joint_vec, Eigen::Index d, Eigen::Index n) {
  const Matrix rho = unvec(joint_vec, d * n);
  Matrix sys = Matrix::Zero(d, d);
  for (Eigen::Index s = 0; s < d; ++s) {
    for (Eigen::Index sp = 0; sp < d; ++sp) {
      for (Eigen::Index q = 0; q < n; ++q) {
        sys(s, sp) += rho(s * n + q, sp * n + q);
      }
    }
  }
  return sys;
}

Vector joint_vec_from(const DensityMatrix& sys, const Vector& probe_state) {
  const Matrix joint =
      Eigen::kroneckerProduct(sys.matrix(), (probe_state * probe_state.adjoint()).eval());
  return vec(joint);
}

}  // namespace

TEST_CASE("discretized probe momentum operator") {
  REQUIRE_THROWS_AS(DiscretizedProbe(12, 10.0), Error);
  const DiscretizedProbe probe(64, 10.0);
  REQUIRE(hermitian_deviation(probe.momentum()) <= 1e-10);

  // Plane waves are exact eigenvectors.
  const double k1 = M_PI / probe.half_width();
  Vector wave(probe.points());
  for (Eigen::Index j = 0; j < probe.points(); ++j) {
    wave(j) = std::polar(1.0, k1 * probe.position(j));
  }
  REQUIRE((probe.momentum() * wave - k1 * wave).norm() <= 1e-10 * wave.norm());

  // Spectral derivative of a well-contained Gaussian: P phi = -i phi'.
  const Vector phi = probe.gaussian_state(1.0);
  Vector expected(probe.points());
  for (Eigen::Index j = 0; j < probe.points(); ++j) {
    const double x = probe.position(j);
    expected(j) = Complex(0, 1) * (x / 2.0) * phi(j);
  }
  REQUIRE((probe.momentum() * phi - expected).norm() <= 1e-8);
}

TEST_CASE("liouvillian validates rates and preserves the trace") {
  const DiscretizedProbe probe(8, 10.0);
  const HermitianOperator a(pauli_x());
  REQUIRE_THROWS_AS(
      Liouvillian(a, probe, {{pauli_z(), 1.5}}, 1.0, 1.0), RateOutOfRange);
  REQUIRE_THROWS_AS(
      Liouvillian(a, probe, {{pauli_z(), 0.0}}, 1.0, 1.0), RateOutOfRange);
  REQUIRE_THROWS_AS(
      Liouvillian(a, probe, {{pauli_z(), 0.5}, {pauli_x(), 0.8}}, 1.0, 1.0),
      RateOutOfRange);

  const Liouvillian liouv(a, probe, {{pauli_z(), 1.0}, {pauli_x(), 0.25}}, 0.7, 0.4);
  const Vector id_vec = vec(identity(liouv.joint_dim()));
  REQUIRE(liouv.apply_hamiltonian_part_adjoint(id_vec).norm() <= 1e-8);
  REQUIRE(liouv.apply_dissipator_part_adjoint(id_vec).norm() <= 1e-8);
}

TEST_CASE("structured application matches the dense superoperator") {
  const DiscretizedProbe probe(4, 5.0);
  const HermitianOperator a(pauli_x());
  const Liouvillian liouv(a, probe, {{pauli_z(), 1.0}}, 0.8, 0.3);
  Rng rng(501);
  const Matrix lh = liouv.hamiltonian_part_matrix();
  const Matrix ll = liouv.dissipator_part_matrix();
  const Matrix full = liouv.matrix();
  for (int i = 0; i < 5; ++i) {
    const Vector v = ginibre(liouv.super_dim(), 1, rng).col(0);
    REQUIRE((lh * v - liouv.apply_hamiltonian_part(v)).norm() <= 1e-10 * v.norm());
    REQUIRE((ll * v - liouv.apply_dissipator_part(v)).norm() <= 1e-10 * v.norm());
    REQUIRE((full * v - liouv.apply_full(v)).norm() <= 1e-10 * v.norm());
    REQUIRE((lh.adjoint() * v - liouv.apply_hamiltonian_part_adjoint(v)).norm() <=
            1e-10 * v.norm());
    REQUIRE((ll.adjoint() * v - liouv.apply_dissipator_part_adjoint(v)).norm() <=
            1e-10 * v.norm());
  }
}

TEST_CASE("noiseless propagation is unitary") {
  const DiscretizedProbe probe(8, 10.0);
  const HermitianOperator a(pauli_x());
  const Liouvillian liouv(a, probe, {}, 0.9, 0.0);
  Rng rng(511);
  const DensityMatrix sys = random_state(2, StateKind::Pure, rng);
  const Vector phi = probe.gaussian_state(1.0);
  const Vector v0 = joint_vec_from(sys, phi);

  REQUIRE((propagate(liouv, v0, 0.0) - v0).norm() == 0.0);

  const double t = 0.37;
  const Vector vt = propagate(liouv, v0, t);
  // Direct unitary oracle from the eigendecomposition of H.
  Eigen::SelfAdjointEigenSolver<Matrix> es(liouv.joint_hamiltonian());
  const Matrix u = es.eigenvectors() *
                   (Complex(0, -1) * 0.9 * t * es.eigenvalues().array().cast<Complex>())
                       .exp()
                       .matrix()
                       .asDiagonal() *
                   es.eigenvectors().adjoint();
  const Matrix expected = u * unvec(v0, liouv.joint_dim()) * u.adjoint();
  REQUIRE(max_abs(unvec(vt, liouv.joint_dim()) - expected) <= 1e-8);
}

TEST_CASE("pure dephasing damps coherences at the closed-form rate") {
  const DiscretizedProbe probe(8, 10.0);
  const HermitianOperator a(pauli_x());
  const double gamma_tilde = 0.4;
  const Liouvillian liouv(a, probe, {{pauli_z(), 1.0}}, 0.0, gamma_tilde);
  const DensityMatrix sys = density_from_pure(ket_plus());
  const Vector v0 = joint_vec_from(sys, probe.gaussian_state(1.0));
  Vector v = v0;
  const double dt = 0.25;
  for (int step = 1; step <= 10; ++step) {
    v = propagate(liouv, v, dt);
    const Matrix sys_t = trace_out_probe(v, 2, probe.points());
    REQUIRE(std::abs(sys_t.trace().real() - 1.0) <= 1e-8);
    const double expected = 0.5 * std::exp(-2.0 * gamma_tilde * dt * step);
    REQUIRE(std::abs(sys_t(0, 1) - Complex(expected, 0)) <= 1e-8);
  }
}

TEST_CASE("dissipator exponential equals the phase-damping Kraus channel") {
  const DiscretizedProbe probe(8, 10.0);
  const HermitianOperator a(pauli_x());
  const double gamma_tilde = 0.3, t = 0.8;
  const Liouvillian liouv(a, probe, {{pauli_z(), 1.0}}, 0.0, gamma_tilde);
  Rng rng(521);
  const DensityMatrix sys = random_state(2, StateKind::Mixed, rng);
  const Vector v0 = joint_vec_from(sys, probe.gaussian_state(1.0));
  const Vector vt = propagate_factorized(liouv, v0, t);

  // Z dephasing at rate gamma for time t scales coherences by exp(-2 gamma t),
  // which is phase damping at gamma_pd = 1 - exp(-4 gamma t).
  const double gamma_pd = 1.0 - std::exp(-4.0 * gamma_tilde * t);
  const KrausChannel pd = build_channel(ChannelSpec::phase_damping(), gamma_pd);
  const Matrix expected = pd.apply_to_matrix(sys.matrix());
  REQUIRE(max_abs(trace_out_probe(vt, 2, probe.points()) - expected) <= 1e-8);
}

TEST_CASE("factorization is exact for commuting parts") {
  // Diagonal probe coupling surrogate: A = Z with Z dephasing keeps both
  // generators diagonal, so the exponentials factor exactly.
  const Eigen::Index n = 8;
  Matrix diag_coupling = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) diag_coupling(j, j) = -2.0 + 0.5 * double(j);
  const Liouvillian liouv(HermitianOperator(pauli_z()), diag_coupling,
                          {{pauli_z(), 1.0}}, 1.0, 1.0);
  const auto [error, predicted] = factorization_error(liouv, 0.05);
  REQUIRE(error <= 1e-8);
  REQUIRE(predicted <= 1e-8);
  const auto [g_bound, gamma_bound] = validity_margins(liouv);
  REQUIRE(std::isinf(g_bound));
  REQUIRE(std::isinf(gamma_bound));

  // No dissipator at all: the product is the full exponential.
  const DiscretizedProbe probe(8, 10.0);
  const Liouvillian ham_only(HermitianOperator(pauli_x()), probe, {}, 1.0, 0.0);
  const auto [err2, pred2] = factorization_error(ham_only, 0.05);
  REQUIRE(err2 <= 1e-10);
  REQUIRE(pred2 == 0.0);
}

TEST_CASE("factorization error tracks the commutator prediction") {
  const DiscretizedProbe probe(16, 10.0);
  const HermitianOperator a(pauli_x());
  const double t = 0.01;
  const Liouvillian liouv(a, probe, {{pauli_z(), 1.0}}, 1.0, 1.0);
  const auto [error, predicted] = factorization_error(liouv, t);
  REQUIRE(error > 0.0);
  REQUIRE(std::abs(error - predicted) <= 0.2 * predicted);

  // Halving both strengths quarters the error.
  const Liouvillian half(a, probe, {{pauli_z(), 1.0}}, 0.5, 0.5);
  const auto [error_half, predicted_half] = factorization_error(half, t);
  const double ratio = error_half / error;
  REQUIRE(ratio >= 0.2);
  REQUIRE(ratio <= 0.3);
  REQUIRE(predicted_half == Catch::Approx(0.25 * predicted).epsilon(1e-6));
}

TEST_CASE("validity margins match a dense SVD oracle") {
  const DiscretizedProbe probe(4, 5.0);
  const HermitianOperator a(pauli_x());
  const Liouvillian liouv(a, probe, {{pauli_z(), 1.0}}, 1.0, 1.0);
  const Matrix lh = liouv.hamiltonian_part_matrix();
  const Matrix ll = liouv.dissipator_part_matrix();
  const Matrix comm = ll * lh - lh * ll;
  const double h_norm = Eigen::JacobiSVD<Matrix>(lh).singularValues()(0);
  const double l_norm = Eigen::JacobiSVD<Matrix>(ll).singularValues()(0);
  const double c_norm = Eigen::JacobiSVD<Matrix>(comm).singularValues()(0);
  const auto [g_bound, gamma_bound] = validity_margins(liouv);
  REQUIRE(g_bound == Catch::Approx(2.0 * l_norm / c_norm).epsilon(1e-3));
  REQUIRE(gamma_bound == Catch::Approx(2.0 * h_norm / c_norm).epsilon(1e-3));
  REQUIRE(std::isfinite(g_bound));
  REQUIRE(g_bound > 0.0);
}

TEST_CASE("factorized evolution reproduces full Lindblad weak values") {
  const DiscretizedProbe probe(32, 10.0);
  const HermitianOperator a(pauli_x());
  const PureState pre(test::ket({std::cos(0.5), std::sin(0.5)}));
  const PureState post(test::ket({std::cos(1.1), std::sin(1.1)}));
  const Vector phi = probe.gaussian_state(1.0);
  const Vector v0 = joint_vec_from(density_from_pure(pre), phi);
  const double t = 1.0;

  auto estimate_gap = [&](double g_tilde, double gamma_tilde) {
    const Liouvillian liouv(a, probe, {{pauli_z(), 1.0}}, g_tilde, gamma_tilde);
    const double full =
        postselected_pointer_mean(propagate(liouv, v0, t), post, probe);
    const double fact =
        postselected_pointer_mean(propagate_factorized(liouv, v0, t), post, probe);
    return std::abs(full - fact);
  };

  const double g1 = 0.02, gamma1 = 0.02;
  const double gap1 = estimate_gap(g1, gamma1);
  const double c1 = gap1 / (g1 * gamma1 * t * t);
  const double gap2 = estimate_gap(0.5 * g1, 0.5 * gamma1);
  const double c2 = gap2 / (0.25 * g1 * gamma1 * t * t);
  REQUIRE(std::abs(c2 - c1) <= 0.5 * std::max(c1, 1e-12));
  REQUIRE(gap1 <= 2.0 * c1 * g1 * gamma1 * t * t + 1e-12);
}
