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
#include <wvsim/weak_value.hpp>

#include "test_util.hpp"

using namespace wvsim;

namespace {

DensityMatrix diag_state(double lambda) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = lambda;
  m(1, 1) = 1.0 - lambda;
  return validate_density(m, 1e-12);
}

// Random normalized Pauli weight triple.
std::array<double, 3> random_weights(Rng& rng) {
  double w[3];
  double sum = 0.0;
  for (double& x : w) {
    x = rng.uniform() + 1e-3;
    sum += x;
  }
  return {w[0] / sum, w[1] / sum, w[2] / sum};
}

double fit_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  const std::size_t n = xs.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(xs[i]);
    my += std::log(ys[i]);
  }
  mx /= n;
  my /= n;
  double num = 0, den = 0;
  for (std::size_t i = 0; i < n; ++i) {
    num += (std::log(xs[i]) - mx) * (std::log(ys[i]) - my);
    den += (std::log(xs[i]) - mx) * (std::log(xs[i]) - mx);
  }
  return num / den;
}

}  // namespace

TEST_CASE("weak value reference cases") {
  Rng rng(101);
  for (int i = 0; i < 20; ++i) {
    const HermitianOperator a(test::random_hermitian(2, rng));
    // Diagonal preselection with |0> postselection picks out a11.
    const double lambda = 0.2 + 0.6 * rng.uniform();
    const WeakValue wv0 = weak_value(a, diag_state(lambda), ket_zero());
    REQUIRE(std::abs(wv0.value - a.matrix()(0, 0)) < 1e-12);
    // ... and |1> picks out a22.
    const WeakValue wv1 = weak_value(a, diag_state(lambda), ket_one());
    REQUIRE(std::abs(wv1.value - a.matrix()(1, 1)) < 1e-12);

    // Maximally mixed preselection gives <f|A|f>.
    const PureState f = random_pure_state(2, rng);
    const WeakValue wvm = weak_value(a, maximally_mixed(2), f);
    const Complex expected =
        (f.amplitudes().adjoint() * a.matrix() * f.amplitudes())(0);
    REQUIRE(std::abs(wvm.value - expected) < 1e-12);

    // The identity operator always has weak value one.
    const HermitianOperator id(identity(2));
    const DensityMatrix pre = random_state(2, StateKind::Mixed, rng);
    REQUIRE(std::abs(weak_value(id, pre, f).value - Complex(1, 0)) < 1e-12);
  }
}

TEST_CASE("weak value amplification near orthogonal postselection") {
  const double theta = 0.7853;
  const PureState post(test::ket({std::cos(theta), -std::sin(theta)}));
  const HermitianOperator z(pauli_z());
  const WeakValue wv = weak_value(z, density_from_pure(ket_plus()), post);
  const double expected =
      (std::cos(theta) + std::sin(theta)) / (std::cos(theta) - std::sin(theta));
  REQUIRE(std::abs(wv.value - Complex(expected, 0)) < 1e-8 * std::abs(expected));
  REQUIRE(std::abs(wv.value) > 1e3);  // far outside the spectrum of Z

  REQUIRE_THROWS_AS(weak_value(z, density_from_pure(ket_zero()), ket_one()),
                    OrthogonalStates);
}

TEST_CASE("mixed/mixed weak value matches the trace formula") {
  Rng rng(111);
  for (int i = 0; i < 20; ++i) {
    const HermitianOperator a(test::random_hermitian(2, rng));
    const DensityMatrix pre = random_state(2, StateKind::Mixed, rng);
    const DensityMatrix post = random_state(2, StateKind::Mixed, rng);
    const WeakValue wv = weak_value(a, pre, post);
    const Complex num = (post.matrix() * a.matrix() * pre.matrix()).trace();
    const Complex den = (post.matrix() * pre.matrix()).trace();
    REQUIRE(std::abs(wv.value - num / den) < 1e-13);
    REQUIRE(wv.overlap == Catch::Approx(den.real()));
  }
}

TEST_CASE("noisy weak value") {
  Rng rng(121);
  const HermitianOperator z(pauli_z());

  // gamma = 0 reduces to the noiseless value.
  const DensityMatrix pre = random_state(2, StateKind::Mixed, rng);
  const PureState f = random_pure_state(2, rng);
  const KrausChannel id = build_channel(ChannelSpec::amplitude_damping(), 0.0);
  REQUIRE(std::abs(noisy_weak_value(z, pre, f, id).value -
                   weak_value(z, pre, f).value) < 1e-14);

  // Unital noise leaves the maximally mixed preselection untouched.
  for (double gamma : {0.1, 0.5, 0.9}) {
    const KrausChannel pauli = build_channel(ChannelSpec::pauli(0.2, 0.5, 0.3), gamma);
    REQUIRE(std::abs(noisy_weak_value(z, maximally_mixed(2), f, pauli).value -
                     weak_value(z, maximally_mixed(2), f).value) < 1e-12);
  }

  // Bit flip at gamma = 0.1 on |0><0| with |+> postselection: hand expansion
  // gives E(rho) = diag(0.9, 0.1) and A_w = (0.9 - 0.1) / 1.0 = 0.8.
  const KrausChannel flip = build_channel(ChannelSpec::pauli(1, 0, 0), 0.1);
  const WeakValue noisy =
      noisy_weak_value(z, density_from_pure(ket_zero()), ket_plus(), flip);
  REQUIRE(std::abs(noisy.value - Complex(0.8, 0)) < 1e-13);
}

TEST_CASE("analytic bias vanishes on the Pauli-safe pairs") {
  Rng rng(131);
  Matrix rho1 = Matrix::Zero(2, 2);
  rho1 << 0.5, 0.25, 0.25, 0.5;
  const DensityMatrix pre1 = validate_density(rho1, 1e-12);
  for (int i = 0; i < 20; ++i) {
    const HermitianOperator a(test::random_hermitian(2, rng));
    const auto [wx, wy, wz] = random_weights(rng);
    const ChannelSpec spec = ChannelSpec::pauli(wx, wy, wz);
    REQUIRE(std::abs(bias_first_order_analytic(a, pre1, ket_plus(), spec).delta) < 1e-10);
    REQUIRE(std::abs(bias_first_order_analytic(a, diag_state(1.0), ket_zero(), spec).delta) <
            1e-10);
    REQUIRE(std::abs(bias_first_order_analytic(a, diag_state(0.0), ket_one(), spec).delta) <
            1e-10);
    const PureState f = random_pure_state(2, rng);
    REQUIRE(std::abs(bias_first_order_analytic(a, maximally_mixed(2), f, spec).delta) <
            1e-10);
  }
}

TEST_CASE("analytic bias vanishes for damping-safe pairs") {
  Rng rng(141);
  for (int i = 0; i < 20; ++i) {
    const HermitianOperator a(test::random_hermitian(2, rng));
    const PureState f = random_pure_state(2, rng);
    // |0><0| has rho_12 = rho_22 = 0, so M^ad vanishes.
    const auto bias = bias_first_order_analytic(a, density_from_pure(ket_zero()), f,
                                                ChannelSpec::amplitude_damping());
    REQUIRE(std::abs(bias.delta) < 1e-10);
    const auto combined = bias_first_order_analytic(a, density_from_pure(ket_zero()), f,
                                                    ChannelSpec::ad_pd());
    REQUIRE(std::abs(combined.delta) < 1e-10);
  }
}

TEST_CASE("numeric bias agrees with the analytic route") {
  Rng rng(151);
  for (int i = 0; i < 100; ++i) {
    const HermitianOperator a(test::random_hermitian(2, rng));
    const DensityMatrix pre = random_state(2, StateKind::Mixed, rng);
    const PureState f = random_pure_state(2, rng);
    const auto [wx, wy, wz] = random_weights(rng);
    const ChannelSpec spec = ChannelSpec::pauli(wx, wy, wz);
    const Complex analytic = bias_first_order_analytic(a, pre, f, spec).delta;
    const Complex numeric = bias_first_order_numeric(a, pre, f, spec).delta;
    REQUIRE(std::abs(analytic - numeric) < 1e-6);
  }
  // Damping families as well.
  for (int i = 0; i < 20; ++i) {
    const HermitianOperator a(test::random_hermitian(2, rng));
    const DensityMatrix pre = random_state(2, StateKind::Mixed, rng);
    const PureState f = random_pure_state(2, rng);
    for (const auto& spec : {ChannelSpec::amplitude_damping(), ChannelSpec::ad_pd()}) {
      const Complex analytic = bias_first_order_analytic(a, pre, f, spec).delta;
      const Complex numeric = bias_first_order_numeric(a, pre, f, spec).delta;
      REQUIRE(std::abs(analytic - numeric) < 1e-6);
    }
  }
}

TEST_CASE("numeric bias of identity-like channels is zero") {
  Rng rng(161);
  const HermitianOperator a(test::random_hermitian(2, rng));
  const DensityMatrix pre = random_state(2, StateKind::Mixed, rng);
  const PureState f = random_pure_state(2, rng);
  const ChannelSpec idfam = ChannelSpec::prob_unitary(identity(2));
  REQUIRE(std::abs(bias_first_order_numeric(a, pre, f, idfam).delta) < 1e-10);

  // Unital channel with maximally mixed preselection.
  const ChannelSpec mix = ChannelSpec::unitary_mixture(
      {haar_unitary(2, rng), haar_unitary(2, rng)}, {0.4, 0.6});
  REQUIRE(std::abs(bias_first_order_numeric(a, maximally_mixed(2), f, mix).delta) < 1e-8);

  REQUIRE_THROWS_AS(bias_first_order_numeric(a, pre, f, idfam, 0.5), StepTooLarge);
}

TEST_CASE("adding a multiple of the identity shifts the weak value affinely") {
  Rng rng(171);
  for (int i = 0; i < 20; ++i) {
    const HermitianOperator a(test::random_hermitian(2, rng));
    const double c = 2.0 * rng.normal();
    const HermitianOperator shifted(a.matrix() + c * identity(2));
    const DensityMatrix pre = random_state(2, StateKind::Mixed, rng);
    const PureState f = random_pure_state(2, rng);
    REQUIRE(std::abs(weak_value(shifted, pre, f).value -
                     weak_value(a, pre, f).value - Complex(c, 0)) < 1e-10);
  }
}

TEST_CASE("Taylor consistency of the first-order bias") {
  Rng rng(181);
  const std::vector<double> gammas = {1e-3, 3e-3, 1e-2};
  for (int i = 0; i < 10; ++i) {
    const HermitianOperator a(test::random_hermitian(2, rng));
    const DensityMatrix pre = random_state(2, StateKind::Mixed, rng);
    const PureState f = random_pure_state(2, rng);
    const auto [wx, wy, wz] = random_weights(rng);
    const ChannelSpec spec = ChannelSpec::pauli(wx, wy, wz);
    const Complex a_w = weak_value(a, pre, f).value;
    const Complex delta = bias_first_order_analytic(a, pre, f, spec).delta;
    std::vector<double> residuals;
    for (double g : gammas) {
      const Complex noisy = noisy_weak_value(a, pre, f, build_channel(spec, g)).value;
      residuals.push_back(std::abs(noisy - a_w - g * delta));
    }
    if (*std::min_element(residuals.begin(), residuals.end()) < 1e-13) continue;
    REQUIRE(fit_slope(gammas, residuals) >= 1.9);
  }
}
