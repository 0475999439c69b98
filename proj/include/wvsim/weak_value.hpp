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

#pragma once

#include "wvsim/channels.hpp"
#include "wvsim/core.hpp"

namespace wvsim {

struct OrthogonalStates : Error {
  using Error::Error;
};
struct OrthogonalStatesAfterNoise : Error {
  using Error::Error;
};

// Weak values diverge as the pre/post overlap vanishes; callers must handle
// amplification regimes explicitly below this threshold.
inline constexpr double kOverlapTol = 1e-12;

struct WeakValue {
  Complex value;
  double overlap;  // Tr(rho_f rho_s), the denominator
};

// First-order coefficient of the noise parameter in A_{w,E}.
struct BiasValue {
  Complex delta;
};

// A_w = Tr(rho_f A rho_s) / Tr(rho_f rho_s). Reduces to the pure-state form
// <f|A|s>/<f|s> when both states are rank one.
inline WeakValue weak_value(const HermitianOperator& a, const DensityMatrix& pre,
                            const DensityMatrix& post) {
  if (a.dim() != pre.dim() || a.dim() != post.dim()) {
    throw DimMismatch("weak value requires matching dimensions");
  }
  const Complex overlap = (post.matrix() * pre.matrix()).trace();
  if (overlap.real() <= kOverlapTol) {
    throw OrthogonalStates(
        detail::describe("pre/post overlap vanishes", overlap.real()));
  }
  const Complex num = (post.matrix() * a.matrix() * pre.matrix()).trace();
  return {num / overlap.real(), overlap.real()};
}

inline WeakValue weak_value(const HermitianOperator& a, const DensityMatrix& pre,
                            const PureState& post) {
  if (a.dim() != pre.dim() || a.dim() != post.dim()) {
    throw DimMismatch("weak value requires matching dimensions");
  }
  const Vector& f = post.amplitudes();
  const double overlap = (f.adjoint() * pre.matrix() * f)(0).real();
  if (overlap <= kOverlapTol) {
    throw OrthogonalStates(detail::describe("pre/post overlap vanishes", overlap));
  }
  const Complex num = (f.adjoint() * a.matrix() * pre.matrix() * f)(0);
  return {num / overlap, overlap};
}

inline WeakValue weak_value(const HermitianOperator& a, const PureState& pre,
                            const PureState& post) {
  return weak_value(a, density_from_pure(pre), post);
}

// Weak value of the noisy state E(rho_s).
inline WeakValue noisy_weak_value(const HermitianOperator& a, const DensityMatrix& pre,
                                  const DensityMatrix& post, const KrausChannel& c) {
  try {
    return weak_value(a, apply_channel(c, pre), post);
  } catch (const OrthogonalStates& e) {
    throw OrthogonalStatesAfterNoise(e.what());
  }
}

inline WeakValue noisy_weak_value(const HermitianOperator& a, const DensityMatrix& pre,
                                  const PureState& post, const KrausChannel& c) {
  try {
    return weak_value(a, apply_channel(c, pre), post);
  } catch (const OrthogonalStates& e) {
    throw OrthogonalStatesAfterNoise(e.what());
  }
}

namespace detail {

// Delta for one first-order perturbation m of the preselected state:
// [<f|A m|f> - A_w <f|m|f>] / <f|rho|f>.
inline Complex bias_from_perturbation(const HermitianOperator& a, const DensityMatrix& pre,
                                      const PureState& post, const Matrix& m) {
  const Vector& f = post.amplitudes();
  const double overlap = (f.adjoint() * pre.matrix() * f)(0).real();
  if (overlap <= kOverlapTol) {
    throw OrthogonalStates(describe("pre/post overlap vanishes", overlap));
  }
  const Complex a_w = (f.adjoint() * a.matrix() * pre.matrix() * f)(0) / overlap;
  const Complex num = (f.adjoint() * a.matrix() * m * f)(0);
  const Complex den = (f.adjoint() * m * f)(0);
  return (num - a_w * den) / overlap;
}

}  // namespace detail

// Analytic first-order bias Delta_E. Pauli channels use the per-sigma sum
// weighted by lambda_sigma, compositions add their components' biases, and
// the damping families go through the generator.
inline BiasValue bias_first_order_analytic(const HermitianOperator& a,
                                           const DensityMatrix& pre, const PureState& post,
                                           const ChannelSpec& spec,
                                           double h = kDerivativeStep) {
  if (spec.dim() != pre.dim()) {
    throw DimMismatch("channel dimension does not match state");
  }
  switch (spec.kind()) {
    case ChannelSpec::Kind::Pauli: {
      const Matrix sigmas[3] = {pauli_x(), pauli_y(), pauli_z()};
      Complex delta = 0.0;
      for (int i = 0; i < 3; ++i) {
        const double w = spec.pauli_weights()[i];
        if (w == 0.0) continue;
        const Matrix flipped = sigmas[i] * pre.matrix() * sigmas[i];
        delta += w * detail::bias_from_perturbation(a, pre, post,
                                                    flipped - pre.matrix());
      }
      return {delta};
    }
    case ChannelSpec::Kind::Composed: {
      Complex delta = 0.0;
      for (const auto& part : spec.components()) {
        delta += part.weight *
                 bias_first_order_analytic(a, pre, post, part.spec, h).delta;
      }
      return {delta};
    }
    default: {
      const Matrix m = channel_derivative_at_zero(spec, pre, h);
      return {detail::bias_from_perturbation(a, pre, post, m)};
    }
  }
}

// One-sided second-order difference of gamma -> A_{w,E(gamma)} at zero, with
// one Richardson level.
inline BiasValue bias_first_order_numeric(const HermitianOperator& a,
                                          const DensityMatrix& pre, const DensityMatrix& post,
                                          const ChannelSpec& spec, double h = kDerivativeStep) {
  detail::require_step(h);
  auto value_at = [&](double gamma) {
    return noisy_weak_value(a, pre, post, build_channel(spec, gamma)).value;
  };
  const Complex f0 = weak_value(a, pre, post).value;
  auto one_sided = [&](double step) {
    const Complex fh = value_at(step);
    const Complex f2h = value_at(2.0 * step);
    return (-3.0 * f0 + 4.0 * fh - f2h) / (2.0 * step);
  };
  const Complex d_h = one_sided(h);
  const Complex d_half = one_sided(0.5 * h);
  return {(4.0 * d_half - d_h) / 3.0};
}

inline BiasValue bias_first_order_numeric(const HermitianOperator& a,
                                          const DensityMatrix& pre, const PureState& post,
                                          const ChannelSpec& spec, double h = kDerivativeStep) {
  return bias_first_order_numeric(a, pre, density_from_pure(post), spec, h);
}

}  // namespace wvsim
