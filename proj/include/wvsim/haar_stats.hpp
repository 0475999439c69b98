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

#include <vector>

#include "wvsim/core.hpp"
#include "wvsim/learning.hpp"
#include "wvsim/weak_value.hpp"

namespace wvsim {

struct MeanZero : Error {
  using Error::Error;
};

// Monte-Carlo statistics of the first-order bias Delta(U) of the
// probabilistic-unitary channel over Haar-random U, next to the closed-form
// mean and variance for pure pre/post states.
struct HaarDeltaStats {
  Eigen::Index n_samples;
  Complex mean_est;
  double mean_se;
  double second_moment_est;
  double second_moment_se;
  Complex theory_mean;
  double theory_var;
  double theory_second_moment;
  std::vector<double> abs_samples;  // |Delta| per draw, kept for tail checks
};

// Delta(U) = [<f|A U rho U†|f> - <f|U rho U†|f> A_w] / <f|rho|f>; the channel
// is exactly linear in its probability parameter, so no differencing is
// involved.
inline Complex unitary_bias(const HermitianOperator& a, const DensityMatrix& pre,
                            const PureState& post, const Matrix& u) {
  const Vector& f = post.amplitudes();
  const double overlap = (f.adjoint() * pre.matrix() * f)(0).real();
  if (overlap <= kOverlapTol) {
    throw OrthogonalStates(detail::describe("pre/post overlap vanishes", overlap));
  }
  const Complex a_w = (f.adjoint() * a.matrix() * pre.matrix() * f)(0) / overlap;
  const Matrix rotated = u * pre.matrix() * u.adjoint();
  const Complex num = (f.adjoint() * a.matrix() * rotated * f)(0);
  const Complex den = (f.adjoint() * rotated * f)(0);
  return (num - a_w * den) / overlap;
}

inline HaarDeltaStats mc_delta_stats(const HermitianOperator& a, const PureState& pre,
                                     const PureState& post, Eigen::Index n,
                                     std::uint64_t seed) {
  if (n < 10000) {
    throw Error("mc_delta_stats needs at least 10^4 samples");
  }
  const DensityMatrix rho = density_from_pure(pre);
  const Vector& f = post.amplitudes();
  const double overlap = (f.adjoint() * rho.matrix() * f)(0).real();
  if (overlap <= kOverlapTol) {
    throw OrthogonalStates(detail::describe("pre/post overlap vanishes", overlap));
  }
  const Complex a_w = weak_value(a, rho, post).value;
  const Complex a_f = (f.adjoint() * a.matrix() * f)(0);
  const Complex a2_f = (f.adjoint() * a.matrix() * a.matrix() * f)(0);
  const double var_a_f = a2_f.real() - a_f.real() * a_f.real();

  HaarDeltaStats stats;
  stats.n_samples = n;
  stats.theory_mean = 0.5 * (a_f - a_w) / overlap;
  stats.theory_var =
      (2.0 * var_a_f + std::norm(a_f - a_w)) / (12.0 * overlap * overlap);
  stats.theory_second_moment = stats.theory_var + std::norm(stats.theory_mean);

  // Sampling runs in fixed-size chunks with per-chunk derived seeds, so the
  // aggregate is independent of any parallel split.
  const Eigen::Index chunk = 4096;
  std::vector<Complex> samples;
  samples.reserve(n);
  const Eigen::Index dim = a.dim();
  for (Eigen::Index start = 0, c = 0; start < n; start += chunk, ++c) {
    Rng rng(seed + static_cast<std::uint64_t>(c));
    const Eigen::Index count = std::min(chunk, n - start);
    for (Eigen::Index i = 0; i < count; ++i) {
      samples.push_back(unitary_bias(a, rho, post, haar_unitary(dim, rng)));
    }
  }

  Complex mean = 0.0;
  for (const Complex& s : samples) mean += s;
  mean /= double(n);
  double spread2 = 0.0, second = 0.0, second2 = 0.0;
  stats.abs_samples.reserve(samples.size());
  for (const Complex& s : samples) {
    spread2 += std::norm(s - mean);
    const double s2 = std::norm(s);
    second += s2;
    second2 += s2 * s2;
    stats.abs_samples.push_back(std::abs(s));
  }
  second /= double(n);
  stats.mean_est = mean;
  stats.mean_se = std::sqrt(spread2 / (double(n) * double(n - 1)));
  stats.second_moment_est = second;
  stats.second_moment_se =
      std::sqrt(std::max(0.0, second2 / double(n) - second * second) / double(n - 1));
  return stats;
}

struct ChebyshevCheck {
  double bound;      // claim-4 expression Var / |mean|^2
  double empirical;  // fraction of draws with |Delta| <= eps |theory mean|
  bool satisfied;
};

// The probability of Delta vanishing is bounded by Var/|E|^2; "vanishing" is
// proxied by |Delta| <= eps |E| since exact zeros have measure zero.
inline ChebyshevCheck chebyshev_check(const HaarDeltaStats& stats, double epsilon = 0.05) {
  const double mean_mag = std::abs(stats.theory_mean);
  if (mean_mag <= 1e-12) {
    throw MeanZero("Chebyshev bound undefined for vanishing mean");
  }
  ChebyshevCheck out;
  out.bound = stats.theory_var / (mean_mag * mean_mag);
  Eigen::Index hits = 0;
  for (double v : stats.abs_samples) {
    if (v <= epsilon * mean_mag) ++hits;
  }
  const double n = double(stats.n_samples);
  out.empirical = double(hits) / n;
  const double se = std::sqrt(out.empirical * (1.0 - out.empirical) / n);
  out.satisfied = out.empirical <= out.bound + 3.0 * se;
  return out;
}

inline Matrix hadamard_gate() {
  Matrix h(2, 2);
  h << 1, 1, 1, -1;
  return h / std::sqrt(2.0);
}

// Closed-form bias of the Hadamard probabilistic-unitary channel on the three
// parameterized Pauli-safe families. The polynomial numerators vanish exactly
// at the maximally mixed parameter values only.
inline BiasValue counterexample_hadamard(int family, double r, const HermitianOperator& a) {
  const Matrix& m = a.matrix();
  Complex numerator;
  double overlap;
  switch (family) {
    case 1:
      if (std::abs(r + 0.5) < 1e-9 || std::abs(r) > 0.5) {
        throw ExcludedParameter(detail::describe("family 1 requires r != -1/2", r));
      }
      numerator = 0.25 * r * (1.0 + 2.0 * r) * (m(0, 0) - m(0, 1) + m(1, 0) - m(1, 1));
      overlap = 0.5 + r;
      break;
    case 2:
      if (std::abs(r) < 1e-9 || r < 0.0 || r > 1.0) {
        throw ExcludedParameter(detail::describe("family 2 requires r != 0", r));
      }
      numerator = 0.5 * m(0, 1) * r * (2.0 * r - 1.0);
      overlap = r;
      break;
    case 3:
      if (std::abs(r - 1.0) < 1e-9 || r < 0.0 || r > 1.0) {
        throw ExcludedParameter(detail::describe("family 3 requires r != 1", r));
      }
      numerator = 0.5 * m(1, 0) * (1.0 - r) * (2.0 * r - 1.0);
      overlap = 1.0 - r;
      break;
    default:
      throw Error("counterexample_hadamard families are 1, 2, 3");
  }
  return {numerator / (overlap * overlap)};
}

}  // namespace wvsim
