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

#include <optional>

#include "wvsim/core.hpp"
#include "wvsim/weak_value.hpp"

namespace wvsim {

struct ZeroPostselectProbability : Error {
  using Error::Error;
};
struct GridTooCoarse : Error {
  using Error::Error;
};

// Gaussian pointer with position spread `spread` and integrated coupling
// strength `coupling`. The protocol is weak when coupling/spread is small and
// approaches a projective measurement when it is large.
struct GaussianProbe {
  double spread;
  double coupling;

  GaussianProbe(double spread_, double coupling_)
      : spread(spread_), coupling(coupling_) {
    if (!(spread > 0.0) || !std::isfinite(spread) || !std::isfinite(coupling)) {
      throw InvalidState("probe needs positive spread and finite coupling");
    }
  }

  double regime_ratio() const { return std::abs(coupling) / spread; }
  bool weak_regime() const { return regime_ratio() <= 0.1; }
};

// First-order prediction for the postselected pointer readout:
// mean g Re(A_w), variance spread^2.
inline double wvmp_expectation(const HermitianOperator& a, const DensityMatrix& pre,
                               const PureState& post, const GaussianProbe& probe) {
  return probe.coupling * weak_value(a, pre, post).value.real();
}

inline double wvmp_variance(const GaussianProbe& probe) {
  return probe.spread * probe.spread;
}

// Von Neumann limit without postselection: mean g Tr(A rho), variance
// g^2 Var(A)_rho + spread^2.
inline double strong_expectation(const HermitianOperator& a, const DensityMatrix& pre,
                                 const GaussianProbe& probe) {
  return probe.coupling * (a.matrix() * pre.matrix()).trace().real();
}

inline double strong_variance(const HermitianOperator& a, const DensityMatrix& pre,
                              const GaussianProbe& probe) {
  const double mean_a = (a.matrix() * pre.matrix()).trace().real();
  const double mean_a2 = (a.matrix() * a.matrix() * pre.matrix()).trace().real();
  return probe.coupling * probe.coupling * (mean_a2 - mean_a * mean_a) +
         probe.spread * probe.spread;
}

struct ProbeDistribution {
  RealVector grid;
  RealVector density;  // renormalized to unit mass on the grid
  double postselect_prob;
  double mean;
  double variance;
};

namespace detail {

inline double trapezoid(const RealVector& grid, const RealVector& values) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i + 1 < grid.size(); ++i) {
    sum += 0.5 * (values(i) + values(i + 1)) * (grid(i + 1) - grid(i));
  }
  return sum;
}

// Exact postselected (or traced-out) pointer density: superposition of
// Gaussians centered on g a_i, weighted by W_ij = <f|a_i><a_i|rho|a_j><a_j|f>,
// cross terms included. Without postselection only the diagonal survives.
inline ProbeDistribution probe_distribution_impl(const HermitianOperator& a,
                                                 const DensityMatrix& pre,
                                                 const std::optional<PureState>& post,
                                                 const GaussianProbe& probe,
                                                 Eigen::Index grid_points,
                                                 double half_width) {
  if (grid_points < 128) {
    throw GridTooCoarse("grid needs at least 128 points");
  }
  const auto sd = spectral_decompose(a);
  const double max_eig = sd.eigenvalues.cwiseAbs().maxCoeff();
  const double min_width =
      5.0 * (probe.spread + std::abs(probe.coupling) * max_eig);
  if (half_width < min_width) {
    throw Error(detail::describe("probe grid half width too small", half_width));
  }
  const double spacing = 2.0 * half_width / double(grid_points - 1);
  if (spacing > probe.spread / 8.0) {
    throw GridTooCoarse(
        detail::describe("grid spacing must not exceed spread/8", spacing));
  }

  const Eigen::Index d = a.dim();
  // Weight matrix over eigenvector pairs.
  Matrix w(d, d);
  if (post.has_value()) {
    if (post->dim() != d) throw DimMismatch("postselection dimension mismatch");
    const Vector fa = sd.eigenvectors.adjoint() * post->amplitudes();  // <a_i|f>
    const Matrix rho_a =
        sd.eigenvectors.adjoint() * pre.matrix() * sd.eigenvectors;
    w = fa.conjugate().asDiagonal() * rho_a * fa.asDiagonal();
  } else {
    const Matrix rho_a =
        sd.eigenvectors.adjoint() * pre.matrix() * sd.eigenvectors;
    w = rho_a.diagonal().asDiagonal();
  }

  ProbeDistribution out;
  out.grid = RealVector::LinSpaced(grid_points, -half_width, half_width);
  out.density.resize(grid_points);
  const double norm = 1.0 / std::sqrt(std::sqrt(2.0 * M_PI * probe.spread * probe.spread));
  const double inv_four_var = 1.0 / (4.0 * probe.spread * probe.spread);
  RealVector phi(d);
  for (Eigen::Index k = 0; k < grid_points; ++k) {
    const double q = out.grid(k);
    for (Eigen::Index i = 0; i < d; ++i) {
      const double dq = q - probe.coupling * sd.eigenvalues(i);
      phi(i) = norm * std::exp(-dq * dq * inv_four_var);
    }
    const Complex p = phi.cast<Complex>().transpose() * w * phi.cast<Complex>();
    out.density(k) = std::max(0.0, p.real());
  }

  const double mass = trapezoid(out.grid, out.density);
  if (mass <= kOverlapTol) {
    throw ZeroPostselectProbability(
        detail::describe("postselection mass vanishes", mass));
  }
  out.postselect_prob = post.has_value() ? mass : 1.0;
  out.density /= mass;
  RealVector weighted = out.grid.cwiseProduct(out.density);
  out.mean = trapezoid(out.grid, weighted);
  RealVector second = out.grid.cwiseProduct(weighted);
  out.variance = std::max(0.0, trapezoid(out.grid, second) - out.mean * out.mean);
  return out;
}

}  // namespace detail

inline double default_half_width(const HermitianOperator& a, const GaussianProbe& probe) {
  const auto sd = spectral_decompose(a);
  return 8.0 * (probe.spread +
                std::abs(probe.coupling) * sd.eigenvalues.cwiseAbs().maxCoeff());
}

inline ProbeDistribution postselected_probe_distribution(
    const HermitianOperator& a, const DensityMatrix& pre, const PureState& post,
    const GaussianProbe& probe, Eigen::Index grid_points, double half_width) {
  return detail::probe_distribution_impl(a, pre, post, probe, grid_points, half_width);
}

inline ProbeDistribution postselected_probe_distribution(
    const HermitianOperator& a, const DensityMatrix& pre, const PureState& post,
    const GaussianProbe& probe) {
  return postselected_probe_distribution(a, pre, post, probe, 2048,
                                         default_half_width(a, probe));
}

// Pointer density with the system traced out (no postselection step).
inline ProbeDistribution unconditional_probe_distribution(
    const HermitianOperator& a, const DensityMatrix& pre, const GaussianProbe& probe,
    Eigen::Index grid_points, double half_width) {
  return detail::probe_distribution_impl(a, pre, std::nullopt, probe, grid_points,
                                         half_width);
}

// n iid draws by inverse-CDF with linear interpolation on the grid.
inline RealVector sample_probe(const ProbeDistribution& dist, Eigen::Index n,
                               std::uint64_t seed) {
  if (n < 1) throw Error("sample_probe needs n >= 1");
  const Eigen::Index m = dist.grid.size();
  RealVector cdf(m);
  cdf(0) = 0.0;
  for (Eigen::Index i = 1; i < m; ++i) {
    cdf(i) = cdf(i - 1) + 0.5 * (dist.density(i) + dist.density(i - 1)) *
                              (dist.grid(i) - dist.grid(i - 1));
  }
  const double total = cdf(m - 1);
  cdf /= total;

  Rng rng(seed);
  RealVector samples(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double u = rng.uniform();
    // First index with cdf >= u.
    Eigen::Index lo = 0, hi = m - 1;
    while (lo < hi) {
      const Eigen::Index mid = (lo + hi) / 2;
      if (cdf(mid) < u) {
        lo = mid + 1;
      } else {
        hi = mid;
      }
    }
    if (lo == 0) {
      samples(k) = dist.grid(0);
      continue;
    }
    const double c0 = cdf(lo - 1), c1 = cdf(lo);
    const double t = (c1 > c0) ? (u - c0) / (c1 - c0) : 0.0;
    samples(k) = dist.grid(lo - 1) + t * (dist.grid(lo) - dist.grid(lo - 1));
  }
  return samples;
}

// Strong measurement followed by postselection, evaluated through the PVM:
// Pr(lambda) = <f|P_lambda rho P_lambda|f> summed over eigenspaces, and the
// returned value is the postselection-conditioned expectation scaled by g.
// The success probability is exposed separately.
inline double strong_postselect_success_prob(const HermitianOperator& a,
                                             const DensityMatrix& pre,
                                             const PureState& post) {
  const auto sd = spectral_decompose(a);
  double total = 0.0;
  for (const EigenGroup& group : eigen_groups(sd)) {
    const auto block = sd.eigenvectors.middleCols(group.begin, group.count);
    const Vector pf = block * (block.adjoint() * post.amplitudes());
    total += (pf.adjoint() * pre.matrix() * pf)(0).real();
  }
  return total;
}

inline double strong_postselect_expectation(const HermitianOperator& a,
                                            const DensityMatrix& pre,
                                            const PureState& post,
                                            double coupling = 1.0) {
  if (a.dim() != pre.dim() || a.dim() != post.dim()) {
    throw DimMismatch("strong postselect requires matching dimensions");
  }
  const auto sd = spectral_decompose(a);
  double total = 0.0;
  double weighted = 0.0;
  for (const EigenGroup& group : eigen_groups(sd)) {
    const auto block = sd.eigenvectors.middleCols(group.begin, group.count);
    const Vector pf = block * (block.adjoint() * post.amplitudes());
    const double pr = (pf.adjoint() * pre.matrix() * pf)(0).real();
    total += pr;
    weighted += group.value * pr;
  }
  if (total <= kOverlapTol) {
    throw ZeroPostselectProbability(
        detail::describe("postselection probability vanishes", total));
  }
  return coupling * weighted / total;
}

}  // namespace wvsim
