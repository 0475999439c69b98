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

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "wvsim/channels.hpp"
#include "wvsim/core.hpp"
#include "wvsim/protocols.hpp"
#include "wvsim/weak_value.hpp"

namespace wvsim {

struct ExcludedParameter : Error {
  using Error::Error;
};
struct ChannelClassMismatch : Error {
  using Error::Error;
};

enum class ChannelClass { Pauli, Unital, ADPD };
enum class Theorem { T1_Pauli, T2_Unital, T3_ADPD };
enum class Protocol { WVMP, Strong, StrongPostselect };

// Whether each weak value enters the reconstruction as a complex number or
// only through its real part (what a position readout actually provides).
enum class ReadoutMode { Complex, RealPart };

struct StatePair {
  DensityMatrix pre;
  PureState post;
  std::string label;
  double parameter;
};

struct StatePairCatalog {
  ChannelClass channel_class;
  std::vector<StatePair> entries;
};

struct CatalogParams {
  double r = 0.25;        // off-diagonal of the symmetric Pauli-safe family
  double lambda2 = 1.0;   // diagonal family paired with |0>
  double lambda3 = 0.0;   // diagonal family paired with |1>
  double rho11 = 0.7;     // diagonal damping-safe family
};

namespace detail {

inline void require_away_from(double value, double excluded, const char* what) {
  if (std::abs(value - excluded) < 1e-9) {
    throw ExcludedParameter(describe(what, value));
  }
}

}  // namespace detail

// State pairs whose weak values are first-order insensitive to every channel
// in the class. Parameters outside the families' exclusions are rejected.
inline StatePairCatalog catalog_safe_pairs(ChannelClass channel_class,
                                           const CatalogParams& params = {}) {
  StatePairCatalog catalog;
  catalog.channel_class = channel_class;
  switch (channel_class) {
    case ChannelClass::Pauli: {
      detail::require_away_from(params.r, -0.5, "family 1 requires r != -1/2");
      if (std::abs(params.r) > 0.5) {
        throw ExcludedParameter(detail::describe("family 1 requires |r| <= 1/2", params.r));
      }
      detail::require_away_from(params.lambda2, 0.0, "family 2 requires lambda != 0");
      detail::require_away_from(params.lambda3, 1.0, "family 3 requires lambda != 1");
      Matrix sym(2, 2);
      sym << 0.5, params.r, params.r, 0.5;
      catalog.entries.push_back(
          {validate_density(sym, kSpectralTol), ket_plus(), "pauli_family1", params.r});
      catalog.entries.push_back(
          {diagonal_qubit(params.lambda2), ket_zero(), "pauli_family2", params.lambda2});
      catalog.entries.push_back(
          {diagonal_qubit(params.lambda3), ket_one(), "pauli_family3", params.lambda3});
      catalog.entries.push_back(
          {maximally_mixed(2), ket_minus(), "pauli_family4_minus", 0.5});
      catalog.entries.push_back(
          {maximally_mixed(2), ket_plus_i(), "pauli_family4_i", 0.5});
      break;
    }
    case ChannelClass::Unital: {
      catalog.entries.push_back({maximally_mixed(2), ket_zero(), "unital_zero", 0.5});
      catalog.entries.push_back({maximally_mixed(2), ket_one(), "unital_one", 0.5});
      catalog.entries.push_back({maximally_mixed(2), ket_plus(), "unital_plus", 0.5});
      catalog.entries.push_back({maximally_mixed(2), ket_plus_i(), "unital_i", 0.5});
      break;
    }
    case ChannelClass::ADPD: {
      detail::require_away_from(params.rho11, 0.0, "damping family requires rho11 != 0");
      detail::require_away_from(params.rho11, 1.0, "damping family requires rho11 != 1");
      catalog.entries.push_back(
          {diagonal_qubit(params.rho11), ket_zero(), "adpd_diag_zero", params.rho11});
      catalog.entries.push_back(
          {diagonal_qubit(params.rho11), ket_one(), "adpd_diag_one", params.rho11});
      catalog.entries.push_back(
          {density_from_pure(ket_zero()), ket_plus(), "adpd_ground_plus", 1.0});
      catalog.entries.push_back(
          {density_from_pure(ket_zero()), ket_plus_i(), "adpd_ground_i", 1.0});
      break;
    }
  }
  return catalog;
}

struct ReconstructionResult {
  HermitianOperator a_hat;
  Eigen::MatrixXd per_element_error;  // |a_hat_ij - a_ij|
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> identifiable;
  double gamma;
  Protocol protocol;

  double max_error() const { return per_element_error.maxCoeff(); }
};

namespace detail {

inline bool is_damping_class(const ChannelSpec& spec) {
  switch (spec.kind()) {
    case ChannelSpec::Kind::AmplitudeDamping:
    case ChannelSpec::Kind::PhaseDamping:
      return true;
    case ChannelSpec::Kind::Composed:
      for (const auto& part : spec.components()) {
        if (!is_damping_class(part.spec)) return false;
      }
      return true;
    default:
      return false;
  }
}

inline void require_theorem_channel(Theorem theorem, const KrausChannel& c) {
  switch (theorem) {
    case Theorem::T1_Pauli:
      if (c.spec().kind() != ChannelSpec::Kind::Pauli) {
        throw ChannelClassMismatch("theorem 1 requires a Pauli channel");
      }
      break;
    case Theorem::T2_Unital:
      if (!check_unital(c, 1e-10)) {
        throw ChannelClassMismatch("theorem 2 requires a unital channel");
      }
      break;
    case Theorem::T3_ADPD:
      if (!is_damping_class(c.spec())) {
        throw ChannelClassMismatch("theorem 3 requires amplitude/phase damping");
      }
      break;
  }
}

// `target` is the estimand: the full operator when it is learnable, or its
// projection onto the identifiable subspace otherwise, so per_element_error
// measures the noise-induced bias of what the protocol actually estimates.
inline ReconstructionResult finalize(Matrix a_hat, const Matrix& target, double gamma,
                                     Protocol protocol,
                                     Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>
                                         identifiable) {
  a_hat = 0.5 * (a_hat + a_hat.adjoint().eval());
  Eigen::MatrixXd errors = (a_hat - target).cwiseAbs();
  return ReconstructionResult{HermitianOperator(a_hat), std::move(errors),
                              std::move(identifiable), gamma, protocol};
}

// Orthonormal Hermitian basis used by the linear-inversion routes.
inline std::vector<Matrix> hermitian_basis(Eigen::Index d) {
  std::vector<Matrix> basis;
  for (Eigen::Index i = 0; i < d; ++i) {
    Matrix b = Matrix::Zero(d, d);
    b(i, i) = 1.0;
    basis.push_back(b);
  }
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i + 1; j < d; ++j) {
      Matrix re = Matrix::Zero(d, d), im = Matrix::Zero(d, d);
      re(i, j) = re(j, i) = inv_sqrt2;
      im(i, j) = Complex(0, -inv_sqrt2);
      im(j, i) = Complex(0, inv_sqrt2);
      basis.push_back(re);
      basis.push_back(im);
    }
  }
  return basis;
}

// Minimal-norm least squares for A from real linear functionals
// m_k = Tr(A F_k) with Hermitian frames F_k. Unidentifiable directions are
// set to zero and flagged per element.
inline ReconstructionResult linear_inversion(const std::vector<Matrix>& frames,
                                             const std::vector<double>& values,
                                             const HermitianOperator& a_true,
                                             double gamma, Protocol protocol) {
  const Eigen::Index d = a_true.dim();
  const auto basis = hermitian_basis(d);
  const Eigen::Index nb = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXd design(frames.size(), nb);
  Eigen::VectorXd rhs(frames.size());
  for (std::size_t k = 0; k < frames.size(); ++k) {
    for (Eigen::Index l = 0; l < nb; ++l) {
      design(static_cast<Eigen::Index>(k), l) = (basis[l] * frames[k]).trace().real();
    }
    rhs(static_cast<Eigen::Index>(k)) = values[k];
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(design,
                                        Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(1e-10);
  const Eigen::VectorXd x = svd.solve(rhs);

  Matrix a_hat = Matrix::Zero(d, d);
  for (Eigen::Index l = 0; l < nb; ++l) a_hat += x(l) * basis[l];

  const Eigen::Index rank = svd.rank();
  const Eigen::MatrixXd v_r = svd.matrixV().leftCols(rank);

  // Estimand: the true operator projected onto the row space of the design.
  Eigen::VectorXd x_true(nb);
  for (Eigen::Index l = 0; l < nb; ++l) {
    x_true(l) = (basis[l] * a_true.matrix()).trace().real();
  }
  const Eigen::VectorXd x_proj = v_r * (v_r.transpose() * x_true);
  Matrix target = Matrix::Zero(d, d);
  for (Eigen::Index l = 0; l < nb; ++l) target += x_proj(l) * basis[l];

  // Element (i,j) is identifiable when its coefficient functionals lie in the
  // row space of the design matrix.
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> identifiable(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      Eigen::VectorXd c_re(nb), c_im(nb);
      for (Eigen::Index l = 0; l < nb; ++l) {
        c_re(l) = basis[l](i, j).real();
        c_im(l) = basis[l](i, j).imag();
      }
      const bool re_ok = (c_re - v_r * (v_r.transpose() * c_re)).norm() < 1e-8;
      const bool im_ok = (c_im - v_r * (v_r.transpose() * c_im)).norm() < 1e-8;
      identifiable(i, j) = re_ok && im_ok;
    }
  }
  return finalize(std::move(a_hat), target, gamma, protocol, std::move(identifiable));
}

inline Complex maybe_real(Complex v, ReadoutMode mode) {
  return mode == ReadoutMode::RealPart ? Complex(v.real(), 0.0) : v;
}

}  // namespace detail

// Operator reconstruction through noisy weak values of the safe catalog,
// assembled with the linear combinations belonging to each theorem.
inline ReconstructionResult reconstruct_via_wvmp(Theorem theorem,
                                                 const HermitianOperator& a_true,
                                                 const KrausChannel& c,
                                                 ReadoutMode mode = ReadoutMode::Complex,
                                                 const CatalogParams& params = {}) {
  detail::require_theorem_channel(theorem, c);
  auto measure = [&](const DensityMatrix& pre, const PureState& post) {
    return detail::maybe_real(noisy_weak_value(a_true, pre, post, c).value, mode);
  };
  Matrix a_hat = Matrix::Zero(2, 2);
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> all(2, 2);
  all.setConstant(true);
  switch (theorem) {
    case Theorem::T1_Pauli: {
      const auto catalog = catalog_safe_pairs(ChannelClass::Pauli, params);
      const Complex a11 = measure(catalog.entries[1].pre, catalog.entries[1].post);
      const Complex a22 = measure(catalog.entries[2].pre, catalog.entries[2].post);
      const Complex s = measure(catalog.entries[0].pre, catalog.entries[0].post);
      const Complex m = measure(catalog.entries[3].pre, catalog.entries[3].post);
      const Complex y = measure(catalog.entries[4].pre, catalog.entries[4].post);
      const Complex sum = s - m;                // a12 + a21
      const Complex q = -s - m + 2.0 * y;       // i (a12 - a21)
      const Complex diff = Complex(0, -1) * q;  // a12 - a21
      a_hat << a11, 0.5 * (sum + diff), 0.5 * (sum - diff), a22;
      break;
    }
    case Theorem::T2_Unital: {
      const auto catalog = catalog_safe_pairs(ChannelClass::Unital);
      const Complex v0 = measure(catalog.entries[0].pre, catalog.entries[0].post);
      const Complex v1 = measure(catalog.entries[1].pre, catalog.entries[1].post);
      const Complex vp = measure(catalog.entries[2].pre, catalog.entries[2].post);
      const Complex vi = measure(catalog.entries[3].pre, catalog.entries[3].post);
      const Complex re12 = vp - 0.5 * (v0 + v1);
      const Complex im12 = 0.5 * (v0 + v1) - vi;
      a_hat << v0, re12 + Complex(0, 1) * im12, re12 - Complex(0, 1) * im12, v1;
      break;
    }
    case Theorem::T3_ADPD: {
      const auto catalog = catalog_safe_pairs(ChannelClass::ADPD, params);
      const Complex a11 = measure(catalog.entries[0].pre, catalog.entries[0].post);
      const Complex a22 = measure(catalog.entries[1].pre, catalog.entries[1].post);
      const Complex p = measure(catalog.entries[2].pre, catalog.entries[2].post);
      const Complex q = measure(catalog.entries[3].pre, catalog.entries[3].post);
      // p = a11 + a21 and q = a11 - i a21 at first order.
      const Complex a21 = (mode == ReadoutMode::Complex)
                              ? 0.5 * ((p - a11) + Complex(0, 1) * (q - a11))
                              : Complex(p.real() - a11.real(),
                                        -(a11.real() - q.real()));
      a_hat << a11, std::conj(a21), a21, a22;
      break;
    }
  }
  return detail::finalize(std::move(a_hat), a_true.matrix(), c.gamma(), Protocol::WVMP,
                          all);
}

// Strong-measurement route: minimal-norm linear inversion from the noisy
// expectations Tr(A E(rho_k)).
inline ReconstructionResult reconstruct_via_strong(const HermitianOperator& a_true,
                                                   const KrausChannel& c,
                                                   const std::vector<DensityMatrix>& pres) {
  if (pres.empty()) throw Error("reconstruct_via_strong needs preselections");
  // Measured values come from the noisy states; the inversion runs against
  // the prepared states, since the experimenter does not know the noise.
  std::vector<Matrix> frames;
  std::vector<double> values;
  for (const DensityMatrix& rho : pres) {
    const DensityMatrix noisy = apply_channel(c, rho);
    values.push_back((a_true.matrix() * noisy.matrix()).trace().real());
    frames.push_back(rho.matrix());
  }
  return detail::linear_inversion(frames, values, a_true, c.gamma(), Protocol::Strong);
}

// Strong measurement with postselection. With maximally mixed (noise-fixed)
// preselections the conditioned values are <f|A|f> and A is recovered by
// linear inversion over the postselections; otherwise only the protocol's
// restricted estimate is available and everything else is flagged.
inline ReconstructionResult reconstruct_via_strong_postselect(
    const HermitianOperator& a_true, const KrausChannel& c,
    const std::vector<StatePair>& pairs) {
  if (pairs.empty()) throw Error("reconstruct_via_strong_postselect needs pairs");
  const Eigen::Index d = a_true.dim();
  std::vector<DensityMatrix> noisy;
  bool all_maximally_mixed = true;
  for (const StatePair& pair : pairs) {
    noisy.push_back(apply_channel(c, pair.pre));
    if (max_abs(noisy.back().matrix() - identity(d) / double(d)) > 1e-10) {
      all_maximally_mixed = false;
    }
  }
  if (all_maximally_mixed) {
    std::vector<Matrix> frames;
    std::vector<double> values;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      frames.push_back(pairs[k].post.projector());
      values.push_back(
          strong_postselect_expectation(a_true, noisy[k], pairs[k].post, 1.0));
    }
    return detail::linear_inversion(frames, values, a_true, c.gamma(),
                                    Protocol::StrongPostselect);
  }
  // Restricted branch (amplitude/phase damping confined to |0><0|): the
  // conditioned value of the first pair is the only retained estimate, and
  // the estimand is its noiseless counterpart.
  const double v =
      strong_postselect_expectation(a_true, noisy.front(), pairs.front().post, 1.0);
  const double v_ideal =
      strong_postselect_expectation(a_true, pairs.front().pre, pairs.front().post, 1.0);
  Matrix a_hat = Matrix::Zero(d, d);
  a_hat(0, 0) = v;
  Matrix target = Matrix::Zero(d, d);
  target(0, 0) = v_ideal;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> identifiable(d, d);
  identifiable.setConstant(false);
  identifiable(0, 0) = true;
  return detail::finalize(std::move(a_hat), target, c.gamma(),
                          Protocol::StrongPostselect, std::move(identifiable));
}

struct BiasReport {
  RealVector gammas;
  RealVector errors;
  double fitted_slope;
  double fit_r2;
  bool exact;  // every error at the floating-point floor
};

inline constexpr double kErrorFloor = 1e-12;

inline RealVector log_spaced(double lo, double hi, Eigen::Index count) {
  RealVector out(count);
  for (Eigen::Index i = 0; i < count; ++i) {
    const double t = (count == 1) ? 0.0 : double(i) / double(count - 1);
    out(i) = lo * std::pow(hi / lo, t);
  }
  return out;
}

// Least-squares slope of log(error) against log(gamma). Errors below the
// floor are excluded; if fewer than two points survive the sweep is exact.
inline BiasReport fit_bias_report(const RealVector& gammas, const RealVector& errors) {
  if (gammas.size() < 4) throw Error("bias fit needs at least 4 gamma points");
  if (gammas.minCoeff() <= 0.0 || gammas.maxCoeff() > 0.1) {
    throw Error("bias fit gammas must lie in (0, 0.1]");
  }
  for (Eigen::Index i = 0; i + 1 < gammas.size(); ++i) {
    if (gammas(i + 1) <= gammas(i)) throw Error("bias fit gammas must increase");
  }
  if (std::log10(gammas.maxCoeff() / gammas.minCoeff()) < 1.5 - 1e-12) {
    throw Error("bias fit gammas must span at least 1.5 decades");
  }
  BiasReport report;
  report.gammas = gammas;
  report.errors = errors;
  std::vector<double> lx, ly;
  for (Eigen::Index i = 0; i < gammas.size(); ++i) {
    if (errors(i) >= kErrorFloor) {
      lx.push_back(std::log(gammas(i)));
      ly.push_back(std::log(errors(i)));
    }
  }
  if (lx.size() < 2) {
    report.exact = true;
    report.fitted_slope = std::numeric_limits<double>::infinity();
    report.fit_r2 = 1.0;
    return report;
  }
  report.exact = false;
  const double n = double(lx.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  report.fitted_slope = sxy / sxx;
  report.fit_r2 = (syy > 0.0) ? (sxy * sxy) / (sxx * syy) : 1.0;
  return report;
}

using ProtocolRunner =
    std::function<ReconstructionResult(const HermitianOperator&, const KrausChannel&)>;

// Sweeps gamma, reconstructs at each point, and fits the order of the
// max-per-element reconstruction error.
inline BiasReport bias_order_fit(const ProtocolRunner& runner,
                                 const HermitianOperator& a_true,
                                 const ChannelSpec& spec, const RealVector& gammas) {
  RealVector errors(gammas.size());
  for (Eigen::Index i = 0; i < gammas.size(); ++i) {
    errors(i) = runner(a_true, build_channel(spec, gammas(i))).max_error();
  }
  return fit_bias_report(gammas, errors);
}

}  // namespace wvsim
