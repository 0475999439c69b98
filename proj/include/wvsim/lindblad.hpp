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
#include <utility>
#include <vector>

#include <unsupported/Eigen/KroneckerProduct>

#include "wvsim/core.hpp"

namespace wvsim {

struct RateOutOfRange : Error {
  using Error::Error;
};

// Position-grid pointer with a spectrally constructed momentum operator
// (DFT-diagonalized, periodic boundary). The grid spans [-L, L).
class DiscretizedProbe {
 public:
  DiscretizedProbe(Eigen::Index points, double half_width)
      : points_(points), half_width_(half_width) {
    if (points < 2 || (points & (points - 1)) != 0) {
      throw Error("probe grid size must be a power of two");
    }
    if (!(half_width > 0.0)) {
      throw Error("probe half width must be positive");
    }
    // Plane-wave columns V(j, m) = exp(i k_m x_j) / sqrt(N) with the usual
    // FFT wavenumber layout; P = V diag(k) V†.
    const Eigen::Index n = points_;
    Matrix v(n, n);
    RealVector k(n);
    for (Eigen::Index m = 0; m < n; ++m) {
      const double m_shifted = (m < n / 2) ? double(m) : double(m) - double(n);
      k(m) = M_PI * m_shifted / half_width_;
    }
    const double inv_sqrt_n = 1.0 / std::sqrt(double(n));
    for (Eigen::Index j = 0; j < n; ++j) {
      const double x = position(j);
      for (Eigen::Index m = 0; m < n; ++m) {
        v(j, m) = std::polar(inv_sqrt_n, k(m) * x);
      }
    }
    momentum_ = v * k.cast<Complex>().asDiagonal() * v.adjoint();
    momentum_ = 0.5 * (momentum_ + momentum_.adjoint().eval());
  }

  Eigen::Index points() const { return points_; }
  double half_width() const { return half_width_; }
  double spacing() const { return 2.0 * half_width_ / double(points_); }
  double position(Eigen::Index j) const {
    return -half_width_ + double(j) * spacing();
  }
  const Matrix& momentum() const { return momentum_; }

  // Grid Gaussian of the given spread centered at zero, unit norm.
  Vector gaussian_state(double spread) const {
    Vector phi(points_);
    for (Eigen::Index j = 0; j < points_; ++j) {
      const double x = position(j);
      phi(j) = std::exp(-x * x / (4.0 * spread * spread));
    }
    return phi / phi.norm();
  }

 private:
  Eigen::Index points_;
  double half_width_;
  Matrix momentum_;
};

// Vectorized generator of the joint system+probe master equation, split as
// g_tilde * L_H + gamma_tilde * L_L. The superoperator acts on column-major
// vec(rho); its action is evaluated through the Kronecker structure, and the
// dense matrices are materialized on demand.
class Liouvillian {
 public:
  Liouvillian(const HermitianOperator& a, const Matrix& probe_coupling,
              std::vector<std::pair<Matrix, double>> lindblad_ops, double g_tilde,
              double gamma_tilde)
      : g_tilde_(g_tilde), gamma_tilde_(gamma_tilde) {
    if (probe_coupling.rows() != probe_coupling.cols()) {
      throw DimMismatch("probe coupling operator must be square");
    }
    const Eigen::Index d = a.dim();
    const Eigen::Index n_probe = probe_coupling.rows();
    joint_dim_ = d * n_probe;
    hamiltonian_ = Eigen::kroneckerProduct(a.matrix(), probe_coupling);

    double max_rate = 0.0;
    for (auto& [op, rate] : lindblad_ops) {
      if (op.rows() != d || op.cols() != d) {
        throw DimMismatch("Lindblad operators act on the system factor");
      }
      if (!(rate > 0.0) || rate > 1.0) {
        throw RateOutOfRange(detail::describe("rates must lie in (0,1]", rate));
      }
      max_rate = std::max(max_rate, rate);
    }
    if (!lindblad_ops.empty() && std::abs(max_rate - 1.0) > 1e-9) {
      throw RateOutOfRange(
          detail::describe("largest relative rate must be one", max_rate));
    }
    for (auto& [op, rate] : lindblad_ops) {
      Jump j;
      j.op = Eigen::kroneckerProduct(op, identity(n_probe));
      j.op_dag_op = j.op.adjoint() * j.op;
      j.rate = rate;
      jumps_.push_back(std::move(j));
    }
  }

  Liouvillian(const HermitianOperator& a, const DiscretizedProbe& probe,
              std::vector<std::pair<Matrix, double>> lindblad_ops, double g_tilde,
              double gamma_tilde)
      : Liouvillian(a, probe.momentum(), std::move(lindblad_ops), g_tilde,
                    gamma_tilde) {}

  Eigen::Index joint_dim() const { return joint_dim_; }
  Eigen::Index super_dim() const { return joint_dim_ * joint_dim_; }
  double g_tilde() const { return g_tilde_; }
  double gamma_tilde() const { return gamma_tilde_; }
  const Matrix& joint_hamiltonian() const { return hamiltonian_; }

  // L_H v = vec(-i (H X - X H)).
  Vector apply_hamiltonian_part(const Vector& v) const {
    const Matrix x = unvec(v, joint_dim_);
    return vec((Complex(0, -1) * (hamiltonian_ * x - x * hamiltonian_)).eval());
  }

  // L_L v = vec(sum_k rate_k (L X L† - {L†L, X}/2)).
  Vector apply_dissipator_part(const Vector& v) const {
    const Matrix x = unvec(v, joint_dim_);
    Matrix out = Matrix::Zero(joint_dim_, joint_dim_);
    for (const Jump& j : jumps_) {
      out += j.rate * (j.op * x * j.op.adjoint() -
                       0.5 * (j.op_dag_op * x + x * j.op_dag_op));
    }
    return vec(out);
  }

  Vector apply_hamiltonian_part_adjoint(const Vector& v) const {
    return -apply_hamiltonian_part(v);
  }

  Vector apply_dissipator_part_adjoint(const Vector& v) const {
    const Matrix x = unvec(v, joint_dim_);
    Matrix out = Matrix::Zero(joint_dim_, joint_dim_);
    for (const Jump& j : jumps_) {
      out += j.rate * (j.op.adjoint() * x * j.op -
                       0.5 * (j.op_dag_op * x + x * j.op_dag_op));
    }
    return vec(out);
  }

  Vector apply_full(const Vector& v) const {
    Vector out = g_tilde_ * apply_hamiltonian_part(v);
    if (!jumps_.empty()) out += gamma_tilde_ * apply_dissipator_part(v);
    return out;
  }

  Vector apply_full_adjoint(const Vector& v) const {
    Vector out = g_tilde_ * apply_hamiltonian_part_adjoint(v);
    if (!jumps_.empty()) out += gamma_tilde_ * apply_dissipator_part_adjoint(v);
    return out;
  }

  // Dense materializations (quadratic memory in the joint dimension).
  Matrix hamiltonian_part_matrix() const {
    const Matrix id = identity(joint_dim_);
    return Complex(0, -1) *
           (Eigen::kroneckerProduct(id, hamiltonian_).eval() -
            Eigen::kroneckerProduct(hamiltonian_.transpose().eval(), id).eval());
  }

  Matrix dissipator_part_matrix() const {
    const Matrix id = identity(joint_dim_);
    Matrix out = Matrix::Zero(super_dim(), super_dim());
    for (const Jump& j : jumps_) {
      out += j.rate *
             (Eigen::kroneckerProduct(j.op.conjugate().eval(), j.op).eval() -
              0.5 * Eigen::kroneckerProduct(id, j.op_dag_op).eval() -
              0.5 * Eigen::kroneckerProduct(j.op_dag_op.transpose().eval(), id).eval());
    }
    return out;
  }

  Matrix matrix() const {
    return g_tilde_ * hamiltonian_part_matrix() +
           gamma_tilde_ * dissipator_part_matrix();
  }

  // Crude upper bound on the full generator's spectral norm, used to pick the
  // step count for the exponential action.
  double norm_bound() const {
    double h = hamiltonian_.norm();  // Frobenius
    double l = 0.0;
    for (const Jump& j : jumps_) l += j.rate * 2.0 * j.op_dag_op.norm();
    return 2.0 * g_tilde_ * h + gamma_tilde_ * l;
  }

 private:
  struct Jump {
    Matrix op;
    Matrix op_dag_op;
    double rate;
  };

  Eigen::Index joint_dim_;
  double g_tilde_;
  double gamma_tilde_;
  Matrix hamiltonian_;
  std::vector<Jump> jumps_;
};

inline Liouvillian build_liouvillian(const HermitianOperator& a,
                                     const DiscretizedProbe& probe,
                                     std::vector<std::pair<Matrix, double>> lindblad_ops,
                                     double g_tilde, double gamma_tilde) {
  return Liouvillian(a, probe, std::move(lindblad_ops), g_tilde, gamma_tilde);
}

namespace detail {

using SuperOp = std::function<Vector(const Vector&)>;

// exp(M) v by scaling plus a truncated Taylor sum on each substep.
inline Vector exp_action(const SuperOp& apply, double norm_bound, const Vector& v) {
  const int steps = std::max(1, int(std::ceil(norm_bound / 0.5)));
  Vector w = v;
  for (int s = 0; s < steps; ++s) {
    Vector term = w;
    Vector acc = w;
    for (int k = 1; k <= 80; ++k) {
      term = apply(term) / (double(k) * double(steps));
      acc += term;
      if (term.norm() <= 1e-16 * acc.norm()) break;
    }
    w = acc;
  }
  return w;
}

// Largest singular value of an implicitly defined operator via power
// iteration on G†G with fixed seeding. With v converging to the top right
// singular vector, ||G v|| converges to sigma_max.
inline double spectral_norm(const SuperOp& apply, const SuperOp& apply_adjoint,
                            Eigen::Index dim, int restarts = 3) {
  double best = 0.0;
  for (int r = 0; r < restarts; ++r) {
    Rng rng(0x5eed + 7919 * r);
    Vector v = ginibre(dim, 1, rng).col(0);
    v /= v.norm();
    double sigma = 0.0;
    double sigma_prev = -1.0;
    for (int it = 0; it < 200; ++it) {
      const Vector w = apply(v);
      sigma = w.norm();
      if (sigma == 0.0) break;
      const Vector u = apply_adjoint(w);
      const double un = u.norm();
      if (un == 0.0) break;
      v = u / un;
      if (it > 2 && std::abs(sigma - sigma_prev) <= 1e-6 * sigma) break;
      sigma_prev = sigma;
    }
    best = std::max(best, sigma);
  }
  return best;
}

}  // namespace detail

// exp(t (g L_H + gamma L_L)) vec(rho0).
inline Vector propagate(const Liouvillian& liouv, const Vector& rho0_vec, double t) {
  if (t < 0.0) throw Error("propagation time must be nonnegative");
  if (rho0_vec.size() != liouv.super_dim()) {
    throw DimMismatch("vectorized state has wrong dimension");
  }
  if (t == 0.0) return rho0_vec;
  const auto apply = [&](const Vector& v) { return (t * liouv.apply_full(v)).eval(); };
  return detail::exp_action(apply, t * liouv.norm_bound(), rho0_vec);
}

// Factorized propagation exp(t g L_H) exp(t gamma L_L) vec(rho0): noise first,
// ideal interaction after.
inline Vector propagate_factorized(const Liouvillian& liouv, const Vector& rho0_vec,
                                   double t) {
  if (rho0_vec.size() != liouv.super_dim()) {
    throw DimMismatch("vectorized state has wrong dimension");
  }
  const auto apply_l = [&](const Vector& v) {
    return (t * liouv.gamma_tilde() * liouv.apply_dissipator_part(v)).eval();
  };
  const auto apply_h = [&](const Vector& v) {
    return (t * liouv.g_tilde() * liouv.apply_hamiltonian_part(v)).eval();
  };
  const double bound = t * liouv.norm_bound();
  return detail::exp_action(apply_h, bound, detail::exp_action(apply_l, bound, rho0_vec));
}

// Spectral norm of exp(t(g L_H + gamma L_L)) - exp(t g L_H) exp(t gamma L_L)
// next to the first commutator term (g t)(gamma t)/2 ||[L_L, L_H]||.
inline std::pair<double, double> factorization_error(const Liouvillian& liouv, double t) {
  const double g = liouv.g_tilde(), gamma = liouv.gamma_tilde();
  const double bound = t * liouv.norm_bound();
  const auto full = [&](const Vector& v) { return (t * liouv.apply_full(v)).eval(); };
  const auto full_adj = [&](const Vector& v) {
    return (t * liouv.apply_full_adjoint(v)).eval();
  };
  const auto ham = [&](const Vector& v) {
    return (t * g * liouv.apply_hamiltonian_part(v)).eval();
  };
  const auto ham_adj = [&](const Vector& v) {
    return (t * g * liouv.apply_hamiltonian_part_adjoint(v)).eval();
  };
  const auto dis = [&](const Vector& v) {
    return (t * gamma * liouv.apply_dissipator_part(v)).eval();
  };
  const auto dis_adj = [&](const Vector& v) {
    return (t * gamma * liouv.apply_dissipator_part_adjoint(v)).eval();
  };

  const detail::SuperOp diff = [&](const Vector& v) {
    const Vector a = detail::exp_action(full, bound, v);
    const Vector b =
        detail::exp_action(ham, bound, detail::exp_action(dis, bound, v));
    return (a - b).eval();
  };
  const detail::SuperOp diff_adj = [&](const Vector& v) {
    const Vector a = detail::exp_action(full_adj, bound, v);
    const Vector b =
        detail::exp_action(dis_adj, bound, detail::exp_action(ham_adj, bound, v));
    return (a - b).eval();
  };
  const double error_norm =
      detail::spectral_norm(diff, diff_adj, liouv.super_dim());

  const detail::SuperOp comm = [&](const Vector& v) {
    return (liouv.apply_dissipator_part(liouv.apply_hamiltonian_part(v)) -
            liouv.apply_hamiltonian_part(liouv.apply_dissipator_part(v)))
        .eval();
  };
  const detail::SuperOp comm_adj = [&](const Vector& v) {
    return (liouv.apply_hamiltonian_part_adjoint(liouv.apply_dissipator_part_adjoint(v)) -
            liouv.apply_dissipator_part_adjoint(liouv.apply_hamiltonian_part_adjoint(v)))
        .eval();
  };
  const double comm_norm =
      detail::spectral_norm(comm, comm_adj, liouv.super_dim());
  const double predicted = 0.5 * (g * t) * (gamma * t) * comm_norm;
  return {error_norm, predicted};
}

// Right-hand sides of the SM validity conditions
// g t << 2 ||L_L|| / ||[L_L, L_H]||, gamma t << 2 ||L_H|| / ||[L_L, L_H]||,
// in the spectral norm. A vanishing commutator yields +infinity.
inline std::pair<double, double> validity_margins(const Liouvillian& liouv) {
  const detail::SuperOp ham = [&](const Vector& v) {
    return liouv.apply_hamiltonian_part(v);
  };
  const detail::SuperOp ham_adj = [&](const Vector& v) {
    return liouv.apply_hamiltonian_part_adjoint(v);
  };
  const detail::SuperOp dis = [&](const Vector& v) {
    return liouv.apply_dissipator_part(v);
  };
  const detail::SuperOp dis_adj = [&](const Vector& v) {
    return liouv.apply_dissipator_part_adjoint(v);
  };
  const detail::SuperOp comm = [&](const Vector& v) {
    return (liouv.apply_dissipator_part(liouv.apply_hamiltonian_part(v)) -
            liouv.apply_hamiltonian_part(liouv.apply_dissipator_part(v)))
        .eval();
  };
  const detail::SuperOp comm_adj = [&](const Vector& v) {
    return (liouv.apply_hamiltonian_part_adjoint(liouv.apply_dissipator_part_adjoint(v)) -
            liouv.apply_dissipator_part_adjoint(liouv.apply_hamiltonian_part_adjoint(v)))
        .eval();
  };
  const Eigen::Index dim = liouv.super_dim();
  const double h_norm = detail::spectral_norm(ham, ham_adj, dim);
  const double l_norm = detail::spectral_norm(dis, dis_adj, dim);
  const double c_norm = detail::spectral_norm(comm, comm_adj, dim);
  const double scale = std::max(1.0, h_norm * l_norm);
  if (c_norm <= 1e-10 * scale) {
    const double inf = std::numeric_limits<double>::infinity();
    return {inf, inf};
  }
  return {2.0 * l_norm / c_norm, 2.0 * h_norm / c_norm};
}

// Postselected pointer mean of a joint (system x probe) state, used to read a
// weak-value estimate off a propagated density matrix.
inline double postselected_pointer_mean(const Vector& joint_vec, const PureState& post,
                                        const DiscretizedProbe& probe) {
  const Eigen::Index d = post.dim();
  const Eigen::Index n = probe.points();
  const Matrix rho = unvec(joint_vec, d * n);
  double mass = 0.0;
  double mean = 0.0;
  for (Eigen::Index q = 0; q < n; ++q) {
    Complex p = 0.0;
    for (Eigen::Index s = 0; s < d; ++s) {
      for (Eigen::Index sp = 0; sp < d; ++sp) {
        p += std::conj(post.amplitudes()(s)) * rho(s * n + q, sp * n + q) *
             post.amplitudes()(sp);
      }
    }
    mass += p.real();
    mean += probe.position(q) * p.real();
  }
  if (mass <= kAlgebraTol) {
    throw Error("postselected pointer mass vanishes");
  }
  return mean / mass;
}

}  // namespace wvsim
