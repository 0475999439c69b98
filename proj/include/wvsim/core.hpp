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

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace wvsim {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

// Tolerance conventions: algebraic identities at 1e-12, eigendecomposition
// round trips at 1e-10. Eigenvalues of a state down to -1e-10 are treated as
// numerical PSD noise and clipped.
inline constexpr double kAlgebraTol = 1e-12;
inline constexpr double kSpectralTol = 1e-10;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotHermitian : Error {
  using Error::Error;
};
struct TraceNotOne : Error {
  using Error::Error;
};
struct NotPositive : Error {
  using Error::Error;
};
struct DimMismatch : Error {
  using Error::Error;
};
struct InvalidState : Error {
  using Error::Error;
};

namespace detail {

inline std::string describe(const char* what, double deviation) {
  std::ostringstream os;
  os << what << " (measured deviation " << deviation << ")";
  return os.str();
}

}  // namespace detail

inline double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

inline bool all_finite(const Matrix& m) {
  return m.allFinite();
}

inline double hermitian_deviation(const Matrix& m) {
  return max_abs(m - m.adjoint().eval());
}

inline Matrix identity(Eigen::Index dim) { return Matrix::Identity(dim, dim); }

inline Matrix pauli_x() {
  Matrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

inline Matrix pauli_y() {
  Matrix m(2, 2);
  m << 0, Complex(0, -1), Complex(0, 1), 0;
  return m;
}

inline Matrix pauli_z() {
  Matrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

// Column-major vectorization: entry (i,j) lands at position j*d+i, so
// vec(A X B) = (B^T ⊗ A) vec(X).
inline Vector vec(const Matrix& m) {
  return Eigen::Map<const Vector>(m.data(), m.size());
}

inline Matrix unvec(const Vector& v, Eigen::Index dim) {
  return Eigen::Map<const Matrix>(v.data(), dim, dim);
}

// Deterministic seeded source for uniform/normal draws. Box-Muller on raw
// 53-bit uniforms, so streams do not depend on libstdc++'s distribution
// implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    cached_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
  }

  Complex complex_normal() { return Complex(normal(), normal()); }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

inline Matrix ginibre(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Matrix g(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      g(i, j) = rng.complex_normal();
    }
  }
  return g;
}

class PureState {
 public:
  explicit PureState(Vector amplitudes) : amplitudes_(std::move(amplitudes)) {
    if (amplitudes_.size() == 0) {
      throw InvalidState("pure state must have positive dimension");
    }
    if (!amplitudes_.allFinite()) {
      throw InvalidState("pure state has non-finite amplitudes");
    }
    const double norm2 = amplitudes_.squaredNorm();
    if (std::abs(norm2 - 1.0) > kAlgebraTol) {
      throw InvalidState(
          detail::describe("pure state not normalized", std::abs(norm2 - 1.0)));
    }
  }

  // Rescales an arbitrary nonzero vector onto the unit sphere.
  static PureState normalized(const Vector& v) {
    const double n = v.norm();
    if (!(n > 0.0) || !std::isfinite(n)) {
      throw InvalidState("cannot normalize zero or non-finite vector");
    }
    return PureState(v / n);
  }

  const Vector& amplitudes() const { return amplitudes_; }
  Eigen::Index dim() const { return amplitudes_.size(); }
  Matrix projector() const {
    return amplitudes_ * amplitudes_.adjoint();
  }

 private:
  Vector amplitudes_;
};

class DensityMatrix;
DensityMatrix validate_density(const Matrix& m, double tol);

// Unit-trace PSD matrix. Construction always goes through validate_density.
class DensityMatrix {
 public:
  const Matrix& matrix() const { return matrix_; }
  Eigen::Index dim() const { return matrix_.rows(); }
  double purity() const { return (matrix_ * matrix_).trace().real(); }

 private:
  friend DensityMatrix validate_density(const Matrix& m, double tol);
  explicit DensityMatrix(Matrix m) : matrix_(std::move(m)) {}
  Matrix matrix_;
};

// Checks Hermiticity, unit trace and positivity at tolerance `tol`.
// The Hermitian part is symmetrized before the eigenvalue check; eigenvalues
// in [-tol, 0) are clipped to zero and the state renormalized.
inline DensityMatrix validate_density(const Matrix& m, double tol = kSpectralTol) {
  if (m.rows() != m.cols()) {
    throw DimMismatch("density matrix must be square");
  }
  if (!all_finite(m)) {
    throw InvalidState("density matrix has non-finite entries");
  }
  const double herm = hermitian_deviation(m);
  if (herm > tol) {
    throw NotHermitian(detail::describe("density matrix not Hermitian", herm));
  }
  const Matrix sym = 0.5 * (m + m.adjoint().eval());
  const double trace_dev = std::abs(sym.trace() - Complex(1.0, 0.0));
  if (trace_dev > tol) {
    throw TraceNotOne(detail::describe("density matrix trace not one", trace_dev));
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  const double min_eig = es.eigenvalues().minCoeff();
  if (min_eig < -tol) {
    throw NotPositive(detail::describe("density matrix not positive", min_eig));
  }
  if (min_eig < 0.0) {
    RealVector clipped = es.eigenvalues().cwiseMax(0.0);
    clipped /= clipped.sum();
    Matrix fixed = es.eigenvectors() * clipped.asDiagonal() *
                   es.eigenvectors().adjoint();
    return DensityMatrix(std::move(fixed));
  }
  return DensityMatrix(sym);
}

inline DensityMatrix density_from_pure(const PureState& psi) {
  return validate_density(psi.projector(), kSpectralTol);
}

inline DensityMatrix maximally_mixed(Eigen::Index dim) {
  return validate_density(Matrix::Identity(dim, dim) / double(dim), kAlgebraTol);
}

class HermitianOperator {
 public:
  explicit HermitianOperator(const Matrix& m) {
    if (m.rows() != m.cols()) {
      throw DimMismatch("Hermitian operator must be square");
    }
    if (!all_finite(m)) {
      throw InvalidState("Hermitian operator has non-finite entries");
    }
    const double dev = hermitian_deviation(m);
    if (dev > kAlgebraTol * std::max(1.0, max_abs(m))) {
      throw NotHermitian(detail::describe("operator not Hermitian", dev));
    }
    matrix_ = 0.5 * (m + m.adjoint().eval());
  }

  const Matrix& matrix() const { return matrix_; }
  Eigen::Index dim() const { return matrix_.rows(); }

 private:
  Matrix matrix_;
};

struct SpectralDecomposition {
  RealVector eigenvalues;  // ascending
  Matrix eigenvectors;     // orthonormal columns, phase-fixed

  Matrix reconstruct() const {
    return eigenvectors * eigenvalues.cast<Complex>().asDiagonal() *
           eigenvectors.adjoint();
  }
};

namespace detail {

// Phase convention: first component of magnitude > 1e-9 is made real positive.
inline void fix_phase(Eigen::Ref<Vector> v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double a = std::abs(v(i));
    if (a > 1e-9) {
      v *= std::conj(v(i)) / a;
      v(i) = Complex(std::abs(v(i)), 0.0);
      return;
    }
  }
}

// Replaces the eigenvectors of a degenerate group by a deterministic basis:
// project the canonical basis vectors onto the eigenspace and Gram-Schmidt
// in index order. The result does not depend on the solver's arbitrary
// rotation within the subspace.
inline void canonicalize_group(Matrix& vectors, Eigen::Index begin,
                               Eigen::Index count) {
  const Eigen::Index d = vectors.rows();
  const Matrix projector = vectors.middleCols(begin, count) *
                           vectors.middleCols(begin, count).adjoint();
  Matrix basis(d, count);
  Eigen::Index found = 0;
  for (Eigen::Index j = 0; j < d && found < count; ++j) {
    Vector w = projector.col(j);  // projector * e_j
    for (Eigen::Index k = 0; k < found; ++k) {
      w -= basis.col(k).dot(w) * basis.col(k);
    }
    const double n = w.norm();
    if (n > 1e-8) {
      basis.col(found++) = w / n;
    }
  }
  if (found < count) {
    throw Error("failed to canonicalize degenerate eigenspace");
  }
  vectors.middleCols(begin, count) = basis;
}

}  // namespace detail

// Ascending eigenvalues with a reproducible eigenvector convention: first
// nonzero component real positive, degenerate subspaces re-based on the
// canonical axes.
inline SpectralDecomposition spectral_decompose(const HermitianOperator& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a.matrix());
  SpectralDecomposition out{es.eigenvalues(), es.eigenvectors()};
  const Eigen::Index d = out.eigenvalues.size();
  const double scale =
      std::max(1.0, out.eigenvalues.cwiseAbs().maxCoeff());
  Eigen::Index i = 0;
  while (i < d) {
    Eigen::Index j = i + 1;
    while (j < d && out.eigenvalues(j) - out.eigenvalues(i) <= 1e-10 * scale) {
      ++j;
    }
    if (j - i > 1) {
      detail::canonicalize_group(out.eigenvectors, i, j - i);
    }
    i = j;
  }
  for (Eigen::Index c = 0; c < d; ++c) {
    detail::fix_phase(out.eigenvectors.col(c));
  }
  return out;
}

// Eigenvalue groups of a decomposition: indices [begin, begin+count) sharing
// one eigenvalue up to 1e-10 relative. Used for PVM projectors.
struct EigenGroup {
  double value;
  Eigen::Index begin;
  Eigen::Index count;
};

inline std::vector<EigenGroup> eigen_groups(const SpectralDecomposition& sd) {
  std::vector<EigenGroup> groups;
  const Eigen::Index d = sd.eigenvalues.size();
  const double scale = std::max(1.0, sd.eigenvalues.cwiseAbs().maxCoeff());
  Eigen::Index i = 0;
  while (i < d) {
    Eigen::Index j = i + 1;
    while (j < d && sd.eigenvalues(j) - sd.eigenvalues(i) <= 1e-10 * scale) {
      ++j;
    }
    groups.push_back({sd.eigenvalues.segment(i, j - i).mean(), i, j - i});
    i = j;
  }
  return groups;
}

// Haar-distributed unitary: QR of a Ginibre matrix with the R diagonal's
// phases folded into Q.
inline Matrix haar_unitary(Eigen::Index dim, Rng& rng) {
  const Matrix g = ginibre(dim, dim, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < dim; ++i) {
    const Complex rii = r(i, i);
    const double a = std::abs(rii);
    q.col(i) *= (a > 0.0) ? rii / a : Complex(1.0, 0.0);
  }
  return q;
}

inline Matrix haar_unitary(Eigen::Index dim, std::uint64_t seed) {
  if (dim < 1) {
    throw Error("haar_unitary requires dim >= 1");
  }
  Rng rng(seed);
  return haar_unitary(dim, rng);
}

enum class StateKind { Pure, Mixed };

// Pure: Haar-random state vector. Mixed: partial trace of a Haar-random
// bipartite pure state (Ginibre G with rho = GG†/Tr).
inline DensityMatrix random_state(Eigen::Index dim, StateKind kind, Rng& rng) {
  if (kind == StateKind::Pure) {
    const Vector v = ginibre(dim, 1, rng).col(0);
    const PureState psi = PureState::normalized(v);
    return density_from_pure(psi);
  }
  const Matrix g = ginibre(dim, dim, rng);
  Matrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  return validate_density(rho, kSpectralTol);
}

inline DensityMatrix random_state(Eigen::Index dim, StateKind kind,
                                  std::uint64_t seed) {
  if (dim < 1) {
    throw Error("random_state requires dim >= 1");
  }
  Rng rng(seed);
  return random_state(dim, kind, rng);
}

inline PureState random_pure_state(Eigen::Index dim, Rng& rng) {
  return PureState::normalized(ginibre(dim, 1, rng).col(0));
}

// Common qubit kets.
inline PureState ket_zero() {
  Vector v(2);
  v << 1, 0;
  return PureState(std::move(v));
}

inline PureState ket_one() {
  Vector v(2);
  v << 0, 1;
  return PureState(std::move(v));
}

inline PureState ket_plus() {
  Vector v(2);
  v << 1, 1;
  return PureState::normalized(v);
}

inline PureState ket_minus() {
  Vector v(2);
  v << 1, -1;
  return PureState::normalized(v);
}

inline PureState ket_plus_i() {
  Vector v(2);
  v << Complex(1, 0), Complex(0, 1);
  return PureState::normalized(v);
}

inline DensityMatrix diagonal_qubit(double top) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = top;
  m(1, 1) = 1.0 - top;
  return validate_density(m, kSpectralTol);
}

}  // namespace wvsim
