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

#include <array>
#include <memory>
#include <utility>
#include <vector>

#include "wvsim/core.hpp"

namespace wvsim {

struct InvalidSpec : Error {
  using Error::Error;
};
struct GammaOutOfRange : Error {
  using Error::Error;
};
struct StepTooLarge : Error {
  using Error::Error;
};

// Default step for one-sided derivatives in the noise parameter. The channel
// families are smooth at gamma = 0, so a second-order difference with one
// Richardson level reaches well below 1e-8 here.
inline constexpr double kDerivativeStep = 1e-4;

// Parameterized channel family E_gamma. Pauli weights follow the single-qubit
// convention E(rho) = (1-gamma) rho + gamma sum_sigma lambda_sigma sigma rho sigma.
class ChannelSpec {
 public:
  enum class Kind {
    Pauli,
    AmplitudeDamping,
    PhaseDamping,
    ProbUnitary,
    UnitaryMixture,
    Composed,
  };

  struct Component;

  static ChannelSpec pauli(double lambda_x, double lambda_y, double lambda_z) {
    for (double l : {lambda_x, lambda_y, lambda_z}) {
      if (l < 0.0) throw InvalidSpec("Pauli weights must be nonnegative");
    }
    const double sum = lambda_x + lambda_y + lambda_z;
    if (std::abs(sum - 1.0) > 1e-10) {
      throw InvalidSpec(detail::describe("Pauli weights must sum to one", sum - 1.0));
    }
    ChannelSpec s(Kind::Pauli, 2);
    s.pauli_weights_ = {lambda_x, lambda_y, lambda_z};
    return s;
  }

  static ChannelSpec amplitude_damping() { return ChannelSpec(Kind::AmplitudeDamping, 2); }

  static ChannelSpec phase_damping() { return ChannelSpec(Kind::PhaseDamping, 2); }

  static ChannelSpec prob_unitary(const Matrix& u) {
    require_unitary(u);
    ChannelSpec s(Kind::ProbUnitary, u.rows());
    s.unitaries_ = {u};
    s.mixture_weights_ = {1.0};
    return s;
  }

  // (1-gamma) rho + gamma sum_i w_i U_i rho U_i†, with w_i >= 0 summing to one.
  static ChannelSpec unitary_mixture(std::vector<Matrix> us, std::vector<double> ws) {
    if (us.empty() || us.size() != ws.size()) {
      throw InvalidSpec("unitary mixture needs matching unitaries and weights");
    }
    double sum = 0.0;
    for (double w : ws) {
      if (w < 0.0) throw InvalidSpec("mixture weights must be nonnegative");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-10) {
      throw InvalidSpec(detail::describe("mixture weights must sum to one", sum - 1.0));
    }
    const Eigen::Index d = us.front().rows();
    for (const Matrix& u : us) {
      if (u.rows() != d) throw InvalidSpec("mixture unitaries must share one dimension");
      require_unitary(u);
    }
    ChannelSpec s(Kind::UnitaryMixture, d);
    s.unitaries_ = std::move(us);
    s.mixture_weights_ = std::move(ws);
    return s;
  }

  // Sequential composition; component i runs at noise parameter weight_i * gamma.
  static ChannelSpec composed(std::vector<Component> components);

  // The paper's combined amplitude+phase damping channel with shared gamma.
  static ChannelSpec ad_pd(double lambda_ad = 0.5, double lambda_pd = 0.5);

  Kind kind() const { return kind_; }
  Eigen::Index dim() const { return dim_; }

  // lambda_X, lambda_Y, lambda_Z for Pauli specs.
  const std::array<double, 3>& pauli_weights() const { return pauli_weights_; }
  const std::vector<Matrix>& unitaries() const { return unitaries_; }
  const std::vector<double>& mixture_weights() const { return mixture_weights_; }
  const std::vector<Component>& components() const { return *components_; }

 private:
  ChannelSpec(Kind kind, Eigen::Index dim) : kind_(kind), dim_(dim) {}

  static void require_unitary(const Matrix& u) {
    if (u.rows() != u.cols()) throw InvalidSpec("unitary must be square");
    const double dev = max_abs(u.adjoint() * u - identity(u.rows()));
    if (dev > kAlgebraTol) {
      throw InvalidSpec(detail::describe("matrix is not unitary", dev));
    }
  }

  Kind kind_;
  Eigen::Index dim_;
  std::array<double, 3> pauli_weights_{0, 0, 0};
  std::vector<Matrix> unitaries_;
  std::vector<double> mixture_weights_;
  std::shared_ptr<const std::vector<Component>> components_;
};

struct ChannelSpec::Component {
  ChannelSpec spec;
  double weight;  // component noise parameter is weight * gamma
};

inline ChannelSpec ChannelSpec::composed(std::vector<Component> components) {
  if (components.empty()) throw InvalidSpec("composed channel needs components");
  const Eigen::Index d = components.front().spec.dim();
  for (const Component& c : components) {
    if (c.weight < 0.0) throw InvalidSpec("composition weights must be nonnegative");
    if (c.spec.dim() != d) throw InvalidSpec("composed components must share one dimension");
  }
  ChannelSpec s(Kind::Composed, d);
  s.components_ = std::make_shared<const std::vector<Component>>(std::move(components));
  return s;
}

inline ChannelSpec ChannelSpec::ad_pd(double lambda_ad, double lambda_pd) {
  return composed({{amplitude_damping(), lambda_ad}, {phase_damping(), lambda_pd}});
}

// Concrete Kraus set at a fixed gamma. sum_k E_k† E_k = I within 1e-10.
class KrausChannel {
 public:
  KrausChannel(double gamma, std::vector<Matrix> ops, ChannelSpec spec)
      : gamma_(gamma), ops_(std::move(ops)), spec_(std::move(spec)) {
    if (ops_.empty()) throw InvalidSpec("channel needs at least one Kraus operator");
    dim_ = ops_.front().rows();
    Matrix sum = Matrix::Zero(dim_, dim_);
    for (const Matrix& e : ops_) {
      if (e.rows() != dim_ || e.cols() != dim_) {
        throw DimMismatch("Kraus operators must be square with equal dimension");
      }
      sum += e.adjoint() * e;
    }
    const double dev = max_abs(sum - identity(dim_));
    if (dev > kSpectralTol) {
      throw InvalidSpec(detail::describe("Kraus completeness relation violated", dev));
    }
  }

  double gamma() const { return gamma_; }
  Eigen::Index dim() const { return dim_; }
  const std::vector<Matrix>& kraus_ops() const { return ops_; }
  const ChannelSpec& spec() const { return spec_; }

  // Linear extension of the channel to arbitrary matrices.
  Matrix apply_to_matrix(const Matrix& m) const {
    if (m.rows() != dim_ || m.cols() != dim_) {
      throw DimMismatch("channel dimension does not match input");
    }
    Matrix out = Matrix::Zero(dim_, dim_);
    for (const Matrix& e : ops_) out += e * m * e.adjoint();
    return out;
  }

 private:
  double gamma_;
  Eigen::Index dim_;
  std::vector<Matrix> ops_;
  ChannelSpec spec_;
};

inline KrausChannel compose_channels(const KrausChannel& inner, const KrausChannel& outer);

inline KrausChannel build_channel(const ChannelSpec& spec, double gamma) {
  if (gamma < 0.0 || gamma > 1.0) {
    throw GammaOutOfRange(detail::describe("gamma must lie in [0,1]", gamma));
  }
  const Eigen::Index d = spec.dim();
  std::vector<Matrix> ops;
  switch (spec.kind()) {
    case ChannelSpec::Kind::Pauli: {
      ops.push_back(std::sqrt(1.0 - gamma) * identity(2));
      const Matrix sigmas[3] = {pauli_x(), pauli_y(), pauli_z()};
      for (int i = 0; i < 3; ++i) {
        const double w = spec.pauli_weights()[i];
        if (gamma * w > 0.0) ops.push_back(std::sqrt(gamma * w) * sigmas[i]);
      }
      break;
    }
    case ChannelSpec::Kind::AmplitudeDamping: {
      Matrix e0(2, 2), e1(2, 2);
      e0 << 1, 0, 0, std::sqrt(1.0 - gamma);
      e1 << 0, std::sqrt(gamma), 0, 0;
      ops.push_back(e0);
      if (gamma > 0.0) ops.push_back(e1);
      break;
    }
    case ChannelSpec::Kind::PhaseDamping: {
      Matrix e0(2, 2), e1(2, 2);
      e0 << 1, 0, 0, std::sqrt(1.0 - gamma);
      e1 << 0, 0, 0, std::sqrt(gamma);
      ops.push_back(e0);
      if (gamma > 0.0) ops.push_back(e1);
      break;
    }
    case ChannelSpec::Kind::ProbUnitary:
    case ChannelSpec::Kind::UnitaryMixture: {
      ops.push_back(std::sqrt(1.0 - gamma) * identity(d));
      for (std::size_t i = 0; i < spec.unitaries().size(); ++i) {
        const double w = spec.mixture_weights()[i];
        if (gamma * w > 0.0) ops.push_back(std::sqrt(gamma * w) * spec.unitaries()[i]);
      }
      break;
    }
    case ChannelSpec::Kind::Composed: {
      const auto& parts = spec.components();
      for (const auto& part : parts) {
        if (part.weight * gamma > 1.0) {
          throw GammaOutOfRange("component noise parameter exceeds one");
        }
      }
      KrausChannel acc = build_channel(parts.front().spec, parts.front().weight * gamma);
      for (std::size_t i = 1; i < parts.size(); ++i) {
        acc = compose_channels(acc, build_channel(parts[i].spec, parts[i].weight * gamma));
      }
      return KrausChannel(gamma, acc.kraus_ops(), spec);
    }
  }
  return KrausChannel(gamma, std::move(ops), spec);
}

inline DensityMatrix apply_channel(const KrausChannel& c, const DensityMatrix& rho) {
  if (rho.dim() != c.dim()) {
    throw DimMismatch("channel dimension does not match state");
  }
  return validate_density(c.apply_to_matrix(rho.matrix()), kSpectralTol);
}

// Kraus set of outer ∘ inner: all products (outer op) * (inner op).
inline KrausChannel compose_channels(const KrausChannel& inner, const KrausChannel& outer) {
  if (inner.dim() != outer.dim()) {
    throw DimMismatch("cannot compose channels of different dimension");
  }
  std::vector<Matrix> ops;
  ops.reserve(inner.kraus_ops().size() * outer.kraus_ops().size());
  for (const Matrix& o : outer.kraus_ops()) {
    for (const Matrix& i : inner.kraus_ops()) {
      ops.push_back(o * i);
    }
  }
  const ChannelSpec spec = ChannelSpec::composed(
      {{inner.spec(), inner.gamma()}, {outer.spec(), outer.gamma()}});
  return KrausChannel(std::max(inner.gamma(), outer.gamma()), std::move(ops), spec);
}

inline bool check_unital(const KrausChannel& c, double tol) {
  const Matrix mm = identity(c.dim()) / double(c.dim());
  return max_abs(c.apply_to_matrix(mm) - mm) <= tol;
}

inline bool check_trace_preserving(const std::vector<Matrix>& kraus_ops, double tol) {
  if (kraus_ops.empty()) return false;
  const Eigen::Index d = kraus_ops.front().rows();
  Matrix sum = Matrix::Zero(d, d);
  for (const Matrix& e : kraus_ops) sum += e.adjoint() * e;
  return max_abs(sum - identity(d)) <= tol;
}

inline bool check_trace_preserving(const KrausChannel& c, double tol) {
  return check_trace_preserving(c.kraus_ops(), tol);
}

namespace detail {

inline void require_step(double h) {
  if (!(h > 0.0) || h > 1e-2) {
    throw StepTooLarge(describe("derivative step must lie in (0, 1e-2]", h));
  }
}

// d/dgamma E_gamma(m) at gamma = 0 for an arbitrary matrix argument.
// Exact for the gamma-linear families; one-sided second-order difference with
// one Richardson level otherwise (the families exist only for gamma >= 0).
inline Matrix generator_on_matrix(const ChannelSpec& spec, const Matrix& m, double h) {
  switch (spec.kind()) {
    case ChannelSpec::Kind::Pauli: {
      const Matrix sigmas[3] = {pauli_x(), pauli_y(), pauli_z()};
      Matrix out = -m;
      for (int i = 0; i < 3; ++i) {
        const double w = spec.pauli_weights()[i];
        if (w > 0.0) out += w * sigmas[i] * m * sigmas[i];
      }
      return out;
    }
    case ChannelSpec::Kind::ProbUnitary:
    case ChannelSpec::Kind::UnitaryMixture: {
      Matrix out = -m;
      for (std::size_t i = 0; i < spec.unitaries().size(); ++i) {
        const Matrix& u = spec.unitaries()[i];
        out += spec.mixture_weights()[i] * u * m * u.adjoint();
      }
      return out;
    }
    case ChannelSpec::Kind::Composed: {
      // Chain rule at the identity: component generators add.
      Matrix out = Matrix::Zero(m.rows(), m.cols());
      for (const auto& part : spec.components()) {
        out += part.weight * generator_on_matrix(part.spec, m, h);
      }
      return out;
    }
    default: {
      auto one_sided = [&](double step) {
        const Matrix eh = build_channel(spec, step).apply_to_matrix(m);
        const Matrix e2h = build_channel(spec, 2.0 * step).apply_to_matrix(m);
        return ((-3.0 * m + 4.0 * eh - e2h) / (2.0 * step)).eval();
      };
      const Matrix d_h = one_sided(h);
      const Matrix d_half = one_sided(0.5 * h);
      return (4.0 * d_half - d_h) / 3.0;
    }
  }
}

}  // namespace detail

// First-order generator M(rho) = d/dgamma E_gamma(rho) at gamma = 0, applied
// to the given state. Traceless and Hermitian up to the difference tolerance.
inline Matrix channel_derivative_at_zero(const ChannelSpec& spec, const DensityMatrix& rho,
                                         double h = kDerivativeStep) {
  detail::require_step(h);
  if (rho.dim() != spec.dim()) {
    throw DimMismatch("channel dimension does not match state");
  }
  return detail::generator_on_matrix(spec, rho.matrix(), h);
}

// The generator as a linear map, stored through its action on an orthonormal
// Hermitian basis.
class ChannelGenerator {
 public:
  static ChannelGenerator from_spec(const ChannelSpec& spec, double h = kDerivativeStep) {
    detail::require_step(h);
    ChannelGenerator g;
    const Eigen::Index d = spec.dim();
    for (Eigen::Index i = 0; i < d; ++i) {
      Matrix b = Matrix::Zero(d, d);
      b(i, i) = 1.0;
      g.basis_.push_back(b);
    }
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (Eigen::Index i = 0; i < d; ++i) {
      for (Eigen::Index j = i + 1; j < d; ++j) {
        Matrix re = Matrix::Zero(d, d), im = Matrix::Zero(d, d);
        re(i, j) = re(j, i) = inv_sqrt2;
        im(i, j) = Complex(0, -inv_sqrt2);
        im(j, i) = Complex(0, inv_sqrt2);
        g.basis_.push_back(re);
        g.basis_.push_back(im);
      }
    }
    for (const Matrix& b : g.basis_) {
      g.images_.push_back(detail::generator_on_matrix(spec, b, h));
    }
    return g;
  }

  Matrix apply(const DensityMatrix& rho) const { return apply_to_matrix(rho.matrix()); }

  Matrix apply_to_matrix(const Matrix& m) const {
    Matrix out = Matrix::Zero(m.rows(), m.cols());
    for (std::size_t k = 0; k < basis_.size(); ++k) {
      const Complex coeff = (basis_[k].adjoint() * m).trace();
      out += coeff * images_[k];
    }
    return out;
  }

  const std::vector<Matrix>& basis() const { return basis_; }
  const std::vector<Matrix>& images() const { return images_; }

 private:
  ChannelGenerator() = default;
  std::vector<Matrix> basis_;
  std::vector<Matrix> images_;
};

}  // namespace wvsim
