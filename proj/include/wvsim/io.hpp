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

#include <cstdio>
#include <fstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "wvsim/channels.hpp"
#include "wvsim/core.hpp"
#include "wvsim/haar_stats.hpp"
#include "wvsim/learning.hpp"
#include "wvsim/protocols.hpp"

namespace wvsim {

using Json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "wvsim 0.1.0";

struct ConfigError : Error {
  using Error::Error;
};

inline std::string fnv1a_hex(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

// Shortest-exact decimal for CSV cells; reparses to the identical double.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf);
}

namespace detail {

inline const Json& require_field(const Json& j, const char* name) {
  const auto it = j.find(name);
  if (it == j.end()) {
    throw ConfigError(std::string("missing field '") + name + "'");
  }
  return *it;
}

inline Complex parse_complex(const Json& j, const char* field) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ConfigError(std::string("field '") + field +
                      "' expects complex entries as [re, im]");
  }
  return Complex(j[0].get<double>(), j[1].get<double>());
}

inline Matrix parse_matrix(const Json& j, const char* field) {
  if (!j.is_array() || j.empty()) {
    throw ConfigError(std::string("field '") + field + "' expects a matrix");
  }
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  Matrix m(rows, rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != rows) {
      throw ConfigError(std::string("field '") + field + "' must be square");
    }
    for (Eigen::Index k = 0; k < rows; ++k) {
      m(i, k) = parse_complex(row[static_cast<std::size_t>(k)], field);
    }
  }
  return m;
}

inline Vector parse_amplitudes(const Json& j, const char* field) {
  if (!j.is_array() || j.empty()) {
    throw ConfigError(std::string("field '") + field + "' expects amplitudes");
  }
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = parse_complex(j[i], field);
  }
  return v;
}

inline Json complex_to_json(const Complex& c) { return Json::array({c.real(), c.imag()}); }

inline Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(complex_to_json(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace detail

inline PureState parse_pure_state(const Json& j, const char* field) {
  if (j.is_object() && j.contains("named")) {
    const std::string name = j["named"].get<std::string>();
    if (name == "zero") return ket_zero();
    if (name == "one") return ket_one();
    if (name == "plus") return ket_plus();
    if (name == "minus") return ket_minus();
    if (name == "plus_i" || name == "i") return ket_plus_i();
    throw ConfigError(std::string("field '") + field + "': unknown named state '" +
                      name + "'");
  }
  if (j.is_object() && j.contains("pure")) {
    return PureState::normalized(detail::parse_amplitudes(j["pure"], field));
  }
  throw ConfigError(std::string("field '") + field +
                    "' expects {named: ...} or {pure: [...]}");
}

inline DensityMatrix parse_density(const Json& j, const char* field) {
  if (j.is_object() && j.contains("named")) {
    const std::string name = j["named"].get<std::string>();
    if (name == "maximally_mixed") return maximally_mixed(2);
    return density_from_pure(parse_pure_state(j, field));
  }
  if (j.is_object() && j.contains("pure")) {
    return density_from_pure(parse_pure_state(j, field));
  }
  if (j.is_object() && j.contains("density")) {
    return validate_density(detail::parse_matrix(j["density"], field), kSpectralTol);
  }
  throw ConfigError(std::string("field '") + field +
                    "' expects {named|pure|density: ...}");
}

inline ChannelSpec parse_channel(const Json& j) {
  const std::string kind = detail::require_field(j, "kind").get<std::string>();
  if (kind == "pauli") {
    const Json& w = detail::require_field(j, "weights");
    if (!w.is_array() || w.size() != 3) {
      throw ConfigError("field 'weights' expects [lambda_x, lambda_y, lambda_z]");
    }
    return ChannelSpec::pauli(w[0].get<double>(), w[1].get<double>(), w[2].get<double>());
  }
  if (kind == "amplitude_damping") return ChannelSpec::amplitude_damping();
  if (kind == "phase_damping") return ChannelSpec::phase_damping();
  if (kind == "prob_unitary") {
    return ChannelSpec::prob_unitary(
        detail::parse_matrix(detail::require_field(j, "unitary"), "unitary"));
  }
  if (kind == "unitary_mixture") {
    const Json& us = detail::require_field(j, "unitaries");
    const Json& ws = detail::require_field(j, "weights");
    if (!us.is_array() || !ws.is_array() || us.size() != ws.size()) {
      throw ConfigError("unitary_mixture expects matching 'unitaries' and 'weights'");
    }
    std::vector<Matrix> unitaries;
    std::vector<double> weights;
    for (std::size_t i = 0; i < us.size(); ++i) {
      unitaries.push_back(detail::parse_matrix(us[i], "unitaries"));
      weights.push_back(ws[i].get<double>());
    }
    return ChannelSpec::unitary_mixture(std::move(unitaries), std::move(weights));
  }
  if (kind == "ad_pd") {
    const double lad = j.value("lambda_ad", 0.5);
    const double lpd = j.value("lambda_pd", 0.5);
    return ChannelSpec::ad_pd(lad, lpd);
  }
  if (kind == "composed") {
    const Json& parts = detail::require_field(j, "components");
    if (!parts.is_array() || parts.empty()) {
      throw ConfigError("composed channel expects nonempty 'components'");
    }
    std::vector<ChannelSpec::Component> components;
    for (const Json& p : parts) {
      components.push_back({parse_channel(detail::require_field(p, "channel")),
                            detail::require_field(p, "weight").get<double>()});
    }
    return ChannelSpec::composed(std::move(components));
  }
  throw ConfigError("unknown channel kind '" + kind + "'");
}

inline Json channel_to_json(const ChannelSpec& spec) {
  Json j;
  switch (spec.kind()) {
    case ChannelSpec::Kind::Pauli:
      j["kind"] = "pauli";
      j["weights"] = {spec.pauli_weights()[0], spec.pauli_weights()[1],
                      spec.pauli_weights()[2]};
      break;
    case ChannelSpec::Kind::AmplitudeDamping:
      j["kind"] = "amplitude_damping";
      break;
    case ChannelSpec::Kind::PhaseDamping:
      j["kind"] = "phase_damping";
      break;
    case ChannelSpec::Kind::ProbUnitary:
      j["kind"] = "prob_unitary";
      j["unitary"] = detail::matrix_to_json(spec.unitaries().front());
      break;
    case ChannelSpec::Kind::UnitaryMixture: {
      j["kind"] = "unitary_mixture";
      Json us = Json::array();
      for (const Matrix& u : spec.unitaries()) us.push_back(detail::matrix_to_json(u));
      j["unitaries"] = std::move(us);
      j["weights"] = spec.mixture_weights();
      break;
    }
    case ChannelSpec::Kind::Composed: {
      j["kind"] = "composed";
      Json parts = Json::array();
      for (const auto& part : spec.components()) {
        Json p;
        p["channel"] = channel_to_json(part.spec);
        p["weight"] = part.weight;
        parts.push_back(std::move(p));
      }
      j["components"] = std::move(parts);
      break;
    }
  }
  return j;
}

// Parsed experiment description. Field accessors raise ConfigError naming the
// missing or malformed field.
class ExperimentConfig {
 public:
  static ExperimentConfig from_json(Json j) {
    ExperimentConfig config(std::move(j));
    if (!config.raw_.contains("seed")) {
      throw ConfigError("missing field 'seed'");
    }
    if (!config.raw_["seed"].is_number_unsigned()) {
      throw ConfigError("field 'seed' expects a nonnegative integer");
    }
    return config;
  }

  static ExperimentConfig from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
      throw ConfigError("cannot open config file '" + path + "'");
    }
    Json j;
    try {
      in >> j;
    } catch (const std::exception& e) {
      throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return from_json(std::move(j));
  }

  std::uint64_t seed() const { return raw_["seed"].get<std::uint64_t>(); }
  void override_seed(std::uint64_t seed) { raw_["seed"] = seed; }

  HermitianOperator operator_a() const {
    try {
      return HermitianOperator(
          detail::parse_matrix(detail::require_field(raw_, "operator"), "operator"));
    } catch (const NotHermitian&) {
      throw ConfigError("field 'operator' must be Hermitian");
    }
  }

  DensityMatrix pre() const {
    return parse_density(detail::require_field(raw_, "pre"), "pre");
  }

  PureState post() const {
    return parse_pure_state(detail::require_field(raw_, "post"), "post");
  }

  ChannelSpec channel() const {
    return parse_channel(detail::require_field(raw_, "channel"));
  }

  GaussianProbe probe() const {
    const Json& p = detail::require_field(raw_, "probe");
    return GaussianProbe(detail::require_field(p, "spread").get<double>(),
                         detail::require_field(p, "coupling").get<double>());
  }

  double gamma() const {
    return detail::require_field(raw_, "gamma").get<double>();
  }

  RealVector gammas() const {
    const Json& g = detail::require_field(raw_, "gammas");
    if (g.is_array()) {
      RealVector out(static_cast<Eigen::Index>(g.size()));
      for (std::size_t i = 0; i < g.size(); ++i) {
        out(static_cast<Eigen::Index>(i)) = g[i].get<double>();
      }
      return out;
    }
    if (g.is_object()) {
      const double lo = detail::require_field(g, "min").get<double>();
      const double hi = detail::require_field(g, "max").get<double>();
      const auto count = detail::require_field(g, "count").get<Eigen::Index>();
      return log_spaced(lo, hi, count);
    }
    throw ConfigError("field 'gammas' expects a list or {min,max,count}");
  }

  bool has(const char* field) const { return raw_.contains(field); }
  const Json& raw() const { return raw_; }

  // Hash of the effective config (after any seed override).
  std::string config_hash() const { return fnv1a_hex(raw_.dump()); }

 private:
  explicit ExperimentConfig(Json j) : raw_(std::move(j)) {}
  Json raw_;
};

// ---------------------------------------------------------------------------
// Export helpers. CSV: comma separated, '.' decimal, header row mandatory.
// JSON: stable key order, config hash and tool version stamped by the CLI.

inline std::string bias_report_csv(const BiasReport& report) {
  std::string out = "gamma,error\n";
  for (Eigen::Index i = 0; i < report.gammas.size(); ++i) {
    out += format_double(report.gammas(i));
    out += ",";
    out += format_double(report.errors(i));
    out += "\n";
  }
  return out;
}

inline Json bias_report_json(const BiasReport& report) {
  Json j;
  j["slope"] = report.exact ? Json("inf") : Json(report.fitted_slope);
  j["r2"] = report.fit_r2;
  j["exact"] = report.exact;
  if (report.exact) {
    j["verdict"] = "exact";
  } else if (report.fitted_slope >= 1.9) {
    j["verdict"] = "quadratic";
  } else if (report.fitted_slope <= 1.2) {
    j["verdict"] = "linear";
  } else {
    j["verdict"] = "intermediate";
  }
  j["gammas"] = std::vector<double>(report.gammas.data(),
                                    report.gammas.data() + report.gammas.size());
  j["errors"] = std::vector<double>(report.errors.data(),
                                    report.errors.data() + report.errors.size());
  return j;
}

inline std::string probe_distribution_csv(const ProbeDistribution& dist) {
  std::string out = "position,density\n";
  for (Eigen::Index i = 0; i < dist.grid.size(); ++i) {
    out += format_double(dist.grid(i));
    out += ",";
    out += format_double(dist.density(i));
    out += "\n";
  }
  return out;
}

inline Json reconstruction_json(const ReconstructionResult& rec) {
  Json j;
  j["protocol"] = rec.protocol == Protocol::WVMP
                      ? "wvmp"
                      : (rec.protocol == Protocol::Strong ? "strong"
                                                          : "strong_postselect");
  j["gamma"] = rec.gamma;
  j["a_hat"] = detail::matrix_to_json(rec.a_hat.matrix());
  Json err = Json::array(), ident = Json::array();
  for (Eigen::Index i = 0; i < rec.per_element_error.rows(); ++i) {
    Json erow = Json::array(), irow = Json::array();
    for (Eigen::Index k = 0; k < rec.per_element_error.cols(); ++k) {
      erow.push_back(rec.per_element_error(i, k));
      irow.push_back(static_cast<bool>(rec.identifiable(i, k)));
    }
    err.push_back(std::move(erow));
    ident.push_back(std::move(irow));
  }
  j["per_element_error"] = std::move(err);
  j["identifiable"] = std::move(ident);
  j["max_error"] = rec.max_error();
  return j;
}

inline Json haar_stats_json(const HaarDeltaStats& stats) {
  Json j;
  j["n_samples"] = stats.n_samples;
  j["mean_est"] = detail::complex_to_json(stats.mean_est);
  j["mean_se"] = stats.mean_se;
  j["second_moment_est"] = stats.second_moment_est;
  j["second_moment_se"] = stats.second_moment_se;
  j["theory_mean"] = detail::complex_to_json(stats.theory_mean);
  j["theory_var"] = stats.theory_var;
  j["theory_second_moment"] = stats.theory_second_moment;
  return j;
}

inline void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error("cannot write output file '" + path + "'");
  }
  out << contents;
}

}  // namespace wvsim
