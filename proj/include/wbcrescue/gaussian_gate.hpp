#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "text.hpp"

namespace wbcr {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<Vec3, 3>;

inline Mat3 invert_3x3(const Mat3& a, double* det_out = nullptr) {
  const double c00 = a[1][1] * a[2][2] - a[1][2] * a[2][1];
  const double c01 = a[1][2] * a[2][0] - a[1][0] * a[2][2];
  const double c02 = a[1][0] * a[2][1] - a[1][1] * a[2][0];
  const double det = a[0][0] * c00 + a[0][1] * c01 + a[0][2] * c02;
  if (det_out) *det_out = det;
  const double inv = 1.0 / det;
  Mat3 r{};
  r[0][0] = c00 * inv;
  r[1][0] = c01 * inv;
  r[2][0] = c02 * inv;
  r[0][1] = (a[0][2] * a[2][1] - a[0][1] * a[2][2]) * inv;
  r[1][1] = (a[0][0] * a[2][2] - a[0][2] * a[2][0]) * inv;
  r[2][1] = (a[0][1] * a[2][0] - a[0][0] * a[2][1]) * inv;
  r[0][2] = (a[0][1] * a[1][2] - a[0][2] * a[1][1]) * inv;
  r[1][2] = (a[0][2] * a[1][0] - a[0][0] * a[1][2]) * inv;
  r[2][2] = (a[0][0] * a[1][1] - a[0][1] * a[1][0]) * inv;
  return r;
}

/// Gaussian model of one cell group's morphology vectors, used as a
/// Mahalanobis gate. `precision` caches (covariance + ridge*I)^-1.
struct GaussianGate {
  Vec3 mean{};
  Mat3 covariance{};
  Mat3 precision{};
  double ridge = 0.0;
  std::int64_t sample_count = 0;
};

/// Builds a gate from explicit parameters, checking symmetry and positive
/// definiteness of covariance + ridge*I.
inline GaussianGate make_gaussian_gate(const Vec3& mean, const Mat3& covariance, double ridge,
                                       std::int64_t sample_count) {
  for (int i = 0; i < 3; ++i) {
    if (!std::isfinite(mean[i])) throw ValidationError("gate mean is not finite");
    for (int j = 0; j < 3; ++j) {
      if (!std::isfinite(covariance[i][j])) throw ValidationError("gate covariance is not finite");
      if (std::abs(covariance[i][j] - covariance[j][i]) > 1e-9) {
        throw ValidationError("gate covariance is not symmetric");
      }
    }
  }
  if (!std::isfinite(ridge) || ridge < 0.0) throw ValidationError("gate ridge must be >= 0");

  Mat3 reg = covariance;
  for (int i = 0; i < 3; ++i) reg[i][i] += ridge;
  // Leading principal minors are the LDL^T pivots up to products.
  const double m1 = reg[0][0];
  const double m2 = reg[0][0] * reg[1][1] - reg[0][1] * reg[1][0];
  double det = 0.0;
  Mat3 precision = invert_3x3(reg, &det);
  if (!(m1 > 0.0) || !(m2 > 0.0) || !(det > 0.0)) {
    throw ValidationError("degenerate covariance");
  }
  for (const auto& row : precision) {
    for (double v : row) {
      if (!std::isfinite(v)) throw ValidationError("degenerate covariance");
    }
  }
  return {mean, covariance, precision, ridge, sample_count};
}

/// Sample mean and unbiased covariance of `samples`, regularised with
/// ridge = ridge_scale * trace(cov) / 3.
inline GaussianGate fit_gaussian_gate(std::span<const Vec3> samples, double ridge_scale = 1e-6) {
  const std::size_t n = samples.size();
  if (n <= 3) {
    throw ValidationError("insufficient calibration samples: need at least 4, got " +
                          std::to_string(n));
  }
  if (!std::isfinite(ridge_scale) || ridge_scale < 0.0) {
    throw ValidationError("ridge_scale must be >= 0");
  }
  Vec3 mean{};
  for (std::size_t s = 0; s < n; ++s) {
    for (int i = 0; i < 3; ++i) {
      if (!std::isfinite(samples[s][i])) {
        throw ValidationError("non-finite feature in calibration sample " + std::to_string(s));
      }
      mean[i] += samples[s][i];
    }
  }
  for (double& m : mean) m /= static_cast<double>(n);
  Mat3 cov{};
  for (const auto& v : samples) {
    const Vec3 d{v[0] - mean[0], v[1] - mean[1], v[2] - mean[2]};
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) cov[i][j] += d[i] * d[j];
    }
  }
  for (auto& row : cov) {
    for (double& c : row) c /= static_cast<double>(n - 1);
  }
  const double ridge = ridge_scale * (cov[0][0] + cov[1][1] + cov[2][2]) / 3.0;
  return make_gaussian_gate(mean, cov, ridge, static_cast<std::int64_t>(n));
}

inline double mahalanobis(const GaussianGate& gate, const Vec3& v) {
  for (double x : v) {
    if (!std::isfinite(x)) throw ValidationError("non-finite feature vector");
  }
  const Vec3 d{v[0] - gate.mean[0], v[1] - gate.mean[1], v[2] - gate.mean[2]};
  double q = 0.0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) q += d[i] * gate.precision[i][j] * d[j];
  }
  return std::sqrt(std::max(0.0, q));
}

// Gate file: "mean = a b c", "cov = <9 values row-major>", "ridge = e", "n = k".
inline std::string serialize_gate(const GaussianGate& g) {
  std::string out = "mean =";
  for (double m : g.mean) out += " " + text::fmt_exact(m);
  out += "\ncov =";
  for (const auto& row : g.covariance) {
    for (double c : row) out += " " + text::fmt_exact(c);
  }
  out += "\nridge = " + text::fmt_exact(g.ridge);
  out += "\nn = " + std::to_string(g.sample_count) + "\n";
  return out;
}

inline GaussianGate parse_gate_lines(const std::vector<std::string>& lines,
                                     const std::string& source) {
  std::vector<double> mean, cov;
  std::optional<double> ridge;
  std::optional<std::int64_t> n;
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    std::string_view line = text::trim(lines[ln]);
    if (line.empty() || line.front() == '#') continue;
    auto err = [&](const std::string& what) {
      return ValidationError(located(source, ln + 1, 0, what));
    };
    auto eq = line.find('=');
    if (eq == std::string_view::npos) throw err("expected key = value");
    const auto key = text::trim(line.substr(0, eq));
    std::vector<double> values;
    for (const auto& tok : text::split(text::trim(line.substr(eq + 1)), ' ')) {
      if (text::trim(tok).empty()) continue;
      auto v = text::to_double(tok);
      if (!v) throw err("non-numeric value '" + tok + "'");
      values.push_back(*v);
    }
    if (key == "mean") {
      if (values.size() != 3) throw err("mean needs 3 values");
      mean = values;
    } else if (key == "cov") {
      if (values.size() != 9) throw err("cov needs 9 values");
      cov = values;
    } else if (key == "ridge") {
      if (values.size() != 1) throw err("ridge needs 1 value");
      ridge = values[0];
    } else if (key == "n") {
      auto k = values.size() == 1 ? text::to_int(text::trim(line.substr(eq + 1))) : std::nullopt;
      if (!k || *k < 0) throw err("n needs one non-negative integer");
      n = *k;
    } else {
      throw err("unknown key '" + std::string(key) + "'");
    }
  }
  if (mean.empty() || cov.empty() || !ridge || !n) {
    throw ValidationError(source + ": gate file needs mean, cov, ridge and n");
  }
  Mat3 c{};
  for (int i = 0; i < 9; ++i) c[i / 3][i % 3] = cov[i];
  try {
    return make_gaussian_gate({mean[0], mean[1], mean[2]}, c, *ridge, *n);
  } catch (const ValidationError& e) {
    throw ValidationError(source + ": " + e.what());
  }
}

inline GaussianGate load_gate(const std::filesystem::path& path) {
  return parse_gate_lines(text::read_lines(path), path.string());
}

}  // namespace wbcr
