#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "labels.hpp"
#include "text.hpp"

namespace wbcr {

/// Per-class probabilities, indexed by ClassId.
using ProbVector = std::vector<double>;

inline constexpr double kProbEntryTolerance = 1e-6;
inline constexpr double kProbSumTolerance = 1e-3;

/// Validates raw parsed probabilities and rescales them to sum to one.
/// Entries must lie in [0, 1 + 1e-6]; the sum must lie within 1e-3 of one.
inline ProbVector normalize_probabilities(std::span<const double> raw) {
  double sum = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double v = raw[i];
    if (!std::isfinite(v) || v < 0.0 || v > 1.0 + kProbEntryTolerance) {
      throw ValidationError("probability out of range [0,1] at class index " +
                            std::to_string(i) + ": " + text::fmt_exact(v));
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kProbSumTolerance) {
    throw ValidationError("probability sum out of tolerance: " + text::fmt_exact(sum));
  }
  ProbVector out(raw.begin(), raw.end());
  for (double& v : out) v /= sum;
  return out;
}

/// Training-set sample counts, one per class of the catalog.
struct ClassCounts {
  std::vector<std::int64_t> counts;

  std::int64_t max() const {
    std::int64_t m = 0;
    for (auto c : counts) m = std::max(m, c);
    return m;
  }
};

inline void validate_counts(const ClassCounts& counts, const LabelSet& labels) {
  if (counts.counts.size() != labels.size()) {
    throw ValidationError("class counts have " + std::to_string(counts.counts.size()) +
                          " entries, label set has " + std::to_string(labels.size()));
  }
  bool any_positive = false;
  for (std::size_t i = 0; i < counts.counts.size(); ++i) {
    if (counts.counts[i] < 0) {
      throw ValidationError("negative count for class " + labels.name_at(i));
    }
    any_positive = any_positive || counts.counts[i] > 0;
  }
  if (!any_positive) throw ValidationError("all class counts are zero");
}

// Rare classes that have a biological filter attached.
inline constexpr std::string_view kProlymphocyte = "PLY";
inline constexpr std::string_view kPlasmaCell = "PC";

/// Thresholds and boosting parameters for the rescue engine.
///
/// tau_s = +inf and tau_m = -inf are accepted as sentinels that make the
/// morphological filter reject every candidate.
struct RescueConfig {
  std::vector<std::string> rare_classes{std::string(kProlymphocyte), std::string(kPlasmaCell)};
  std::map<std::string, double> boost_factors;  // explicit overrides
  double tau = 0.5;
  double tau_s = 0.15;
  double tau_m = 3.0;
  double boost_cap = 10.0;
};

inline void validate_config(const RescueConfig& cfg, const LabelSet& labels) {
  auto bad = [](const std::string& what) { throw ValidationError("config: " + what); };
  if (!std::isfinite(cfg.tau) || cfg.tau < 0.0 || cfg.tau > 1.0) bad("tau must lie in [0,1]");
  if (std::isnan(cfg.tau_s) || cfg.tau_s < 0.0) bad("tau_s must be >= 0 (or inf)");
  if (std::isnan(cfg.tau_m) || (std::isinf(cfg.tau_m) && cfg.tau_m > 0) ||
      (std::isfinite(cfg.tau_m) && cfg.tau_m < 0.0)) {
    bad("tau_m must be >= 0 (or -inf)");
  }
  if (!std::isfinite(cfg.boost_cap) || cfg.boost_cap < 1.0) bad("boost_cap must be >= 1");
  if (cfg.rare_classes.empty()) bad("rare_classes is empty");
  for (std::size_t i = 0; i < cfg.rare_classes.size(); ++i) {
    const auto& name = cfg.rare_classes[i];
    if (!labels.contains(name)) bad("rare class '" + name + "' is not in the label set");
    if (name != kProlymphocyte && name != kPlasmaCell) {
      bad("no morphological filter for rare class '" + name + "'");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (cfg.rare_classes[j] == name) bad("rare class '" + name + "' listed twice");
    }
  }
  for (const auto& [name, b] : cfg.boost_factors) {
    if (!labels.contains(name)) bad("boost for unknown class '" + name + "'");
    bool rare = false;
    for (const auto& r : cfg.rare_classes) rare = rare || r == name;
    if (!rare) bad("boost given for non-rare class '" + name + "'");
    if (!std::isfinite(b) || b < 1.0) bad("boost." + name + " must be >= 1");
    if (b > cfg.boost_cap) bad("boost." + name + " exceeds boost_cap");
  }
}

/// Parses the key=value config format. `source` is used in error messages.
inline RescueConfig parse_rescue_config_text(const std::vector<std::string>& lines,
                                             const std::string& source) {
  RescueConfig cfg;
  for (std::size_t n = 0; n < lines.size(); ++n) {
    std::string_view line = lines[n];
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = text::trim(line);
    if (line.empty()) continue;
    auto err = [&](const std::string& what) -> ValidationError {
      return ValidationError(located(source, n + 1, 0, what));
    };
    auto eq = line.find('=');
    if (eq == std::string_view::npos) throw err("expected key=value");
    const std::string key(text::trim(line.substr(0, eq)));
    const std::string_view value = text::trim(line.substr(eq + 1));
    auto number = [&]() {
      auto v = text::to_double(value);
      if (!v) throw err("non-numeric value for '" + key + "'");
      return *v;
    };
    if (key == "rare_classes") {
      cfg.rare_classes.clear();
      for (const auto& part : text::split(value, ',')) {
        auto name = text::trim(part);
        if (name.empty()) throw err("empty class name in rare_classes");
        cfg.rare_classes.emplace_back(name);
      }
    } else if (key == "tau") {
      cfg.tau = number();
    } else if (key == "tau_s") {
      cfg.tau_s = number();
    } else if (key == "tau_m") {
      cfg.tau_m = number();
    } else if (key == "boost_cap") {
      cfg.boost_cap = number();
    } else if (key.rfind("boost.", 0) == 0 && key.size() > 6) {
      cfg.boost_factors[key.substr(6)] = number();
    } else {
      throw err("unknown key '" + key + "'");
    }
  }
  return cfg;
}

inline RescueConfig parse_rescue_config(const std::filesystem::path& path) {
  return parse_rescue_config_text(text::read_lines(path), path.string());
}

/// One class name per line; blank lines and '#' comments are ignored.
inline LabelSet load_label_set(const std::filesystem::path& path) {
  std::vector<std::string> names;
  for (const auto& raw : text::read_lines(path)) {
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = text::trim(line);
    if (!line.empty()) names.emplace_back(line);
  }
  try {
    return LabelSet(std::move(names));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

enum class Phase { NoCandidate, FailedSemantic, FailedMorphology, Rescued };

inline std::string_view phase_name(Phase p) {
  switch (p) {
    case Phase::NoCandidate: return "NoCandidate";
    case Phase::FailedSemantic: return "FailedSemantic";
    case Phase::FailedMorphology: return "FailedMorphology";
    case Phase::Rescued: return "Rescued";
  }
  return "?";
}

/// Audit record of one pass through the rescue engine.
struct DecisionTrace {
  std::string image_id;
  ClassId base_label = 0;
  std::optional<ClassId> candidate;
  Phase phase = Phase::NoCandidate;
  std::optional<double> spikiness;
  std::optional<double> mahalanobis;
  ClassId final_label = 0;
  std::string note;  // morphology failure reason, if any

  friend bool operator==(const DecisionTrace&, const DecisionTrace&) = default;
};

}  // namespace wbcr
