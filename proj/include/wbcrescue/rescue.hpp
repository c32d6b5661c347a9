#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "core.hpp"
#include "errors.hpp"
#include "ingest.hpp"
#include "labels.hpp"
#include "morphology.hpp"
#include "parallel.hpp"
#include "text.hpp"

namespace wbcr {

/// Per-class multipliers applied before the candidate argmax. Classes
/// outside the rare set always carry 1.
struct BoostFactors {
  std::vector<double> factors;
  std::vector<char> rare;

  bool is_rare(ClassId c) const { return rare.at(c) != 0; }
};

/// Inverse log-frequency boosting: B_c = clamp(ln(1 + N_max / N_c), 1, cap)
/// for rare classes unless the config overrides B_c explicitly.
inline BoostFactors compute_boost_factors(const ClassCounts& counts, const RescueConfig& config,
                                          const LabelSet& labels) {
  validate_config(config, labels);
  validate_counts(counts, labels);
  BoostFactors out{std::vector<double>(labels.size(), 1.0),
                   std::vector<char>(labels.size(), 0)};
  const double n_max = static_cast<double>(counts.max());
  for (const auto& name : config.rare_classes) {
    const ClassId c = labels.index_of(name);
    out.rare[c] = 1;
    if (auto it = config.boost_factors.find(name); it != config.boost_factors.end()) {
      out.factors[c] = it->second;
      continue;
    }
    if (counts.counts[c] == 0) {
      throw ValidationError("boost undefined for zero-count class " + name);
    }
    const double b = std::log1p(n_max / static_cast<double>(counts.counts[c]));
    out.factors[c] = std::clamp(b, 1.0, config.boost_cap);
  }
  return out;
}

/// Lowest index wins ties.
inline ClassId argmax(std::span<const double> v) {
  ClassId best = 0;
  for (ClassId i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

struct CandidateResult {
  ClassId base;
  std::optional<ClassId> candidate;
};

/// Boosts rare-class scores and reports the boosted argmax if it is rare.
/// A rare base prediction is never traded for a different rare class.
inline CandidateResult phase1_candidate(std::span<const double> p_swin, const BoostFactors& boosts) {
  const ClassId base = argmax(p_swin);
  std::vector<double> boosted(p_swin.begin(), p_swin.end());
  for (ClassId c = 0; c < boosted.size(); ++c) boosted[c] *= boosts.factors.at(c);
  const ClassId cand = argmax(boosted);
  if (!boosts.is_rare(cand)) return {base, std::nullopt};
  if (boosts.is_rare(base) && cand != base) return {base, std::nullopt};
  return {base, cand};
}

/// Fails only when P_Med[candidate] is strictly below tau.
inline bool phase2_verify(std::span<const double> p_med, ClassId candidate, double tau) {
  return !(p_med[candidate] < tau);
}

struct FilterOutcome {
  bool passed = false;
  std::optional<double> spikiness;
  std::optional<double> mahalanobis;
  std::string error;
};

/// Thrown when a candidate reaches the morphological filter without an image.
class MissingSampleError : public ValidationError {
 public:
  explicit MissingSampleError(const std::string& image_id)
      : ValidationError("sample required for morphological filtering: '" + image_id + "'"),
        image_id_(image_id) {}
  const std::string& image_id() const noexcept { return image_id_; }

 private:
  std::string image_id_;
};

/// Lazily supplies the cell for an image id; std::nullopt when unavailable.
using SampleSource = std::function<std::optional<CellSample>(const std::string& image_id)>;

/// Resolved, validated inputs of the suppress-and-rescue procedure.
class RescueEngine {
 public:
  RescueEngine(LabelSet labels, RescueConfig config, BoostFactors boosts,
               std::optional<GaussianGate> pc_gate)
      : labels_(std::move(labels)),
        config_(std::move(config)),
        boosts_(std::move(boosts)),
        gate_(std::move(pc_gate)) {
    validate_config(config_, labels_);
    if (boosts_.factors.size() != labels_.size() || boosts_.rare.size() != labels_.size()) {
      throw ValidationError("boost factors do not match the label set");
    }
    for (ClassId c = 0; c < labels_.size(); ++c) {
      const double b = boosts_.factors[c];
      if (!std::isfinite(b) || b < 1.0 || b > config_.boost_cap) {
        throw ValidationError("boost for " + labels_.name_at(c) + " outside [1, boost_cap]");
      }
      if (!boosts_.is_rare(c) && b != 1.0) {
        throw ValidationError("boost for non-rare class " + labels_.name_at(c) + " must be 1");
      }
    }
    for (const auto& name : config_.rare_classes) {
      const ClassId c = labels_.index_of(name);
      if (!boosts_.is_rare(c)) throw ValidationError("boost table does not mark " + name + " rare");
      if (name == kProlymphocyte) ply_ = c;
      if (name == kPlasmaCell) pc_ = c;
    }
    if (pc_ && !gate_) throw ValidationError("a plasma-cell gate is required when PC is rare");
  }

  const LabelSet& labels() const noexcept { return labels_; }
  const RescueConfig& config() const noexcept { return config_; }
  const BoostFactors& boosts() const noexcept { return boosts_; }
  const std::optional<GaussianGate>& gate() const noexcept { return gate_; }

  FilterOutcome phase3_filter(ClassId candidate, const CellSample& sample) const {
    FilterOutcome out;
    try {
      if (ply_ && candidate == *ply_) {
        out.spikiness = mask_spikiness(sample.mask);
        out.passed = *out.spikiness > config_.tau_s;
      } else if (pc_ && candidate == *pc_) {
        out.mahalanobis = mahalanobis(*gate_, morph_vector(sample));
        out.passed = *out.mahalanobis <= config_.tau_m;
      } else {
        throw ValidationError("no morphological filter for class " + labels_.name_at(candidate));
      }
    } catch (const MorphologyError& e) {
      out.passed = false;
      out.error = e.what();
    }
    return out;
  }

  /// One image through boosting, semantic verification and the biological
  /// filter. The sample is requested only when the filter is reached.
  DecisionTrace run(const std::string& image_id, std::span<const double> p_swin,
                    std::span<const double> p_med, const SampleSource& samples) const {
    if (p_swin.size() != labels_.size() || p_med.size() != labels_.size()) {
      throw ValidationError("probability vectors for '" + image_id + "' do not match the label set");
    }
    DecisionTrace t;
    t.image_id = image_id;
    const auto [base, candidate] = phase1_candidate(p_swin, boosts_);
    t.base_label = t.final_label = base;
    t.candidate = candidate;
    if (!candidate) {
      t.phase = Phase::NoCandidate;
      return t;
    }
    if (!phase2_verify(p_med, *candidate, config_.tau)) {
      t.phase = Phase::FailedSemantic;
      return t;
    }
    std::optional<CellSample> sample;
    if (samples) sample = samples(image_id);
    if (!sample) throw MissingSampleError(image_id);
    const FilterOutcome f = phase3_filter(*candidate, *sample);
    t.spikiness = f.spikiness;
    t.mahalanobis = f.mahalanobis;
    t.note = f.error;
    if (f.passed) {
      t.phase = Phase::Rescued;
      t.final_label = *candidate;
    } else {
      t.phase = Phase::FailedMorphology;
    }
    return t;
  }

  DecisionTrace run(const std::string& image_id, std::span<const double> p_swin,
                    std::span<const double> p_med, const std::optional<CellSample>& sample) const {
    return run(image_id, p_swin, p_med,
               [&](const std::string&) -> std::optional<CellSample> { return sample; });
  }

 private:
  LabelSet labels_;
  RescueConfig config_;
  BoostFactors boosts_;
  std::optional<GaussianGate> gate_;
  std::optional<ClassId> ply_, pc_;
};

struct BatchOptions {
  unsigned threads = 1;
  bool skip_missing = false;
};

/// Runs every row of `swin` in order. With skip_missing, an unavailable
/// sample denies the rescue instead of aborting the batch.
inline std::vector<DecisionTrace> rescue_batch(const ProbTable& swin, const ProbTable& med,
                                               const SampleSource& samples,
                                               const RescueEngine& engine,
                                               const BatchOptions& options = {}) {
  if (!(swin.labels() == engine.labels()) || !(med.labels() == engine.labels())) {
    throw ValidationError("probability tables do not share the engine's label set");
  }
  std::vector<std::string> missing;
  for (const auto& row : swin.rows()) {
    if (!med.find(row.image_id)) missing.push_back(row.image_id);
  }
  if (!missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < missing.size() && i < 10; ++i) list += (i ? ", " : "") + missing[i];
    if (missing.size() > 10) list += ", ...";
    throw ValidationError(std::to_string(missing.size()) +
                          " image_id(s) missing from the MedSigLIP table: " + list);
  }

  std::vector<DecisionTrace> traces(swin.size());
  parallel_for(swin.size(), options.threads, [&](std::size_t i) {
    const auto& row = swin.rows()[i];
    const auto& med_row = *med.find(row.image_id);
    try {
      traces[i] = engine.run(row.image_id, row.probs, med_row.probs, samples);
    } catch (const MissingSampleError& e) {
      if (!options.skip_missing) throw;
      DecisionTrace t;
      t.image_id = row.image_id;
      const auto [base, candidate] = phase1_candidate(row.probs, engine.boosts());
      t.base_label = t.final_label = base;
      t.candidate = candidate;
      t.phase = Phase::FailedMorphology;
      t.note = e.what();
      traces[i] = std::move(t);
    }
  });
  return traces;
}

inline std::string serialize_traces(const std::vector<DecisionTrace>& traces,
                                    const LabelSet& labels) {
  auto opt = [](const std::optional<double>& v) { return v ? text::fmt_exact(*v) : std::string(); };
  std::string out = "image_id,base,candidate,phase,spikiness,mahalanobis,final\n";
  for (const auto& t : traces) {
    out += t.image_id + "," + labels.name_at(t.base_label) + "," +
           (t.candidate ? labels.name_at(*t.candidate) : std::string()) + "," +
           std::string(phase_name(t.phase)) + "," + opt(t.spikiness) + "," + opt(t.mahalanobis) +
           "," + labels.name_at(t.final_label) + "\n";
  }
  return out;
}

inline std::string serialize_predictions(const std::vector<DecisionTrace>& traces,
                                         const LabelSet& labels) {
  std::string out = "image_id,label\n";
  for (const auto& t : traces) out += t.image_id + "," + labels.name_at(t.final_label) + "\n";
  return out;
}

}  // namespace wbcr
