#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "ingest.hpp"
#include "labels.hpp"
#include "text.hpp"

namespace wbcr {

/// counts[t][p]: samples of true class t predicted as p.
struct ConfusionMatrix {
  std::vector<std::vector<std::int64_t>> counts;

  std::size_t classes() const { return counts.size(); }
  std::int64_t total() const {
    std::int64_t n = 0;
    for (const auto& row : counts) {
      for (auto c : row) n += c;
    }
    return n;
  }
};

inline ConfusionMatrix build_confusion(std::span<const ClassId> truth,
                                       std::span<const ClassId> preds, std::size_t k) {
  if (truth.size() != preds.size()) {
    throw ValidationError("truth has " + std::to_string(truth.size()) + " labels, predictions " +
                          std::to_string(preds.size()));
  }
  if (truth.empty()) throw ValidationError("no samples to evaluate");
  ConfusionMatrix cm{std::vector<std::vector<std::int64_t>>(k, std::vector<std::int64_t>(k, 0))};
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= k || preds[i] >= k) {
      throw ValidationError("class id out of range at sample " + std::to_string(i));
    }
    ++cm.counts[truth[i]][preds[i]];
  }
  return cm;
}

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double specificity = 1.0;
};

struct MetricsReport {
  double macro_f1 = 0.0;
  double balanced_accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_specificity = 0.0;
  std::vector<ClassMetrics> per_class;
};

/// Macro metrics over every class of the matrix, including classes with no
/// samples. Zero denominators give 0 for precision/recall/F1 and 1 for
/// specificity.
inline MetricsReport compute_metrics(const ConfusionMatrix& cm) {
  const std::size_t k = cm.classes();
  const std::int64_t total = cm.total();
  if (k == 0 || total == 0) throw ValidationError("empty confusion matrix");
  MetricsReport r;
  r.per_class.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    std::int64_t row = 0, col = 0;
    for (std::size_t j = 0; j < k; ++j) {
      row += cm.counts[c][j];
      col += cm.counts[j][c];
    }
    const std::int64_t tp = cm.counts[c][c];
    const std::int64_t fn = row - tp;
    const std::int64_t fp = col - tp;
    const std::int64_t tn = total - tp - fn - fp;
    auto ratio = [](std::int64_t num, std::int64_t den, double if_zero) {
      return den == 0 ? if_zero : static_cast<double>(num) / static_cast<double>(den);
    };
    auto& m = r.per_class[c];
    m.precision = ratio(tp, tp + fp, 0.0);
    m.recall = ratio(tp, tp + fn, 0.0);
    m.f1 = ratio(2 * tp, 2 * tp + fp + fn, 0.0);
    m.specificity = ratio(tn, tn + fp, 1.0);
  }
  for (const auto& m : r.per_class) {
    r.macro_precision += m.precision;
    r.balanced_accuracy += m.recall;
    r.macro_f1 += m.f1;
    r.macro_specificity += m.specificity;
  }
  const double kk = static_cast<double>(k);
  r.macro_precision /= kk;
  r.balanced_accuracy /= kk;
  r.macro_f1 /= kk;
  r.macro_specificity /= kk;
  return r;
}

/// Fixed six-decimal text report.
inline std::string format_report(const MetricsReport& r, const LabelSet& labels,
                                 std::int64_t samples) {
  auto f = [](double v) { return text::fmt_fixed(v, 6); };
  std::string out;
  out += "samples = " + std::to_string(samples) + "\n";
  out += "macro_f1 = " + f(r.macro_f1) + "\n";
  out += "balanced_accuracy = " + f(r.balanced_accuracy) + "\n";
  out += "macro_precision = " + f(r.macro_precision) + "\n";
  out += "macro_specificity = " + f(r.macro_specificity) + "\n";
  out += "\nclass,precision,recall,f1,specificity\n";
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    const auto& m = r.per_class[c];
    out += labels.name_at(c) + "," + f(m.precision) + "," + f(m.recall) + "," + f(m.f1) + "," +
           f(m.specificity) + "\n";
  }
  return out;
}

inline std::string serialize_confusion(const ConfusionMatrix& cm, const LabelSet& labels) {
  std::string out = "true\\pred";
  for (const auto& n : labels.names()) out += "," + n;
  out += "\n";
  for (std::size_t t = 0; t < cm.classes(); ++t) {
    out += labels.name_at(t);
    for (auto c : cm.counts[t]) out += "," + std::to_string(c);
    out += "\n";
  }
  return out;
}

struct Evaluation {
  ConfusionMatrix confusion;
  MetricsReport report;
};

/// Joins prediction and truth files on image_id (truth order) and scores
/// them. Both files must cover exactly the same ids.
inline Evaluation evaluate(const std::filesystem::path& pred_csv,
                           const std::filesystem::path& truth_csv, const LabelSet& labels) {
  const auto preds = parse_label_csv(pred_csv, labels);
  const auto truth = parse_label_csv(truth_csv, labels);
  std::unordered_map<std::string, ClassId> pred_by_id;
  for (const auto& r : preds) pred_by_id.emplace(r.image_id, r.label);

  auto list = [](const std::vector<std::string>& ids) {
    std::string s;
    for (std::size_t i = 0; i < ids.size() && i < 20; ++i) s += (i ? ", " : "") + ids[i];
    if (ids.size() > 20) s += ", ...";
    return s;
  };
  std::vector<std::string> missing;
  std::vector<ClassId> t, p;
  std::unordered_set<std::string> truth_ids;
  for (const auto& r : truth) {
    truth_ids.insert(r.image_id);
    auto it = pred_by_id.find(r.image_id);
    if (it == pred_by_id.end()) {
      missing.push_back(r.image_id);
      continue;
    }
    t.push_back(r.label);
    p.push_back(it->second);
  }
  if (!missing.empty()) {
    throw ValidationError(pred_csv.string() + ": missing predictions for " +
                          std::to_string(missing.size()) + " id(s): " + list(missing));
  }
  std::vector<std::string> extra;
  for (const auto& r : preds) {
    if (!truth_ids.count(r.image_id)) extra.push_back(r.image_id);
  }
  if (!extra.empty()) {
    throw ValidationError(truth_csv.string() + ": no ground truth for " +
                          std::to_string(extra.size()) + " id(s): " + list(extra));
  }
  Evaluation e;
  e.confusion = build_confusion(t, p, labels.size());
  e.report = compute_metrics(e.confusion);
  return e;
}

}  // namespace wbcr
