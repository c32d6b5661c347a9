#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "core.hpp"
#include "errors.hpp"
#include "image.hpp"
#include "labels.hpp"
#include "text.hpp"

namespace wbcr {

struct ProbRow {
  std::string image_id;
  ProbVector probs;

  friend bool operator==(const ProbRow&, const ProbRow&) = default;
};

/// Per-image probability vectors from one classifier branch.
class ProbTable {
 public:
  ProbTable() = default;
  explicit ProbTable(LabelSet labels) : labels_(std::move(labels)) {}

  /// Rows are appended in order; duplicate ids or wrong lengths throw.
  void add(std::string image_id, ProbVector probs) {
    if (probs.size() != labels_.size()) {
      throw ValidationError("row '" + image_id + "' has " + std::to_string(probs.size()) +
                            " probabilities, expected " + std::to_string(labels_.size()));
    }
    if (!index_.emplace(image_id, rows_.size()).second) {
      throw ValidationError("duplicate image_id '" + image_id + "'");
    }
    rows_.push_back({std::move(image_id), std::move(probs)});
  }

  const LabelSet& labels() const noexcept { return labels_; }
  const std::vector<ProbRow>& rows() const noexcept { return rows_; }
  std::size_t size() const noexcept { return rows_.size(); }

  const ProbRow* find(const std::string& image_id) const {
    auto it = index_.find(image_id);
    return it == index_.end() ? nullptr : &rows_[it->second];
  }

 private:
  LabelSet labels_;
  std::vector<ProbRow> rows_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Parses a probability CSV already split into lines. `source` names the
/// file in error messages.
inline ProbTable parse_prob_table_lines(const std::vector<std::string>& lines,
                                        const LabelSet& labels, const std::string& source) {
  if (lines.empty()) throw ValidationError(located(source, 1, 0, "missing header"));
  const auto header = text::split(lines[0]);
  if (header.size() != labels.size() + 1) {
    throw ValidationError(located(source, 1, 0,
                                  "header has " + std::to_string(header.size()) +
                                      " columns, expected image_id plus " +
                                      std::to_string(labels.size()) + " classes"));
  }
  if (text::trim(header[0]) != "image_id") {
    throw ValidationError(located(source, 1, 1, "first header column must be 'image_id'"));
  }
  for (std::size_t c = 0; c < labels.size(); ++c) {
    if (text::trim(header[c + 1]) != labels.name_at(c)) {
      throw ValidationError(located(source, 1, c + 2,
                                    "header/class mismatch: expected '" + labels.name_at(c) +
                                        "', found '" + header[c + 1] + "'"));
    }
  }

  ProbTable table(labels);
  std::vector<double> raw(labels.size());
  for (std::size_t n = 1; n < lines.size(); ++n) {
    if (text::trim(lines[n]).empty()) continue;
    const auto fields = text::split(lines[n]);
    if (fields.size() != labels.size() + 1) {
      throw ValidationError(located(source, n + 1, 0,
                                    "expected " + std::to_string(labels.size() + 1) +
                                        " fields, found " + std::to_string(fields.size())));
    }
    const std::string id(text::trim(fields[0]));
    if (id.empty()) throw ValidationError(located(source, n + 1, 1, "empty image_id"));
    if (table.find(id)) {
      throw ValidationError(located(source, n + 1, 1, "duplicate image_id '" + id + "'"));
    }
    for (std::size_t c = 0; c < labels.size(); ++c) {
      auto v = text::to_double(fields[c + 1]);
      if (!v) {
        throw ValidationError(
            located(source, n + 1, c + 2, "non-numeric cell '" + fields[c + 1] + "'"));
      }
      raw[c] = *v;
      if (!std::isfinite(*v) || *v < 0.0 || *v > 1.0 + kProbEntryTolerance) {
        throw ValidationError(
            located(source, n + 1, c + 2, "probability out of range: " + fields[c + 1]));
      }
    }
    try {
      table.add(id, normalize_probabilities(raw));
    } catch (const ValidationError& e) {
      throw ValidationError(located(source, n + 1, 0, e.what()));
    }
  }
  return table;
}

inline ProbTable parse_prob_table(const std::filesystem::path& path, const LabelSet& labels) {
  return parse_prob_table_lines(text::read_lines(path), labels, path.string());
}

inline std::string serialize_prob_table(const ProbTable& table) {
  std::string out = "image_id";
  for (const auto& name : table.labels().names()) out += "," + name;
  out += "\n";
  for (const auto& row : table.rows()) {
    out += row.image_id;
    for (double v : row.probs) out += "," + text::fmt_exact(v);
    out += "\n";
  }
  return out;
}

/// Arithmetic mean of several tables over the same images and classes. Row
/// order follows the first table.
inline ProbTable average_prob_tables(const std::vector<ProbTable>& tables) {
  if (tables.empty()) throw ValidationError("no probability tables to average");
  const auto& first = tables.front();
  for (std::size_t t = 1; t < tables.size(); ++t) {
    if (!(tables[t].labels() == first.labels())) {
      throw ValidationError("table " + std::to_string(t + 1) + " has a different label set");
    }
    if (tables[t].size() != first.size()) {
      throw ValidationError("table " + std::to_string(t + 1) + " has " +
                            std::to_string(tables[t].size()) + " rows, expected " +
                            std::to_string(first.size()));
    }
  }
  ProbTable out(first.labels());
  const double n = static_cast<double>(tables.size());
  for (const auto& row : first.rows()) {
    ProbVector sum = row.probs;
    for (std::size_t t = 1; t < tables.size(); ++t) {
      const ProbRow* other = tables[t].find(row.image_id);
      if (!other) {
        throw ValidationError("image_id '" + row.image_id + "' missing from table " +
                              std::to_string(t + 1));
      }
      for (std::size_t c = 0; c < sum.size(); ++c) sum[c] += other->probs[c];
    }
    for (double& v : sum) v /= n;
    out.add(row.image_id, std::move(sum));
  }
  return out;
}

inline ClassCounts parse_class_counts_lines(const std::vector<std::string>& lines,
                                            const LabelSet& labels, const std::string& source) {
  if (lines.empty()) throw ValidationError(located(source, 1, 0, "missing header"));
  const auto header = text::split(lines[0]);
  if (header.size() != 2 || text::trim(header[0]) != "class" ||
      text::trim(header[1]) != "count") {
    throw ValidationError(located(source, 1, 0, "header must be 'class,count'"));
  }
  std::vector<std::int64_t> counts(labels.size(), 0);
  std::vector<bool> seen(labels.size(), false);
  for (std::size_t n = 1; n < lines.size(); ++n) {
    if (text::trim(lines[n]).empty()) continue;
    const auto fields = text::split(lines[n]);
    if (fields.size() != 2) {
      throw ValidationError(located(source, n + 1, 0, "expected 2 fields"));
    }
    const auto name = text::trim(fields[0]);
    auto id = labels.find(name);
    if (!id) {
      throw ValidationError(located(source, n + 1, 1, "unknown class name '" +
                                                           std::string(name) + "'"));
    }
    if (seen[*id]) {
      throw ValidationError(located(source, n + 1, 1, "duplicate class '" +
                                                           std::string(name) + "'"));
    }
    auto v = text::to_int(fields[1]);
    if (!v || *v < 0) {
      throw ValidationError(located(source, n + 1, 2, "count must be a non-negative integer, got '" +
                                                           fields[1] + "'"));
    }
    counts[*id] = *v;
    seen[*id] = true;
  }
  for (std::size_t c = 0; c < labels.size(); ++c) {
    if (!seen[c]) {
      throw ValidationError(located(source, 0, 0, "missing count for class " + labels.name_at(c)));
    }
  }
  ClassCounts out{std::move(counts)};
  try {
    validate_counts(out, labels);
  } catch (const ValidationError& e) {
    throw ValidationError(located(source, 0, 0, e.what()));
  }
  return out;
}

inline ClassCounts parse_class_counts(const std::filesystem::path& path, const LabelSet& labels) {
  return parse_class_counts_lines(text::read_lines(path), labels, path.string());
}

/// A leukocyte image and the mask isolating it.
struct CellSample {
  std::string image_id;
  RgbImage pixels;
  BinaryMask mask;
};

inline BinaryMask mask_from_raster(const netpbm::Raster& r, const std::string& source) {
  if (r.channels != 1) throw ValidationError(source + ": mask must be P5 grayscale");
  BinaryMask m(r.width, r.height);
  for (std::size_t i = 0; i < r.samples.size(); ++i) m.bits[i] = r.samples[i] > 127 ? 1 : 0;
  return m;
}

inline CellSample make_cell_sample(std::string image_id, RgbImage pixels, BinaryMask mask) {
  if (pixels.width != mask.width || pixels.height != mask.height) {
    throw ValidationError("dimension mismatch for '" + image_id + "': image " +
                          std::to_string(pixels.width) + "x" + std::to_string(pixels.height) +
                          ", mask " + std::to_string(mask.width) + "x" +
                          std::to_string(mask.height));
  }
  return {std::move(image_id), std::move(pixels), std::move(mask)};
}

inline CellSample load_cell_sample(const std::filesystem::path& image_path,
                                   const std::filesystem::path& mask_path,
                                   std::string image_id) {
  auto image = netpbm::to_rgb(netpbm::read(image_path.string()));
  auto mask = mask_from_raster(netpbm::read(mask_path.string()), mask_path.string());
  return make_cell_sample(std::move(image_id), std::move(image), std::move(mask));
}

/// `image_id,label` rows, as used for predictions and ground truth.
struct LabeledRow {
  std::string image_id;
  ClassId label;
};

inline std::vector<LabeledRow> parse_label_csv(const std::filesystem::path& path,
                                               const LabelSet& labels) {
  const auto lines = text::read_lines(path);
  const std::string source = path.string();
  if (lines.empty()) throw ValidationError(located(source, 1, 0, "missing header"));
  const auto header = text::split(lines[0]);
  if (header.size() != 2 || text::trim(header[0]) != "image_id" ||
      text::trim(header[1]) != "label") {
    throw ValidationError(located(source, 1, 0, "header must be 'image_id,label'"));
  }
  std::vector<LabeledRow> rows;
  std::unordered_set<std::string> ids;
  for (std::size_t n = 1; n < lines.size(); ++n) {
    if (text::trim(lines[n]).empty()) continue;
    const auto fields = text::split(lines[n]);
    if (fields.size() != 2) throw ValidationError(located(source, n + 1, 0, "expected 2 fields"));
    std::string id(text::trim(fields[0]));
    if (!ids.insert(id).second) {
      throw ValidationError(located(source, n + 1, 1, "duplicate image_id '" + id + "'"));
    }
    const auto name = text::trim(fields[1]);
    auto label = labels.find(name);
    if (!label) {
      throw ValidationError(located(source, n + 1, 2, "unknown label '" + std::string(name) + "'"));
    }
    rows.push_back({std::move(id), *label});
  }
  return rows;
}

}  // namespace wbcr
