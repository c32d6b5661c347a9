#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "errors.hpp"
#include "morphology.hpp"
#include "text.hpp"

namespace wbcr {

/// One row of the feature dump `image_id,nc_ratio,staining,centroid_offset,spikiness`.
struct FeatureRow {
  std::string image_id;
  std::optional<MorphVector> morph;
  std::optional<double> spikiness;
};

inline constexpr std::string_view kFeatureHeader =
    "image_id,nc_ratio,staining,centroid_offset,spikiness";

inline std::string serialize_features(const std::vector<FeatureRow>& rows) {
  std::string out(kFeatureHeader);
  out += "\n";
  for (const auto& r : rows) {
    out += r.image_id;
    if (r.morph) {
      out += "," + text::fmt_exact(r.morph->nc_ratio) + "," + text::fmt_exact(r.morph->staining) +
             "," + text::fmt_exact(r.morph->centroid_offset);
    } else {
      out += ",,,";
    }
    out += "," + (r.spikiness ? text::fmt_exact(*r.spikiness) : std::string()) + "\n";
  }
  return out;
}

/// The morph triple is present only if all three cells are filled.
inline std::vector<FeatureRow> parse_features(const std::filesystem::path& path) {
  const auto lines = text::read_lines(path);
  const std::string source = path.string();
  if (lines.empty() || text::trim(lines[0]) != kFeatureHeader) {
    throw ValidationError(located(source, 1, 0, "header must be '" + std::string(kFeatureHeader) + "'"));
  }
  std::vector<FeatureRow> rows;
  std::unordered_set<std::string> ids;
  for (std::size_t n = 1; n < lines.size(); ++n) {
    if (text::trim(lines[n]).empty()) continue;
    const auto f = text::split(lines[n]);
    if (f.size() != 5) throw ValidationError(located(source, n + 1, 0, "expected 5 fields"));
    FeatureRow r;
    r.image_id = std::string(text::trim(f[0]));
    if (!ids.insert(r.image_id).second) {
      throw ValidationError(located(source, n + 1, 1, "duplicate image_id '" + r.image_id + "'"));
    }
    std::optional<double> v[4];
    for (int c = 0; c < 4; ++c) {
      if (text::trim(f[c + 1]).empty()) continue;
      v[c] = text::to_double(f[c + 1]);
      if (!v[c] || !std::isfinite(*v[c])) {
        throw ValidationError(located(source, n + 1, c + 2, "invalid number '" + f[c + 1] + "'"));
      }
    }
    if (v[0] && v[1] && v[2]) r.morph = MorphVector{*v[0], *v[1], *v[2]};
    r.spikiness = v[3];
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace wbcr
