#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "errors.hpp"

namespace wbcr {

using ClassId = std::size_t;

/// Ordered catalog of class names. Every probability vector, count table and
/// confusion matrix in the library is indexed by position in a LabelSet.
class LabelSet {
 public:
  LabelSet() = default;

  /// Throws ValidationError on an empty name, a duplicate name, or fewer
  /// than two classes.
  explicit LabelSet(std::vector<std::string> names) : names_(std::move(names)) {
    if (names_.size() < 2) {
      throw ValidationError("label set needs at least 2 classes, got " +
                            std::to_string(names_.size()));
    }
    for (std::size_t i = 0; i < names_.size(); ++i) {
      if (names_[i].empty()) {
        throw ValidationError("empty class name at position " + std::to_string(i));
      }
      if (!index_.emplace(names_[i], i).second) {
        throw ValidationError("duplicate class name '" + names_[i] + "'");
      }
    }
  }

  std::size_t size() const noexcept { return names_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  const std::string& name_at(ClassId id) const { return names_.at(id); }

  std::optional<ClassId> find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  ClassId index_of(std::string_view name) const {
    if (auto id = find(name)) return *id;
    throw ValidationError("unknown class name '" + std::string(name) + "'");
  }

  bool contains(std::string_view name) const { return find(name).has_value(); }

  friend bool operator==(const LabelSet& a, const LabelSet& b) { return a.names_ == b.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, ClassId> index_;
};

inline LabelSet build_label_set(std::vector<std::string> names) {
  return LabelSet(std::move(names));
}

// The five classes named in the literature are fixed; the remaining eight
// are placeholders until a real catalog is supplied with --labels.
inline const std::vector<std::string>& default_class_names() {
  static const std::vector<std::string> names = {"SNE", "LY",  "VLY", "PLY", "PC",
                                                 "C06", "C07", "C08", "C09", "C10",
                                                 "C11", "C12", "C13"};
  return names;
}

inline LabelSet default_label_set() { return LabelSet(default_class_names()); }

}  // namespace wbcr
