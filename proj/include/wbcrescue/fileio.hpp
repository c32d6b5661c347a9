#pragma once

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include <unistd.h>

#include "errors.hpp"

namespace wbcr::fileio {

namespace fs = std::filesystem;

/// Collects output files and publishes them together: every file is first
/// written to a temporary sibling, and only when all writes succeed are they
/// renamed into place.
class AtomicOutputs {
 public:
  void add(fs::path path, std::string content) {
    files_.emplace_back(std::move(path), std::move(content));
  }

  void commit() {
    std::vector<fs::path> temps;
    auto cleanup = [&] {
      std::error_code ec;
      for (const auto& t : temps) fs::remove(t, ec);
    };
    for (const auto& [path, content] : files_) {
      fs::path tmp = path;
      tmp += ".tmp-" + std::to_string(::getpid()) + "-" + std::to_string(counter()++);
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) {
        cleanup();
        throw IoError("cannot write '" + path.string() + "'");
      }
      temps.push_back(tmp);
      out.write(content.data(), static_cast<std::streamsize>(content.size()));
      out.close();
      if (!out) {
        cleanup();
        throw IoError("write failure on '" + path.string() + "'");
      }
    }
    for (std::size_t i = 0; i < files_.size(); ++i) {
      std::error_code ec;
      fs::rename(temps[i], files_[i].first, ec);
      if (ec) {
        cleanup();
        throw IoError("cannot rename into '" + files_[i].first.string() + "': " + ec.message());
      }
    }
    files_.clear();
  }

 private:
  static std::atomic<unsigned long>& counter() {
    static std::atomic<unsigned long> c{0};
    return c;
  }
  std::vector<std::pair<fs::path, std::string>> files_;
};

inline void write_atomic(const fs::path& path, std::string content) {
  AtomicOutputs out;
  out.add(path, std::move(content));
  out.commit();
}

/// Netpbm files in `dir` keyed by file stem (the image id), sorted by id.
inline std::map<std::string, fs::path> list_netpbm(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoError("not a directory: '" + dir.string() + "'");
  std::map<std::string, fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension().string();
    if (ext != ".ppm" && ext != ".pgm" && ext != ".pnm") continue;
    const auto id = entry.path().stem().string();
    if (!out.emplace(id, entry.path()).second) {
      throw ValidationError("two image files share the id '" + id + "' in '" + dir.string() + "'");
    }
  }
  if (ec) throw IoError("cannot list '" + dir.string() + "': " + ec.message());
  return out;
}

}  // namespace wbcr::fileio
