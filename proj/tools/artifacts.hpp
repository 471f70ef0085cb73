#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace fseg3d::cli {

/// Output files of one command, held in memory until everything has been
/// computed so that a failing run leaves nothing behind.
class Artifacts {
 public:
  void add(std::string name, std::string bytes) { files_.emplace_back(std::move(name), std::move(bytes)); }
  const std::vector<std::pair<std::string, std::string>>& files() const { return files_; }

  /// Writes every file under `dir` (created if needed). If any write fails
  /// the files written so far, and `dir` itself if this call created it, are
  /// removed before the error propagates.
  void commit(const std::filesystem::path& dir) const;

 private:
  std::vector<std::pair<std::string, std::string>> files_;
};

}  // namespace fseg3d::cli
