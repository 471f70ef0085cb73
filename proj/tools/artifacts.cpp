#include "artifacts.hpp"

#include <system_error>

#include "fseg3d/io.hpp"

namespace fseg3d::cli {

void Artifacts::commit(const std::filesystem::path& dir) const {
  namespace fs = std::filesystem;
  const bool created = !fs::exists(dir);
  std::vector<fs::path> written;
  try {
    fs::create_directories(dir);
    for (const auto& [name, bytes] : files_) {
      const fs::path path = dir / name;
      write_file(path, bytes);
      written.push_back(path);
    }
  } catch (...) {
    std::error_code ec;
    for (const auto& p : written) fs::remove(p, ec);
    if (created) fs::remove_all(dir, ec);
    throw;
  }
}

}  // namespace fseg3d::cli
