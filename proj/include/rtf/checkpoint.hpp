#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "rtf/params.hpp"

namespace rtf {

inline constexpr int kCheckpointVersion = 1;

// Text header (format version, metadata, vocabulary, parameter manifest)
// followed by every parameter's values as little-endian float64, row-major,
// in manifest order.
struct Checkpoint {
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::string> vocab;
  ParamStore params;

  const std::string* find_meta(const std::string& key) const;
};

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
// Throws DataError on a bad magic line, version, or truncated data.
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Writes to "<path>.partial" and renames onto `path` only once `body`
// returns. On an exception the partial file is left behind and the error
// propagates.
void write_atomically(const std::filesystem::path& path,
                      const std::function<void(std::ostream&)>& body, bool binary = false);

}  // namespace rtf
