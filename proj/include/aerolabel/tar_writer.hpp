#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace aerolabel {

/// Minimal POSIX ustar archive builder for regular files.
class TarWriter {
 public:
  explicit TarWriter(std::int64_t mtime = 0) : mtime_(mtime) {}

  /// Names longer than 100 bytes are rejected with InvalidArgument.
  void add_file(std::string_view name, std::string_view contents);

  /// Appends the two terminating zero blocks and returns the archive.
  std::string finish();

 private:
  std::int64_t mtime_;
  std::string data_;
};

}  // namespace aerolabel
