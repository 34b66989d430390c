#include "aerolabel/tar_writer.hpp"

#include <array>
#include <cstdio>
#include <cstring>

#include "aerolabel/error.hpp"

namespace aerolabel {

namespace {

constexpr std::size_t kBlock = 512;

void put_octal(char* field, std::size_t width, std::uint64_t value) {
  // width - 1 digits followed by NUL
  std::snprintf(field, width, "%0*llo", int(width - 1), static_cast<unsigned long long>(value));
}

}  // namespace

void TarWriter::add_file(std::string_view name, std::string_view contents) {
  if (name.empty() || name.size() > 100) {
    throw Error(ErrorCode::InvalidArgument, "tar member name must be 1..100 bytes");
  }
  std::array<char, kBlock> header{};
  std::memcpy(header.data(), name.data(), name.size());
  put_octal(header.data() + 100, 8, 0644);
  put_octal(header.data() + 108, 8, 0);
  put_octal(header.data() + 116, 8, 0);
  put_octal(header.data() + 124, 12, contents.size());
  put_octal(header.data() + 136, 12, static_cast<std::uint64_t>(mtime_ < 0 ? 0 : mtime_));
  header[156] = '0';
  std::memcpy(header.data() + 257, "ustar", 6);
  std::memcpy(header.data() + 263, "00", 2);

  std::memset(header.data() + 148, ' ', 8);
  unsigned checksum = 0;
  for (char c : header) checksum += static_cast<unsigned char>(c);
  std::snprintf(header.data() + 148, 8, "%06o", checksum);
  header[155] = ' ';

  data_.append(header.data(), header.size());
  data_.append(contents);
  const std::size_t pad = (kBlock - contents.size() % kBlock) % kBlock;
  data_.append(pad, '\0');
}

std::string TarWriter::finish() {
  data_.append(2 * kBlock, '\0');
  return std::move(data_);
}

}  // namespace aerolabel
