#include "gpcaflow/common.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <istream>
#include <ostream>

namespace gpcaflow::io {

namespace {

template <typename T>
void write_le(std::ostream& out, T v) {
  std::array<unsigned char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes.begin(), bytes.end());
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
T read_le(std::istream& in, const std::string& what) {
  std::array<unsigned char, sizeof(T)> bytes;
  in.read(reinterpret_cast<char*>(bytes.data()), sizeof(T));
  if (!in) {
    throw DataError(what + ": truncated file");
  }
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes.begin(), bytes.end());
  }
  T v;
  std::memcpy(&v, bytes.data(), sizeof(T));
  return v;
}

}  // namespace

void write_u32(std::ostream& out, std::uint32_t v) { write_le(out, v); }
void write_f64(std::ostream& out, double v) { write_le(out, v); }

std::uint32_t read_u32(std::istream& in, const std::string& what) {
  return read_le<std::uint32_t>(in, what);
}

double read_f64(std::istream& in, const std::string& what) {
  return read_le<double>(in, what);
}

void write_magic(std::ostream& out, const std::string& magic) {
  out.write(magic.data(), static_cast<std::streamsize>(magic.size()));
}

void expect_magic(std::istream& in, const std::string& magic,
                  const std::string& what) {
  std::string got(magic.size(), '\0');
  in.read(got.data(), static_cast<std::streamsize>(got.size()));
  if (!in || got != magic) {
    throw DataError(what + ": bad magic, expected \"" + magic + "\"");
  }
}

}  // namespace gpcaflow::io
