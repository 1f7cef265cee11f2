#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>

namespace gpcaflow {

/// Invalid or out-of-domain input: boundary simplex points, malformed
/// files, shape mismatches. The CLI maps this to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure at runtime: diverging optimizers, non-finite
/// states. The CLI maps this to exit code 3.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace io {

// Little-endian binary primitives, independent of host byte order.
void write_u32(std::ostream& out, std::uint32_t v);
void write_f64(std::ostream& out, double v);
std::uint32_t read_u32(std::istream& in, const std::string& what);
double read_f64(std::istream& in, const std::string& what);
void write_magic(std::ostream& out, const std::string& magic);
void expect_magic(std::istream& in, const std::string& magic, const std::string& what);

}  // namespace io

}  // namespace gpcaflow
