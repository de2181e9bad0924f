#ifndef MOBITOK_BLOB_HPP
#define MOBITOK_BLOB_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace mobitok {

// Raw little-endian float32 files. Values cross the double<->float boundary
// here; everything downstream of a load sees the float-rounded numbers.
void write_f32_blob(const std::string& path, const std::vector<double>& values);
std::vector<double> read_f32_blob(const std::string& path,
                                  std::size_t expected_count,
                                  const std::string& what);

}  // namespace mobitok

#endif  // MOBITOK_BLOB_HPP
