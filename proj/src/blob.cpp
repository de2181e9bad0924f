#include "mobitok/blob.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "mobitok/error.hpp"

namespace mobitok {

static_assert(std::endian::native == std::endian::little,
              "blob I/O assumes a little-endian host");

void write_f32_blob(const std::string& path,
                    const std::vector<double>& values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("[io] cannot write blob file: " + path);
  std::vector<float> f(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    f[i] = static_cast<float>(values[i]);
  out.write(reinterpret_cast<const char*>(f.data()),
            static_cast<std::streamsize>(f.size() * sizeof(float)));
  if (!out) throw DataError("[io] short write to blob file: " + path);
}

std::vector<double> read_f32_blob(const std::string& path,
                                  std::size_t expected_count,
                                  const std::string& what) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) {
    throw DataError("[io] missing blob file for " + what + ": " + path);
  }
  const auto size = static_cast<std::size_t>(in.tellg());
  if (size != expected_count * sizeof(float)) {
    throw DataError("[io] blob size mismatch for " + what + ": expected " +
                    std::to_string(expected_count * sizeof(float)) +
                    " bytes, found " + std::to_string(size));
  }
  in.seekg(0);
  std::vector<float> f(expected_count);
  in.read(reinterpret_cast<char*>(f.data()),
          static_cast<std::streamsize>(size));
  if (!in) throw DataError("[io] short read from blob file: " + path);
  std::vector<double> out(expected_count);
  for (std::size_t i = 0; i < expected_count; ++i)
    out[i] = static_cast<double>(f[i]);
  return out;
}

}  // namespace mobitok
