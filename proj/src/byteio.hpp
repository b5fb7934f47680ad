#pragma once

// Little-endian load/store helpers shared by the binary readers and writers.

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

namespace slicescout::detail {

template <typename T>
T byteswap(T value) {
  auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
  std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<T>(bytes);
}

/// Loads a T from `data` stored in the given byte order.
template <typename T>
T load(const unsigned char* data, bool little_endian = true) {
  T value;
  std::memcpy(&value, data, sizeof(T));
  const bool host_little = std::endian::native == std::endian::little;
  return host_little == little_endian ? value : byteswap(value);
}

template <typename T>
void store_le(std::vector<unsigned char>& out, T value) {
  if constexpr (std::endian::native != std::endian::little) value = byteswap(value);
  const auto* p = reinterpret_cast<const unsigned char*>(&value);
  out.insert(out.end(), p, p + sizeof(T));
}

template <typename T>
void store_le_at(std::vector<unsigned char>& out, std::size_t offset, T value) {
  if constexpr (std::endian::native != std::endian::little) value = byteswap(value);
  std::memcpy(out.data() + offset, &value, sizeof(T));
}

/// Reads a whole file, inflating gzip content transparently.
std::vector<unsigned char> read_file_bytes(const std::string& path);

/// Writes bytes, gzip-compressing when `gzip` is set.
void write_file_bytes(const std::string& path, std::span<const unsigned char> bytes,
                      bool gzip = false);

}  // namespace slicescout::detail
