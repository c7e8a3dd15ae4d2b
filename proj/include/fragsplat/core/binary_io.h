#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>

namespace fragsplat {

// Little-endian packing shared by the binary file formats.
inline void PutU32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void PutF32(std::string& out, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, sizeof(bits));
  PutU32(out, bits);
}

inline std::uint32_t GetU32(const std::string& in, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[offset + i]))
         << (8 * i);
  }
  return v;
}

inline float GetF32(const std::string& in, std::size_t offset) {
  const std::uint32_t bits = GetU32(in, offset);
  float f;
  std::memcpy(&f, &bits, sizeof(f));
  return f;
}

// Whole-file read/write; failures throw IoError.
std::string ReadFileBytes(const std::filesystem::path& path);
void WriteFileBytes(const std::filesystem::path& path, const std::string& bytes);

}  // namespace fragsplat
