#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>
#include <vector>

#include "sketchxai/util/error.hpp"

namespace sketchxai::io {

// Little-endian fixed-width primitives. All supported hosts are little-endian;
// the static_assert keeps that assumption visible.
static_assert(std::endian::native == std::endian::little, "little-endian host required");

class BinaryWriter {
public:
  explicit BinaryWriter(std::ostream& out) : out_(out) {}

  template <typename T>
    requires std::is_arithmetic_v<T>
  void write(T value) {
    out_.write(reinterpret_cast<const char*>(&value), sizeof(T));
  }

  template <typename T>
    requires std::is_arithmetic_v<T>
  void write_array(const T* data, std::size_t count) {
    out_.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(T)));
  }

  void write_string(const std::string& s) {
    write<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }

  void write_magic(const char (&magic)[5]) { out_.write(magic, 4); }

  bool ok() const { return static_cast<bool>(out_); }

private:
  std::ostream& out_;
};

class BinaryReader {
public:
  explicit BinaryReader(std::istream& in) : in_(in) {}

  template <typename T>
    requires std::is_arithmetic_v<T>
  T read() {
    T value{};
    in_.read(reinterpret_cast<char*>(&value), sizeof(T));
    check();
    return value;
  }

  template <typename T>
    requires std::is_arithmetic_v<T>
  void read_array(T* data, std::size_t count) {
    in_.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(T)));
    check();
  }

  std::string read_string(std::size_t max_len = 1u << 20) {
    const auto n = read<std::uint32_t>();
    if (n > max_len) throw Error(ErrorCode::kFormat, "string length out of range");
    std::string s(n, '\0');
    in_.read(s.data(), n);
    check();
    return s;
  }

  void expect_magic(const char (&magic)[5]) {
    char got[4];
    in_.read(got, 4);
    check();
    if (std::memcmp(got, magic, 4) != 0) {
      throw Error(ErrorCode::kFormat, std::string("bad magic, expected ") + magic);
    }
  }

private:
  void check() {
    if (!in_) throw Error(ErrorCode::kFormat, "unexpected end of binary stream");
  }

  std::istream& in_;
};

}  // namespace sketchxai::io
