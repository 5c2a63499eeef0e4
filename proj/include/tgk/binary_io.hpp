#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "tgk/errors.hpp"

namespace tgk::binary {

template <typename U>
void put_uint(std::ostream& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.put(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
  }
}

template <typename U>
U get_uint(std::istream& in) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    const int c = in.get();
    if (c == std::char_traits<char>::eof()) throw FormatError("unexpected end of file");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return static_cast<U>(v);
}

inline void put_f32(std::ostream& out, float f) { put_uint(out, std::bit_cast<std::uint32_t>(f)); }
inline float get_f32(std::istream& in) { return std::bit_cast<float>(get_uint<std::uint32_t>(in)); }
inline void put_f64(std::ostream& out, double d) { put_uint(out, std::bit_cast<std::uint64_t>(d)); }
inline double get_f64(std::istream& in) { return std::bit_cast<double>(get_uint<std::uint64_t>(in)); }

inline void expect_magic(std::istream& in, const char (&magic)[5]) {
  char buf[4] = {};
  in.read(buf, 4);
  if (!in || std::memcmp(buf, magic, 4) != 0) {
    throw FormatError(std::string("bad magic, expected ") + magic);
  }
}

}  // namespace tgk::binary
