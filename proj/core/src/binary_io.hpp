#pragma once

// Little-endian primitive encoding for the binary file formats. Not installed.

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "semhash/error.hpp"

namespace semhash::detail {

class BinaryWriter {
 public:
  explicit BinaryWriter(std::ostream& out) : out_(out) {}

  void bytes(std::string_view s) { out_.write(s.data(), static_cast<std::streamsize>(s.size())); }
  void u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v), 8); }
  void str(std::string_view s) {
    u64(s.size());
    bytes(s);
  }

 private:
  void le(std::uint64_t v, int n) {
    char buf[8];
    for (int i = 0; i < n; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out_.write(buf, n);
  }
  std::ostream& out_;
};

class BinaryReader {
 public:
  BinaryReader(std::istream& in, std::string_view source) : in_(in), source_(source) {}

  std::string bytes(std::size_t n, std::string_view what) {
    std::string s(n, '\0');
    if (n > remaining_hint_) {
      // refuse absurd lengths before allocating
      throw ParseError(where(what) + ": length " + std::to_string(n) + " too large");
    }
    in_.read(s.data(), static_cast<std::streamsize>(n));
    check(what);
    offset_ += n;
    return s;
  }
  std::uint8_t u8(std::string_view what) { return static_cast<std::uint8_t>(le(1, what)); }
  std::uint32_t u32(std::string_view what) { return static_cast<std::uint32_t>(le(4, what)); }
  std::uint64_t u64(std::string_view what) { return le(8, what); }
  double f64(std::string_view what) { return std::bit_cast<double>(le(8, what)); }
  std::string str(std::string_view what) { return bytes(u64(what), what); }

  std::string where(std::string_view what) const {
    return std::string(source_) + " @" + std::to_string(offset_) + " (" + std::string(what) + ")";
  }
  void expect_end() {
    if (in_.peek() != std::char_traits<char>::eof()) {
      throw ParseError(where("end") + ": trailing bytes");
    }
  }

 private:
  std::uint64_t le(int n, std::string_view what) {
    unsigned char buf[8];
    in_.read(reinterpret_cast<char*>(buf), n);
    check(what);
    offset_ += static_cast<std::size_t>(n);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
  }
  void check(std::string_view what) {
    if (!in_) throw ParseError(where(what) + ": unexpected end of file");
  }

  std::istream& in_;
  std::string_view source_;
  std::size_t offset_ = 0;
  std::size_t remaining_hint_ = std::size_t{1} << 32;
};

}  // namespace semhash::detail
