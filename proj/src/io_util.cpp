#include "io_util.hpp"

#include <charconv>
#include <cstdio>
#include <cstring>
#include <sstream>

namespace nstr {

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.emplace_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

void for_each_line(const std::string& path,
                   const std::function<void(std::size_t, std::string_view)>& fn) {
  std::ifstream in(path);
  check(in.good(), Errc::io, "cannot open file: " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (!view.empty() && view.back() == '\r') view.remove_suffix(1);
    fn(line_no, view);
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  check(in.good(), Errc::io, "cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  check(out.good(), Errc::io, "cannot write file: " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  check(out.good(), Errc::io, "write failed: " + path);
}

std::int64_t parse_i64(std::string_view s, const std::string& what, std::size_t line_no) {
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    fail(Errc::parse,
         what + ": not an integer '" + std::string(s) + "' at line " + std::to_string(line_no));
  }
  return value;
}

double parse_double(std::string_view s, const std::string& what, std::size_t line_no) {
  std::string buf(s);
  char* end = nullptr;
  double value = std::strtod(buf.c_str(), &end);
  if (end != buf.c_str() + buf.size() || buf.empty()) {
    fail(Errc::parse, what + ": not a number '" + buf + "' at line " + std::to_string(line_no));
  }
  return value;
}

void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 4);
}

void write_i64(std::ostream& out, std::int64_t v) {
  auto u = static_cast<std::uint64_t>(v);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 8);
}

void write_f32(std::ostream& out, float v) {
  std::uint32_t u;
  std::memcpy(&u, &v, 4);
  write_u32(out, u);
}

std::uint32_t read_u32(std::istream& in, const std::string& what) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  check(in.gcount() == 4, Errc::state, "truncated file while reading " + what);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::int64_t read_i64(std::istream& in, const std::string& what) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  check(in.gcount() == 8, Errc::state, "truncated file while reading " + what);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return static_cast<std::int64_t>(v);
}

float read_f32(std::istream& in, const std::string& what) {
  std::uint32_t u = read_u32(in, what);
  float v;
  std::memcpy(&v, &u, 4);
  return v;
}

std::ofstream open_out(const std::string& path, bool binary) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  check(out.good(), Errc::io, "cannot write file: " + path);
  return out;
}

std::ifstream open_in(const std::string& path, bool binary) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  check(in.good(), Errc::io, "cannot open file: " + path);
  return in;
}

std::uint64_t fnv1a64_bytes(const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t file_checksum(const std::string& path) {
  std::string bytes = read_file(path);
  return fnv1a64_bytes(bytes.data(), bytes.size());
}

std::string format_double(double v, int significant_digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", significant_digits, v);
  return buf;
}

}  // namespace nstr
