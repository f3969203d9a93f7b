#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "common.hpp"

namespace nstr {

std::vector<std::string> split(std::string_view s, char sep);

// Calls fn(line_number, line) for every line of a `\n`-terminated UTF-8 file.
// Line numbers are 1-based; a trailing `\r` is stripped.
void for_each_line(const std::string& path,
                   const std::function<void(std::size_t, std::string_view)>& fn);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

std::int64_t parse_i64(std::string_view s, const std::string& what, std::size_t line_no);
double parse_double(std::string_view s, const std::string& what, std::size_t line_no);

// Little-endian binary io on top of iostreams; files produced on any platform
// read back identically.
void write_u32(std::ostream& out, std::uint32_t v);
void write_i64(std::ostream& out, std::int64_t v);
void write_f32(std::ostream& out, float v);
std::uint32_t read_u32(std::istream& in, const std::string& what);
std::int64_t read_i64(std::istream& in, const std::string& what);
float read_f32(std::istream& in, const std::string& what);

std::ofstream open_out(const std::string& path, bool binary = false);
std::ifstream open_in(const std::string& path, bool binary = false);

std::uint64_t fnv1a64_bytes(const void* data, std::size_t n);
std::uint64_t file_checksum(const std::string& path);

std::string format_double(double v, int significant_digits);

}  // namespace nstr
