#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace harass::io {

/// One parsed record plus the physical line it started on.
struct CsvRecord {
  std::vector<std::string> fields;
  std::size_t line = 0;
};

/// RFC 4180 reader: quoted fields may hold the delimiter, doubled quotes
/// and line breaks. Throws MalformedRow on an unterminated quote.
std::vector<CsvRecord> read_delimited(std::string_view content, char delimiter);

std::string quote_field(std::string_view field, char delimiter);
void write_record(std::ostream& out, std::span<const std::string> fields, char delimiter);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);
double parse_double(std::string_view text);

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t hash = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

/// Doubles packed as little-endian IEEE-754 bytes.
std::string encode_doubles(std::span<const double> values);
std::vector<double> decode_doubles(std::string_view base64);

/// Little-endian binary streams.
class BinaryWriter {
 public:
  explicit BinaryWriter(std::ostream& out) : out_(out) {}
  void bytes(std::string_view raw);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f64(double v);

 private:
  std::ostream& out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(std::istream& in) : in_(in) {}
  std::string bytes(std::size_t n);
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();

 private:
  std::istream& in_;
};

}  // namespace harass::io
