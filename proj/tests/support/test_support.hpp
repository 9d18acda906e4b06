#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "harass/io.hpp"
#include "harass/matrix.hpp"

namespace harass::testing {

inline std::filesystem::path fixture(const std::string& name) { return std::filesystem::path(HARASS_FIXTURE_DIR) / name; }
inline std::filesystem::path data_file(const std::string& name) { return std::filesystem::path(HARASS_DATA_DIR) / name; }

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("harass_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Small generator helpers for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : engine_(seed) {}

  std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
  double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  double normal(double mean = 0.0, double sd = 1.0) { return std::normal_distribution<double>(mean, sd)(engine_); }
  bool coin(double p = 0.5) { return real(0.0, 1.0) < p; }

  std::vector<double> reals(std::size_t n, double lo, double hi) {
    std::vector<double> v(n);
    for (auto& x : v) x = real(lo, hi);
    return v;
  }

  Matrix matrix(std::size_t rows, std::size_t cols, double lo, double hi) {
    Matrix m(rows, cols);
    for (auto& x : m.data()) x = real(lo, hi);
    return m;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

inline std::string slurp(const std::filesystem::path& p) { return io::read_file(p); }

}  // namespace harass::testing
