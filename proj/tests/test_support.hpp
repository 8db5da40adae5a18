#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace hypw2v::testutil {

using Rng = std::mt19937_64;

// Uniformly distributed point in the ball of radius max_norm.
inline std::vector<double> random_ball_point(Rng& rng, std::size_t dim, double max_norm = 0.95) {
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unit;
  std::vector<double> x(dim);
  double n2 = 0.0;
  for (double& c : x) {
    c = gauss(rng);
    n2 += c * c;
  }
  const double r = max_norm * std::pow(unit(rng), 1.0 / static_cast<double>(dim)) / std::sqrt(n2);
  for (double& c : x) c *= r;
  return x;
}

inline std::vector<double> random_vector(Rng& rng, std::size_t dim, double scale = 1.0) {
  std::normal_distribution<double> gauss(0.0, scale);
  std::vector<double> v(dim);
  for (double& c : v) c = gauss(rng);
  return v;
}

// Central difference of f along every coordinate of x.
inline std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                            std::vector<double> x, double step = 1e-6) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + step;
    const double up = f(x);
    x[i] = keep - step;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2.0 * step);
  }
  return g;
}

// ||a - b|| / max(||b||, floor).
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b, double floor = 1e-3) {
  double diff = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    ref += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max(std::sqrt(ref), floor);
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("hypw2v_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace hypw2v::testutil
