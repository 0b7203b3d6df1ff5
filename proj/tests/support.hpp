#pragma once

#include "bpmri/image.hpp"
#include "bpmri/rng.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <string>

namespace bpmri::test {

inline ImageGrid RandomImage(Index n, Mode mode, std::uint64_t seed)
{
  Philox rng(seed, 0xABCDEF);
  std::normal_distribution<double> g;
  ImageGrid img(n, mode);
  for (auto &v : img.pixels()) {
    v = mode == Mode::Real ? Cx(g(rng), 0.0) : Cx(g(rng), g(rng));
  }
  return img;
}

inline double RelDiff(ImageGrid const &a, ImageGrid const &b)
{
  double num = 0, den = 0;
  for (Index i = 0; i < a.size(); i++) {
    num += std::norm(a[i] - b[i]);
    den += std::norm(b[i]);
  }
  return std::sqrt(num / std::max(den, 1e-300));
}

// Textbook O(N^2) unitary DFT: theta(k1,k2) = 1/n sum x(r,c) exp(-2 pi i (k1 r + k2 c) / n).
inline Eigen::MatrixXcd DenseDft(Index n)
{
  Index const N = n * n;
  Eigen::MatrixXcd F(N, N);
  for (Index k1 = 0; k1 < n; k1++) {
    for (Index k2 = 0; k2 < n; k2++) {
      for (Index r = 0; r < n; r++) {
        for (Index c = 0; c < n; c++) {
          double const ang = -2.0 * std::numbers::pi * static_cast<double>(k1 * r + k2 * c) / static_cast<double>(n);
          F(k1 * n + k2, r * n + c) = std::polar(1.0 / static_cast<double>(n), ang);
        }
      }
    }
  }
  return F;
}

// Dense Psi (2N x N) straight from the stencil definition.
inline Eigen::MatrixXd DensePsi(Index n)
{
  Index const N = n * n;
  Eigen::MatrixXd Psi = Eigen::MatrixXd::Zero(2 * N, N);
  for (Index r = 0; r < n; r++) {
    for (Index c = 0; c < n; c++) {
      Index const i = r * n + c;
      Psi(2 * i, i) += 1;
      Psi(2 * i, ((r - 1 + n) % n) * n + c) -= 1;
      Psi(2 * i + 1, i) += 1;
      Psi(2 * i + 1, r * n + (c + 1) % n) -= 1;
    }
  }
  return Psi;
}

inline Eigen::VectorXcd ToVector(ImageGrid const &img)
{
  Eigen::VectorXcd v(img.size());
  for (Index i = 0; i < img.size(); i++) {
    v(i) = img[i];
  }
  return v;
}

struct TempDir
{
  std::filesystem::path path;
  explicit TempDir(std::string const &name)
    : path(std::filesystem::temp_directory_path() / ("bpmri_test_" + name))
  {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

} // namespace bpmri::test
