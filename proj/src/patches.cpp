#include "bpmri/patches.hpp"

#include "bpmri/error.hpp"

#include <cmath>
#include <string>

namespace bpmri {

namespace {

void CheckConfig(Index side, PatchConfig const &cfg)
{
  if (cfg.patch_side < 1 || cfg.patch_side > side) {
    throw InvalidConfig("patch side " + std::to_string(cfg.patch_side) + " must be in [1, " +
                        std::to_string(side) + "]");
  }
}

template <typename Scalar>
Scalar Convert(Cx const &v)
{
  if constexpr (std::is_same_v<Scalar, double>) {
    return v.real();
  } else {
    return v;
  }
}

} // namespace

Index PatchPixel(Index patch, Index row, Index side, PatchConfig const &cfg)
{
  Index const r = patch / side;
  Index const c = patch % side;
  Index const a = row / cfg.patch_side;
  Index const b = row % cfg.patch_side;
  return ((r + a) % side) * side + (c + b) % side;
}

template <typename Scalar>
Matrix<Scalar> extract_patches(ImageGrid const &img, PatchConfig const &cfg)
{
  Index const n = img.side();
  CheckConfig(n, cfg);
  Index const ps = cfg.patch_side;
  Matrix<Scalar> X(cfg.dim(), img.size());
#pragma omp parallel for schedule(static)
  for (Index r = 0; r < n; r++) {
    for (Index c = 0; c < n; c++) {
      auto col = X.col(r * n + c);
      for (Index a = 0; a < ps; a++) {
        Index const rr = (r + a) % n;
        for (Index b = 0; b < ps; b++) {
          col(a * ps + b) = Convert<Scalar>(img(rr, (c + b) % n));
        }
      }
    }
  }
  return X;
}

template <typename Scalar>
ImageGrid aggregate_patches(Matrix<Scalar> const &cols, PatchConfig const &cfg)
{
  Index const N = cols.cols();
  Index const n = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(N))));
  if (n * n != N) { throw DimensionMismatch("patch count " + std::to_string(N) + " is not a square"); }
  if (cols.rows() != cfg.dim()) {
    throw DimensionMismatch("patch length " + std::to_string(cols.rows()) + " does not match patch side");
  }
  CheckConfig(n, cfg);
  Index const ps = cfg.patch_side;
  double const inv = 1.0 / static_cast<double>(cfg.dim());
  ImageGrid img(n, std::is_same_v<Scalar, double> ? Mode::Real : Mode::Complex);
  // Gather per pixel in a fixed (a, b) order so the sum is independent of threading.
#pragma omp parallel for schedule(static)
  for (Index r = 0; r < n; r++) {
    for (Index c = 0; c < n; c++) {
      Scalar sum{0};
      for (Index a = 0; a < ps; a++) {
        Index const pr = (r - a + n) % n;
        for (Index b = 0; b < ps; b++) {
          Index const pc = (c - b + n) % n;
          sum += cols(a * ps + b, pr * n + pc);
        }
      }
      img(r, c) = Cx(sum) * inv;
    }
  }
  return img;
}

template Matrix<double> extract_patches<double>(ImageGrid const &, PatchConfig const &);
template Matrix<Cx> extract_patches<Cx>(ImageGrid const &, PatchConfig const &);
template ImageGrid aggregate_patches<double>(Matrix<double> const &, PatchConfig const &);
template ImageGrid aggregate_patches<Cx>(Matrix<Cx> const &, PatchConfig const &);

} // namespace bpmri
