#pragma once

#include "image.hpp"

#include <Eigen/Core>

namespace bpmri {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Stride-1 square patches with wrap-around: one patch per pixel.
struct PatchConfig
{
  Index patch_side = 6;

  Index dim() const { return patch_side * patch_side; }
};

/*
 * Column i holds the patch whose upper-left corner is pixel i (row-major pixel
 * order); entries are row-major within the patch and indices wrap modulo n.
 * For Scalar = double only the real parts of the pixels are used.
 */
template <typename Scalar>
Matrix<Scalar> extract_patches(ImageGrid const &img, PatchConfig const &cfg);

// (1/P) * sum_i R_i^T cols_i: every pixel becomes the mean of the P patch entries covering it.
template <typename Scalar>
ImageGrid aggregate_patches(Matrix<Scalar> const &cols, PatchConfig const &cfg);

// Pixel index addressed by entry `row` of patch `patch` on an n x n grid.
Index PatchPixel(Index patch, Index row, Index side, PatchConfig const &cfg);

} // namespace bpmri
