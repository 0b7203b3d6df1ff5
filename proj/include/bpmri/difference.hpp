#pragma once

#include "image.hpp"

#include <vector>

namespace bpmri {

/*
 * Stacked TV coefficients beta = Psi x, length 2N. Entries (2i, 2i+1) are the
 * vertical and horizontal differences at pixel i:
 *   x(r, c) - x(r - 1, c)   and   x(r, c) - x(r, c + 1),
 * indices periodic in both directions.
 */
using TvCoefficients = std::vector<Cx>;

TvCoefficients psi_apply(ImageGrid const &img);
ImageGrid psi_transpose_apply(TvCoefficients const &beta, Index side, Mode mode = Mode::Complex);

// Psi^T Psi is circulant, so the unitary DFT diagonalizes it.
struct DifferenceOperator
{
  Index side = 0;
  std::vector<double> eigenvalues; // row-major over unshifted frequencies (k1, k2)
};

DifferenceOperator laplacian_eigenvalues(Index side);

} // namespace bpmri
