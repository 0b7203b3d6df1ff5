#include "bpmri/difference.hpp"

#include "bpmri/error.hpp"
#include "bpmri/fft.hpp"

#include <algorithm>
#include <string>

namespace bpmri {

TvCoefficients psi_apply(ImageGrid const &img)
{
  Index const n = img.side();
  TvCoefficients beta(static_cast<size_t>(2 * img.size()));
#pragma omp parallel for schedule(static)
  for (Index r = 0; r < n; r++) {
    Index const up = (r - 1 + n) % n;
    for (Index c = 0; c < n; c++) {
      Index const i = r * n + c;
      beta[2 * i] = img(r, c) - img(up, c);
      beta[2 * i + 1] = img(r, c) - img(r, (c + 1) % n);
    }
  }
  return beta;
}

ImageGrid psi_transpose_apply(TvCoefficients const &beta, Index side, Mode mode)
{
  if (static_cast<Index>(beta.size()) != 2 * side * side) {
    throw DimensionMismatch("TV coefficient length " + std::to_string(beta.size()) + " != 2N for side " +
                            std::to_string(side));
  }
  Index const n = side;
  ImageGrid out(n, Mode::Complex);
  // (Psi^T b)(r, c) = bv(r, c) - bv(r + 1, c) + bh(r, c) - bh(r, c - 1)
#pragma omp parallel for schedule(static)
  for (Index r = 0; r < n; r++) {
    Index const down = (r + 1) % n;
    for (Index c = 0; c < n; c++) {
      Index const left = (c - 1 + n) % n;
      out(r, c) = beta[2 * (r * n + c)] - beta[2 * (down * n + c)] + beta[2 * (r * n + c) + 1] -
                  beta[2 * (r * n + left) + 1];
    }
  }
  out.setMode(mode);
  return out;
}

DifferenceOperator laplacian_eigenvalues(Index side)
{
  if (side < 2) { throw InvalidConfig("difference operator needs side >= 2"); }
  // First column of Psi^T Psi: its response to a delta at pixel 0.
  ImageGrid delta(side, Mode::Real);
  delta[0] = 1.0;
  auto column = psi_transpose_apply(psi_apply(delta), side, Mode::Real);
  auto spectrum = fft2(column);
  DifferenceOperator op{side, std::vector<double>(static_cast<size_t>(side * side))};
  double const scale = static_cast<double>(side); // undo the unitary 1/n
  for (Index i = 0; i < side * side; i++) {
    op.eigenvalues[i] = std::max(0.0, spectrum[i].real() * scale);
  }
  return op;
}

} // namespace bpmri
