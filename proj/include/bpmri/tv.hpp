#pragma once

#include "difference.hpp"
#include "image.hpp"

#include <array>

namespace bpmri {

/*
 * ADMM split for isotropic TV: beta stands in for Psi x, u = eta / rho is the
 * scaled dual. Both have the 2N layout of TvCoefficients.
 */
struct TVState
{
  TvCoefficients beta;
  TvCoefficients u;
  double rho = 1000.0;
  double lambda_g = 10.0;

  // beta = Psi x, u = 0.
  static TVState Init(ImageGrid const &x, double rho, double lambda_g);
  void validate(Index side) const;
};

// argmin_b  threshold * ||b|| + 1/2 ||w - b||^2 for a 2-vector w; zero maps to zero.
std::array<Cx, 2> Shrink(std::array<Cx, 2> w, double threshold);

// beta_i' = shrink(psi_i x + u_i, lambda_g / rho) for every pixel.
TvCoefficients shrink_update(ImageGrid const &x, TVState const &st);
// u' = u + Psi x - beta.
TvCoefficients dual_update(ImageGrid const &x, TVState const &st);

double tv_value(ImageGrid const &x);
// ||Psi x - beta||_2
double primal_residual(ImageGrid const &x, TVState const &st);

} // namespace bpmri
