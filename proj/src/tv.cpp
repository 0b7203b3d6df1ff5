#include "bpmri/tv.hpp"

#include "bpmri/error.hpp"

#include <cmath>
#include <string>

namespace bpmri {

TVState TVState::Init(ImageGrid const &x, double rho, double lambda_g)
{
  TVState st{psi_apply(x), TvCoefficients(static_cast<size_t>(2 * x.size())), rho, lambda_g};
  st.validate(x.side());
  return st;
}

void TVState::validate(Index side) const
{
  if (!(rho > 0.0)) { throw InvalidConfig("rho must be > 0"); }
  if (!(lambda_g >= 0.0)) { throw InvalidConfig("lambda_g must be >= 0"); }
  auto const want = static_cast<size_t>(2 * side * side);
  if (beta.size() != want || u.size() != want) {
    throw DimensionMismatch("TV state length does not match 2N for side " + std::to_string(side));
  }
}

std::array<Cx, 2> Shrink(std::array<Cx, 2> w, double threshold)
{
  double const norm = std::sqrt(std::norm(w[0]) + std::norm(w[1]));
  if (norm <= threshold || norm == 0.0) { return {Cx{0}, Cx{0}}; }
  double const scale = (norm - threshold) / norm;
  return {w[0] * scale, w[1] * scale};
}

TvCoefficients shrink_update(ImageGrid const &x, TVState const &st)
{
  st.validate(x.side());
  auto const psi = psi_apply(x);
  double const threshold = st.lambda_g / st.rho;
  TvCoefficients beta(psi.size());
  Index const N = x.size();
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < N; i++) {
    auto const b = Shrink({psi[2 * i] + st.u[2 * i], psi[2 * i + 1] + st.u[2 * i + 1]}, threshold);
    beta[2 * i] = b[0];
    beta[2 * i + 1] = b[1];
  }
  return beta;
}

TvCoefficients dual_update(ImageGrid const &x, TVState const &st)
{
  st.validate(x.side());
  auto const psi = psi_apply(x);
  TvCoefficients u(psi.size());
  for (size_t j = 0; j < psi.size(); j++) {
    u[j] = st.u[j] + psi[j] - st.beta[j];
  }
  return u;
}

double tv_value(ImageGrid const &x)
{
  auto const psi = psi_apply(x);
  double sum = 0.0;
  for (Index i = 0; i < x.size(); i++) {
    sum += std::sqrt(std::norm(psi[2 * i]) + std::norm(psi[2 * i + 1]));
  }
  return sum;
}

double primal_residual(ImageGrid const &x, TVState const &st)
{
  st.validate(x.side());
  auto const psi = psi_apply(x);
  double sum = 0.0;
  for (size_t j = 0; j < psi.size(); j++) {
    sum += std::norm(psi[j] - st.beta[j]);
  }
  return std::sqrt(sum);
}

} // namespace bpmri
