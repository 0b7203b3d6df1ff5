#include "bpmri/metrics.hpp"

#include "bpmri/error.hpp"

#include <cmath>

namespace bpmri {

double mse(ImageGrid const &x, ImageGrid const &ref)
{
  if (x.side() != ref.side()) { throw DimensionMismatch("PSNR of images with different sides"); }
  double sum = 0.0;
  for (Index i = 0; i < x.size(); i++) {
    double const d = std::abs(x[i]) - std::abs(ref[i]);
    sum += d * d;
  }
  return sum / static_cast<double>(x.size());
}

double psnr(ImageGrid const &x, ImageGrid const &ref)
{
  if (x.side() != ref.side()) { throw DimensionMismatch("PSNR of images with different sides"); }
  if (ref.size() == 0) { throw InvalidConfig("PSNR of an empty image"); }
  bool constant = true;
  double const first = std::abs(ref[0]);
  for (Index i = 1; i < ref.size() && constant; i++) {
    constant = std::abs(ref[i]) == first;
  }
  if (constant) { throw InvalidConfig("PSNR reference image is constant"); }
  double const err = mse(x, ref);
  if (err == 0.0) { return std::numeric_limits<double>::infinity(); }
  return 10.0 * std::log10(kPeak * kPeak / err);
}

} // namespace bpmri
