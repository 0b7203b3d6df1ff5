#pragma once

#include "image.hpp"

#include <limits>

namespace bpmri {

inline constexpr double kPeak = 255.0;

// Mean squared difference of magnitudes.
double mse(ImageGrid const &x, ImageGrid const &ref);

// 10 log10(255^2 / MSE) on magnitudes; +infinity for identical images. Throws for a constant reference.
double psnr(ImageGrid const &x, ImageGrid const &ref);

} // namespace bpmri
