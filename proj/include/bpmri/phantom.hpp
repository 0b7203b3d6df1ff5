#pragma once

#include "image.hpp"

#include <cstdint>

namespace bpmri {

enum class PhantomKind
{
  GeLike,   // resolution-style phantom: disk, blocks, bars, dots
  SheppLike // modified Shepp-Logan
};

char const *ToString(PhantomKind kind);
PhantomKind ParsePhantomKind(std::string_view text);

// Piecewise-constant phantom on [0, 255] with an exactly black background. n >= 32.
ImageGrid make_phantom(Index side, PhantomKind kind);

// i.i.d. Gaussian noise; complex images get sigma / sqrt(2) per component.
ImageGrid add_noise(ImageGrid const &img, double sigma, std::uint64_t seed);

} // namespace bpmri
