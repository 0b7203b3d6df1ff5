#pragma once

#include "image.hpp"

namespace bpmri {

/*
 * Unitary 2-D DFT (1/n scaling in each direction, n = side), so ifft2 is the
 * exact inverse and energy is preserved. Zero frequency sits at index 0;
 * centered layouts are handled by the sampling module.
 */
ImageGrid fft2(ImageGrid const &img);

// The output takes `mode`; in real mode imaginary round-off is discarded.
ImageGrid ifft2(ImageGrid const &kspace, Mode mode = Mode::Complex);

// In-place variants on a row-major n x n buffer.
void Fft2InPlace(std::span<Cx> data, Index side);
void Ifft2InPlace(std::span<Cx> data, Index side);

} // namespace bpmri
