#include "bpmri/image.hpp"

#include "bpmri/error.hpp"

#include <cmath>
#include <string>

namespace bpmri {

char const *ToString(Mode mode)
{
  return mode == Mode::Real ? "real" : "complex";
}

Mode ParseMode(std::string_view text)
{
  if (text == "real") { return Mode::Real; }
  if (text == "complex") { return Mode::Complex; }
  throw InvalidConfig("mode must be 'real' or 'complex', got '" + std::string(text) + "'");
}

ImageGrid::ImageGrid(Index side, Mode mode)
  : side_{side}
  , mode_{mode}
  , pixels_(static_cast<size_t>(side * side))
{
  if (side < 1) { throw InvalidConfig("image side must be positive"); }
}

ImageGrid::ImageGrid(Index side, std::vector<Cx> pixels, Mode mode)
  : side_{side}
  , mode_{mode}
  , pixels_{std::move(pixels)}
{
  if (side < 1) { throw InvalidConfig("image side must be positive"); }
  if (static_cast<Index>(pixels_.size()) != side * side) {
    throw DimensionMismatch("pixel count " + std::to_string(pixels_.size()) + " does not match side " +
                            std::to_string(side));
  }
  enforceMode();
}

ImageGrid ImageGrid::FromReal(Index side, std::span<double const> values)
{
  ImageGrid img(side, Mode::Real);
  if (static_cast<Index>(values.size()) != img.size()) {
    throw DimensionMismatch("pixel count does not match side");
  }
  for (Index i = 0; i < img.size(); i++) {
    img.pixels_[i] = values[i];
  }
  return img;
}

void ImageGrid::enforceMode()
{
  if (mode_ == Mode::Real) {
    for (auto &p : pixels_) {
      p.imag(0.0);
    }
  }
}

void ImageGrid::setMode(Mode mode)
{
  mode_ = mode;
  enforceMode();
}

std::vector<double> ImageGrid::real() const
{
  std::vector<double> out(pixels_.size());
  for (size_t i = 0; i < pixels_.size(); i++) {
    out[i] = pixels_[i].real();
  }
  return out;
}

std::vector<double> ImageGrid::magnitude() const
{
  std::vector<double> out(pixels_.size());
  for (size_t i = 0; i < pixels_.size(); i++) {
    out[i] = std::abs(pixels_[i]);
  }
  return out;
}

double Norm(ImageGrid const &img)
{
  double sum = 0.0;
  for (auto const &p : img.pixels()) {
    sum += std::norm(p);
  }
  return std::sqrt(sum);
}

double Dot(std::span<Cx const> a, std::span<Cx const> b)
{
  if (a.size() != b.size()) { throw DimensionMismatch("inner product of unequal lengths"); }
  double sum = 0.0;
  for (size_t i = 0; i < a.size(); i++) {
    sum += (std::conj(a[i]) * b[i]).real();
  }
  return sum;
}

} // namespace bpmri
