#pragma once

#include <complex>
#include <span>
#include <string_view>
#include <vector>

namespace bpmri {

using Index = long;
using Cx = std::complex<double>;

enum class Mode
{
  Real,
  Complex
};

char const *ToString(Mode mode);
Mode ParseMode(std::string_view text);

/*
 * Square n x n image, pixels stored row-major as complex values.
 * In real mode every imaginary part is held at exactly zero.
 */
class ImageGrid
{
public:
  ImageGrid() = default;
  ImageGrid(Index side, Mode mode = Mode::Real);
  ImageGrid(Index side, std::vector<Cx> pixels, Mode mode);

  static ImageGrid FromReal(Index side, std::span<double const> values);

  Index side() const { return side_; }
  Index size() const { return side_ * side_; }
  Mode mode() const { return mode_; }
  bool isReal() const { return mode_ == Mode::Real; }

  Cx &operator()(Index row, Index col) { return pixels_[row * side_ + col]; }
  Cx const &operator()(Index row, Index col) const { return pixels_[row * side_ + col]; }
  Cx &operator[](Index i) { return pixels_[i]; }
  Cx const &operator[](Index i) const { return pixels_[i]; }

  std::span<Cx> pixels() { return pixels_; }
  std::span<Cx const> pixels() const { return pixels_; }

  // Zeroes imaginary parts when in real mode.
  void enforceMode();
  void setMode(Mode mode);

  std::vector<double> real() const;
  std::vector<double> magnitude() const;

  bool operator==(ImageGrid const &other) const = default;

private:
  Index side_ = 0;
  Mode mode_ = Mode::Real;
  std::vector<Cx> pixels_;
};

double Norm(ImageGrid const &img);
double Dot(std::span<Cx const> a, std::span<Cx const> b); // Re <a, b>

} // namespace bpmri
