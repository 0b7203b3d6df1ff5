#include "bpmri/phantom.hpp"

#include "bpmri/error.hpp"
#include "bpmri/rng.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace bpmri {

namespace {

struct Ellipse
{
  double cx, cy, ax, ay, angle_deg, value;
  bool additive;
};

struct Rect
{
  double x0, y0, x1, y1, value;
};

bool Inside(Ellipse const &e, double u, double v)
{
  double const t = e.angle_deg * std::numbers::pi / 180.0;
  double const du = u - e.cx;
  double const dv = v - e.cy;
  double const a = (du * std::cos(t) + dv * std::sin(t)) / e.ax;
  double const b = (-du * std::sin(t) + dv * std::cos(t)) / e.ay;
  return a * a + b * b <= 1.0;
}

/*
 * Coordinates: u runs left to right, v top to bottom, both over [-1, 1].
 * Painted in order, later shapes overwrite earlier ones:
 *   body disk r = 0.9 (90), two nested blocks (170, 120), three vertical bars (220),
 *   an ellipse (40) and three small dots r = 0.07 (255).
 */
double GeLike(double u, double v)
{
  double value = 0.0;
  if (u * u + v * v <= 0.9 * 0.9) { value = 90.0; }
  static Rect const blocks[] = {
    {-0.65, -0.65, -0.15, -0.2, 170.0},
    {-0.55, -0.55, -0.3, -0.35, 120.0},
    {0.08, 0.15, 0.15, 0.7, 220.0},
    {0.23, 0.15, 0.30, 0.7, 220.0},
    {0.38, 0.15, 0.45, 0.7, 220.0},
  };
  for (auto const &r : blocks) {
    if (u >= r.x0 && u <= r.x1 && v >= r.y0 && v <= r.y1) { value = r.value; }
  }
  if (Inside({-0.35, 0.4, 0.28, 0.16, 0.0, 40.0, false}, u, v)) { value = 40.0; }
  static double const dots[][2] = {{0.3, -0.5}, {0.5, -0.3}, {0.55, 0.0}};
  for (auto const &d : dots) {
    double const du = u - d[0];
    double const dv = v - d[1];
    if (du * du + dv * dv <= 0.07 * 0.07) { value = 255.0; }
  }
  return value;
}

// Modified Shepp-Logan (Toft), additive intensities, scaled so the brightest region is 255.
double SheppLike(double u, double v)
{
  static Ellipse const parts[] = {
    {0.0, 0.0, 0.69, 0.92, 0.0, 1.0, true},
    {0.0, -0.0184, 0.6624, 0.874, 0.0, -0.8, true},
    {0.22, 0.0, 0.11, 0.31, -18.0, -0.2, true},
    {-0.22, 0.0, 0.16, 0.41, 18.0, -0.2, true},
    {0.0, 0.35, 0.21, 0.25, 0.0, 0.1, true},
    {0.0, 0.1, 0.046, 0.046, 0.0, 0.1, true},
    {0.0, -0.1, 0.046, 0.046, 0.0, 0.1, true},
    {-0.08, -0.605, 0.046, 0.023, 0.0, 0.1, true},
    {0.0, -0.606, 0.023, 0.023, 0.0, 0.1, true},
    {0.06, -0.605, 0.023, 0.046, 0.0, 0.1, true},
  };
  double value = 0.0;
  // The table is in Cartesian orientation (y up).
  for (auto const &e : parts) {
    if (Inside(e, u, -v)) { value += e.value; }
  }
  return std::max(0.0, value) * 255.0;
}

} // namespace

char const *ToString(PhantomKind kind)
{
  return kind == PhantomKind::GeLike ? "ge-like" : "shepp-like";
}

PhantomKind ParsePhantomKind(std::string_view text)
{
  if (text == "ge-like" || text == "ge") { return PhantomKind::GeLike; }
  if (text == "shepp-like" || text == "shepp") { return PhantomKind::SheppLike; }
  throw InvalidConfig("phantom kind must be 'ge-like' or 'shepp-like', got '" + std::string(text) + "'");
}

ImageGrid make_phantom(Index side, PhantomKind kind)
{
  if (side < 32) { throw InvalidConfig("phantom side must be >= 32"); }
  std::vector<double> values(static_cast<size_t>(side * side));
  for (Index r = 0; r < side; r++) {
    double const v = (2.0 * r + 1.0) / static_cast<double>(side) - 1.0;
    for (Index c = 0; c < side; c++) {
      double const u = (2.0 * c + 1.0) / static_cast<double>(side) - 1.0;
      values[r * side + c] = kind == PhantomKind::GeLike ? GeLike(u, v) : SheppLike(u, v);
    }
  }
  return ImageGrid::FromReal(side, values);
}

ImageGrid add_noise(ImageGrid const &img, double sigma, std::uint64_t seed)
{
  if (!(sigma >= 0.0)) { throw InvalidConfig("noise sigma must be >= 0"); }
  ImageGrid out = img;
  if (sigma == 0.0) { return out; }
  auto rng = MakeRng(seed, StreamTag::ImageNoise);
  std::normal_distribution<double> normal;
  if (img.isReal()) {
    for (auto &p : out.pixels()) {
      p += sigma * normal(rng);
    }
  } else {
    double const s = sigma / std::sqrt(2.0);
    for (auto &p : out.pixels()) {
      double const re = normal(rng);
      double const im = normal(rng);
      p += Cx(s * re, s * im);
    }
  }
  return out;
}

} // namespace bpmri
