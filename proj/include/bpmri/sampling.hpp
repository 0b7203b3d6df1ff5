#pragma once

#include "image.hpp"
#include "io.hpp"

#include <cstdint>
#include <vector>

namespace bpmri {

enum class MaskKind
{
  Cartesian,
  Radial,
  Random, // uniform random; for testing only, not a practical trajectory
  Full
};

char const *ToString(MaskKind kind);
MaskKind ParseMaskKind(std::string_view text);

/*
 * Boolean selection over *centered* k-space: index (r, c) with DC at
 * (n/2, n/2). The DC coefficient is always selected.
 */
struct SamplingMask
{
  Index side = 0;
  std::vector<bool> selected;
  MaskKind kind = MaskKind::Full;
  double requested_rate = 1.0;
  double rate = 1.0; // achieved fraction
  std::uint64_t seed = 0;

  Index count() const;
  bool operator==(SamplingMask const &) const = default;
};

struct CartesianOptions
{
  double center_fraction = 0.2; // share of the lines reserved for the central band
  double density_power = 4.0;   // decay exponent of the line-selection density
};

// Full phase-encode lines drawn from a polynomial variable-density profile around a fixed central band.
SamplingMask gen_cartesian(Index side, double rate, std::uint64_t seed, CartesianOptions const &opts = {});
// Diametral lines uniformly spaced in angle; the smallest line count reaching `rate` is used.
SamplingMask gen_radial(Index side, double rate);
SamplingMask gen_random(Index side, double rate, std::uint64_t seed);
SamplingMask full_mask(Index side);

SamplingMask MakeMask(MaskKind kind, Index side, double rate, std::uint64_t seed, CartesianOptions const &opts = {});

// Radial mask made of exactly `lines` diametral lines.
std::vector<bool> RasterizeRadial(Index side, Index lines);

// Unshifted FFT index of centered k-space position `centered`.
Index CenteredToFft(Index centered, Index side);

// y = F_u x. Values are listed in row-major order of the selected centered positions.
struct KSpaceData
{
  SamplingMask mask;
  std::vector<Cx> values;
};

KSpaceData apply_mask(ImageGrid const &x, SamplingMask const &mask);
// F_u^H y: measured values in an otherwise zero k-space grid, inverse transformed.
ImageGrid zero_fill(KSpaceData const &y, Mode mode = Mode::Complex);

// Full unshifted k-space grid holding y at measured positions and zero elsewhere.
std::vector<Cx> ScatterKSpace(KSpaceData const &y);

// Masks persist as <dir>/mask.png (white = selected) + <dir>/mask.json.
void SaveMask(SamplingMask const &mask, fs::path const &dir);
SamplingMask LoadMask(fs::path const &dir);

// The n x n centered k-space grid (zeros where unmeasured) in the complex binary format.
void SaveKSpace(KSpaceData const &y, fs::path const &path);
KSpaceData LoadKSpace(fs::path const &path, SamplingMask const &mask);

} // namespace bpmri
