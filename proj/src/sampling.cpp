#include "bpmri/sampling.hpp"

#include "bpmri/error.hpp"
#include "bpmri/fft.hpp"
#include "bpmri/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>

namespace bpmri {

using json = nlohmann::json;

namespace {

void CheckRate(double rate)
{
  if (!(rate > 0.0 && rate <= 1.0)) {
    throw InvalidConfig("sampling rate must lie in (0,1], got " + std::to_string(rate));
  }
}

void CheckSide(Index side)
{
  if (side < 2) { throw InvalidConfig("mask side must be at least 2"); }
}

// Smallest integer >= v, tolerant of representation error in rate * count.
Index CeilCount(double v)
{
  return static_cast<Index>(std::ceil(v - 1e-9));
}

SamplingMask Finish(SamplingMask mask)
{
  mask.rate = static_cast<double>(mask.count()) / static_cast<double>(mask.side * mask.side);
  return mask;
}

} // namespace

char const *ToString(MaskKind kind)
{
  switch (kind) {
  case MaskKind::Cartesian: return "cartesian";
  case MaskKind::Radial: return "radial";
  case MaskKind::Random: return "random";
  case MaskKind::Full: return "full";
  }
  return "?";
}

MaskKind ParseMaskKind(std::string_view text)
{
  if (text == "cartesian") { return MaskKind::Cartesian; }
  if (text == "radial") { return MaskKind::Radial; }
  if (text == "random") { return MaskKind::Random; }
  if (text == "full") { return MaskKind::Full; }
  throw InvalidConfig("mask kind must be one of cartesian, radial, random, full; got '" + std::string(text) + "'");
}

Index SamplingMask::count() const
{
  return std::count(selected.begin(), selected.end(), true);
}

Index CenteredToFft(Index centered, Index side)
{
  Index const r = centered / side;
  Index const c = centered % side;
  Index const half = side / 2;
  return ((r - half + side) % side) * side + (c - half + side) % side;
}

SamplingMask gen_cartesian(Index side, double rate, std::uint64_t seed, CartesianOptions const &opts)
{
  CheckSide(side);
  CheckRate(rate);
  if (!(opts.center_fraction > 0.0 && opts.center_fraction <= 1.0) || opts.density_power < 0.0) {
    throw InvalidConfig("cartesian center fraction must lie in (0,1] and density power must be >= 0");
  }
  Index const half = side / 2;
  Index const lines = std::clamp<Index>(CeilCount(rate * side), 1, side);
  Index const band = std::clamp<Index>(CeilCount(opts.center_fraction * rate * side), 1, lines);

  std::vector<bool> row_on(side, false);
  Index const first = half - band / 2;
  for (Index r = first; r < first + band; r++) {
    row_on[r] = true;
  }

  std::vector<double> weight(side);
  for (Index r = 0; r < side; r++) {
    double const d = std::abs(static_cast<double>(r - half)) / (0.5 * static_cast<double>(side));
    weight[r] = row_on[r] ? 0.0 : std::pow(std::max(0.0, 1.0 - d), opts.density_power);
  }

  auto rng = MakeRng(seed, StreamTag::Mask);
  for (Index picked = band; picked < lines; picked++) {
    double const total = std::accumulate(weight.begin(), weight.end(), 0.0);
    Index choice = -1;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      for (Index r = 0; r < side; r++) {
        if (weight[r] <= 0.0) { continue; }
        choice = r;
        target -= weight[r];
        if (target < 0.0) { break; }
      }
    } else {
      // Only zero-density lines remain (the Nyquist edge); take the nearest to center.
      for (Index r = 0; r < side; r++) {
        if (!row_on[r] && (choice < 0 || std::abs(r - half) < std::abs(choice - half))) { choice = r; }
      }
    }
    row_on[choice] = true;
    weight[choice] = 0.0;
  }

  SamplingMask mask{side, std::vector<bool>(side * side, false), MaskKind::Cartesian, rate, 0.0, seed};
  for (Index r = 0; r < side; r++) {
    if (!row_on[r]) { continue; }
    for (Index c = 0; c < side; c++) {
      mask.selected[r * side + c] = true;
    }
  }
  return Finish(std::move(mask));
}

std::vector<bool> RasterizeRadial(Index side, Index lines)
{
  std::vector<bool> sel(side * side, false);
  double const center = static_cast<double>(side / 2);
  for (Index l = 0; l < lines; l++) {
    double const angle = std::numbers::pi * static_cast<double>(l) / static_cast<double>(lines);
    double const dc = std::cos(angle);
    double const dr = std::sin(angle);
    // Half-pixel steps along the full diameter, out to the corners.
    for (Index step = -2 * side; step <= 2 * side; step++) {
      double const t = 0.5 * static_cast<double>(step);
      auto const r = static_cast<Index>(std::floor(center + t * dr + 0.5));
      auto const c = static_cast<Index>(std::floor(center + t * dc + 0.5));
      if (r >= 0 && r < side && c >= 0 && c < side) { sel[r * side + c] = true; }
    }
  }
  return sel;
}

SamplingMask gen_radial(Index side, double rate)
{
  CheckSide(side);
  CheckRate(rate);
  SamplingMask mask{side, {}, MaskKind::Radial, rate, 0.0, 0};
  Index const target = std::max<Index>(1, CeilCount(rate * side * side));
  if (target >= side * side) {
    mask.selected.assign(side * side, true);
    return Finish(std::move(mask));
  }
  for (Index lines = 1; lines <= 8 * side; lines++) {
    auto sel = RasterizeRadial(side, lines);
    if (std::count(sel.begin(), sel.end(), true) >= target) {
      mask.selected = std::move(sel);
      return Finish(std::move(mask));
    }
  }
  mask.selected.assign(side * side, true);
  return Finish(std::move(mask));
}

SamplingMask gen_random(Index side, double rate, std::uint64_t seed)
{
  CheckSide(side);
  CheckRate(rate);
  Index const total = side * side;
  Index const target = std::clamp<Index>(static_cast<Index>(std::llround(rate * total)), 1, total);
  Index const dc = (side / 2) * side + side / 2;
  std::vector<Index> order(total);
  std::iota(order.begin(), order.end(), 0);
  std::swap(order[0], order[dc]);
  auto rng = MakeRng(seed, StreamTag::Mask);
  // Partial Fisher-Yates over everything but the pinned DC entry.
  for (Index i = 1; i < target; i++) {
    auto const span = static_cast<std::uint64_t>(total - i);
    Index const j = i + static_cast<Index>(rng() % span);
    std::swap(order[i], order[j]);
  }
  SamplingMask mask{side, std::vector<bool>(total, false), MaskKind::Random, rate, 0.0, seed};
  for (Index i = 0; i < target; i++) {
    mask.selected[order[i]] = true;
  }
  return Finish(std::move(mask));
}

SamplingMask full_mask(Index side)
{
  CheckSide(side);
  return Finish(SamplingMask{side, std::vector<bool>(side * side, true), MaskKind::Full, 1.0, 1.0, 0});
}

SamplingMask MakeMask(MaskKind kind, Index side, double rate, std::uint64_t seed, CartesianOptions const &opts)
{
  switch (kind) {
  case MaskKind::Cartesian: return gen_cartesian(side, rate, seed, opts);
  case MaskKind::Radial: return gen_radial(side, rate);
  case MaskKind::Random: return gen_random(side, rate, seed);
  case MaskKind::Full: return full_mask(side);
  }
  throw InvalidConfig("unknown mask kind");
}

KSpaceData apply_mask(ImageGrid const &x, SamplingMask const &mask)
{
  if (x.side() != mask.side) {
    throw DimensionMismatch("image side " + std::to_string(x.side()) + " != mask side " + std::to_string(mask.side));
  }
  auto const k = fft2(x);
  KSpaceData y{mask, {}};
  y.values.reserve(mask.count());
  for (Index i = 0; i < mask.side * mask.side; i++) {
    if (mask.selected[i]) { y.values.push_back(k[CenteredToFft(i, mask.side)]); }
  }
  return y;
}

std::vector<Cx> ScatterKSpace(KSpaceData const &y)
{
  auto const &mask = y.mask;
  if (static_cast<Index>(y.values.size()) != mask.count()) {
    throw DimensionMismatch("k-space value count does not match the mask");
  }
  std::vector<Cx> grid(mask.side * mask.side);
  size_t next = 0;
  for (Index i = 0; i < mask.side * mask.side; i++) {
    if (mask.selected[i]) { grid[CenteredToFft(i, mask.side)] = y.values[next++]; }
  }
  return grid;
}

ImageGrid zero_fill(KSpaceData const &y, Mode mode)
{
  ImageGrid k(y.mask.side, ScatterKSpace(y), Mode::Complex);
  return ifft2(k, mode);
}

void SaveMask(SamplingMask const &mask, fs::path const &dir)
{
  fs::create_directories(dir);
  SaveBitmapPng(mask.selected, mask.side, dir / "mask.png");
  json meta{{"kind", ToString(mask.kind)},
            {"side", mask.side},
            {"requested_rate", mask.requested_rate},
            {"achieved_rate", mask.rate},
            {"seed", mask.seed}};
  std::ofstream out(dir / "mask.json");
  if (!out) { throw IoError("cannot write '" + (dir / "mask.json").string() + "'"); }
  out << meta.dump(2) << "\n";
}

SamplingMask LoadMask(fs::path const &dir)
{
  SamplingMask mask;
  mask.selected = LoadBitmapPng(dir / "mask.png", mask.side);
  auto const meta_path = dir / "mask.json";
  std::ifstream in(meta_path);
  if (!in) { throw IoError("cannot open '" + meta_path.string() + "'"); }
  try {
    auto const meta = json::parse(in);
    mask.kind = ParseMaskKind(meta.at("kind").get<std::string>());
    mask.requested_rate = meta.at("requested_rate").get<double>();
    mask.seed = meta.value("seed", std::uint64_t{0});
    if (meta.at("side").get<Index>() != mask.side) { throw IoError("mask.json side disagrees with mask.png"); }
  } catch (json::exception const &e) {
    throw IoError("bad mask metadata '" + meta_path.string() + "': " + e.what());
  }
  return Finish(std::move(mask));
}

void SaveKSpace(KSpaceData const &y, fs::path const &path)
{
  Index const n = y.mask.side;
  std::vector<Cx> centered(n * n);
  size_t next = 0;
  for (Index i = 0; i < n * n; i++) {
    if (y.mask.selected[i]) { centered[i] = y.values[next++]; }
  }
  WriteComplexArray(path, {n, Mode::Complex, "centered k-space, zero where unmeasured"}, centered);
}

KSpaceData LoadKSpace(fs::path const &path, SamplingMask const &mask)
{
  ComplexArrayHeader header;
  auto const centered = ReadComplexArray(path, header);
  if (header.side != mask.side || static_cast<Index>(centered.size()) != mask.side * mask.side) {
    throw DimensionMismatch("k-space file '" + path.string() + "' does not match the mask side");
  }
  KSpaceData y{mask, {}};
  for (Index i = 0; i < mask.side * mask.side; i++) {
    if (mask.selected[i]) { y.values.push_back(centered[i]); }
  }
  return y;
}

} // namespace bpmri
