#pragma once

#include "image.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace bpmri {

namespace fs = std::filesystem;

// 8/16-bit grayscale PNG or binary/ASCII PGM, mapped linearly onto [0, 255].
ImageGrid LoadImage(fs::path const &path);

// 8-bit grayscale; values are clamped to [lo, hi] and mapped onto [0, 255].
// Real mode writes the real part, complex mode the magnitude.
void SavePng(ImageGrid const &img, fs::path const &path, double lo = 0.0, double hi = 255.0);
void SavePgm(ImageGrid const &img, fs::path const &path, double lo = 0.0, double hi = 255.0);

void SaveGrayPng(std::span<unsigned char const> bytes, Index width, Index height, fs::path const &path);

// 1-bit PNG; white = true.
void SaveBitmapPng(std::vector<bool> const &bits, Index side, fs::path const &path);
std::vector<bool> LoadBitmapPng(fs::path const &path, Index &side);

/*
 * Complex arrays: little-endian float64 interleaved (re, im), row-major, plus a
 * JSON sidecar at `<path>.json` with {side, mode, description}.
 */
struct ComplexArrayHeader
{
  Index side = 0;
  Mode mode = Mode::Complex;
  std::string description;
};

void WriteComplexArray(fs::path const &path, ComplexArrayHeader const &header, std::span<Cx const> data);
std::vector<Cx> ReadComplexArray(fs::path const &path, ComplexArrayHeader &header);

void SaveComplexImage(ImageGrid const &img, fs::path const &path, std::string const &description = "image");
ImageGrid LoadComplexImage(fs::path const &path);

fs::path SidecarPath(fs::path const &path);

// Same float64 (re, im) payload without a sidecar; callers describe the shape themselves.
void WriteRawComplex(fs::path const &path, std::span<Cx const> data);
std::vector<Cx> ReadRawComplex(fs::path const &path);

} // namespace bpmri
