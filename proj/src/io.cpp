#include "bpmri/io.hpp"

#include "bpmri/error.hpp"

#include <nlohmann/json.hpp>
#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

namespace bpmri {

using json = nlohmann::json;

namespace {

struct FileCloser
{
  void operator()(std::FILE *f) const { std::fclose(f); }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

File Open(fs::path const &path, char const *how)
{
  File f(std::fopen(path.c_str(), how));
  if (!f) { throw IoError("cannot open '" + path.string() + "'"); }
  return f;
}

ImageGrid FromRows(std::vector<double> const &values, Index width, Index height, fs::path const &path)
{
  if (width != height) {
    throw IoError("'" + path.string() + "' is " + std::to_string(width) + "x" + std::to_string(height) +
                  "; only square images are supported");
  }
  return ImageGrid::FromReal(width, values);
}

ImageGrid LoadPng(fs::path const &path)
{
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw IoError("cannot read PNG '" + path.string() + "': " + image.message);
  }
  // IHDR bit depth lives at byte 24; 16-bit sources keep their precision.
  std::FILE *probe = std::fopen(path.c_str(), "rb");
  unsigned char head[25] = {};
  if (probe) {
    auto got = std::fread(head, 1, sizeof(head), probe);
    (void)got;
    std::fclose(probe);
  }
  bool const sixteen = head[24] == 16;
  Index const w = image.width;
  Index const h = image.height;
  std::vector<double> values(static_cast<size_t>(w * h));
  if (sixteen) {
    image.format = PNG_FORMAT_LINEAR_Y;
    std::vector<png_uint_16> buffer(PNG_IMAGE_SIZE(image) / 2);
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
      throw IoError("cannot decode PNG '" + path.string() + "': " + image.message);
    }
    for (size_t i = 0; i < values.size(); i++) {
      values[i] = buffer[i] * (255.0 / 65535.0);
    }
  } else {
    image.format = PNG_FORMAT_GRAY;
    std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
      throw IoError("cannot decode PNG '" + path.string() + "': " + image.message);
    }
    for (size_t i = 0; i < values.size(); i++) {
      values[i] = buffer[i];
    }
  }
  return FromRows(values, w, h, path);
}

std::string PgmToken(std::istream &in)
{
  std::string token;
  while (in >> token) {
    if (token[0] == '#') {
      std::string rest;
      std::getline(in, rest);
      continue;
    }
    return token;
  }
  throw IoError("truncated PGM header");
}

ImageGrid LoadPgm(fs::path const &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) { throw IoError("cannot open '" + path.string() + "'"); }
  auto const magic = PgmToken(in);
  if (magic != "P5" && magic != "P2") { throw IoError("'" + path.string() + "' is not a grayscale PGM"); }
  Index const w = std::stol(PgmToken(in));
  Index const h = std::stol(PgmToken(in));
  long const maxval = std::stol(PgmToken(in));
  if (maxval <= 0 || maxval > 65535) { throw IoError("bad PGM maxval in '" + path.string() + "'"); }
  std::vector<double> values(static_cast<size_t>(w * h));
  double const scale = 255.0 / static_cast<double>(maxval);
  if (magic == "P2") {
    for (auto &v : values) {
      v = std::stol(PgmToken(in)) * scale;
    }
  } else {
    in.get(); // single whitespace after maxval
    size_t const bytes = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> raw(values.size() * bytes);
    if (!in.read(reinterpret_cast<char *>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
      throw IoError("truncated PGM data in '" + path.string() + "'");
    }
    for (size_t i = 0; i < values.size(); i++) {
      unsigned const s = bytes == 2 ? (raw[2 * i] << 8) | raw[2 * i + 1] : raw[i];
      values[i] = s * scale;
    }
  }
  return FromRows(values, w, h, path);
}

std::vector<unsigned char> ToBytes(ImageGrid const &img, double lo, double hi)
{
  if (!(hi > lo)) { throw InvalidConfig("display range must satisfy hi > lo"); }
  auto const values = img.isReal() ? img.real() : img.magnitude();
  std::vector<unsigned char> bytes(values.size());
  for (size_t i = 0; i < values.size(); i++) {
    double const t = std::clamp((values[i] - lo) / (hi - lo), 0.0, 1.0);
    bytes[i] = static_cast<unsigned char>(std::lround(t * 255.0));
  }
  return bytes;
}

} // namespace

void SaveGrayPng(std::span<unsigned char const> bytes, Index width, Index height, fs::path const &path)
{
  if (static_cast<Index>(bytes.size()) != width * height) { throw DimensionMismatch("PNG buffer size mismatch"); }
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.c_str(), 0, bytes.data(), 0, nullptr)) {
    throw IoError("cannot write PNG '" + path.string() + "': " + image.message);
  }
}

namespace {

void PutLittle(std::ostream &out, double v)
{
  auto bits = std::bit_cast<std::uint64_t>(v);
  unsigned char b[8];
  for (int i = 0; i < 8; i++) {
    b[i] = static_cast<unsigned char>(bits >> (8 * i));
  }
  out.write(reinterpret_cast<char const *>(b), 8);
}

double GetLittle(unsigned char const *b)
{
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; i++) {
    bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  }
  return std::bit_cast<double>(bits);
}

} // namespace

ImageGrid LoadImage(fs::path const &path)
{
  if (!fs::exists(path)) { throw IoError("no such file '" + path.string() + "'"); }
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".png") { return LoadPng(path); }
  if (ext == ".pgm" || ext == ".pnm") { return LoadPgm(path); }
  if (ext == ".bin") { return LoadComplexImage(path); }
  throw IoError("unsupported image format '" + path.string() + "' (expected .png, .pgm or .bin)");
}

void SavePng(ImageGrid const &img, fs::path const &path, double lo, double hi)
{
  auto const bytes = ToBytes(img, lo, hi);
  SaveGrayPng(bytes, img.side(), img.side(), path);
}

void SavePgm(ImageGrid const &img, fs::path const &path, double lo, double hi)
{
  auto const bytes = ToBytes(img, lo, hi);
  std::ofstream out(path, std::ios::binary);
  if (!out) { throw IoError("cannot write '" + path.string() + "'"); }
  out << "P5\n" << img.side() << " " << img.side() << "\n255\n";
  out.write(reinterpret_cast<char const *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void SaveBitmapPng(std::vector<bool> const &bits, Index side, fs::path const &path)
{
  if (static_cast<Index>(bits.size()) != side * side) { throw DimensionMismatch("bitmap size does not match side"); }
  auto f = Open(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) { throw IoError("libpng initialisation failed"); }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("cannot write PNG '" + path.string() + "'");
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(side), static_cast<png_uint_32>(side), 1, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_byte> row(static_cast<size_t>((side + 7) / 8));
  for (Index r = 0; r < side; r++) {
    std::fill(row.begin(), row.end(), 0);
    for (Index c = 0; c < side; c++) {
      if (bits[r * side + c]) { row[c / 8] |= static_cast<png_byte>(0x80 >> (c % 8)); }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

std::vector<bool> LoadBitmapPng(fs::path const &path, Index &side)
{
  auto img = LoadPng(path);
  side = img.side();
  std::vector<bool> bits(static_cast<size_t>(img.size()));
  for (Index i = 0; i < img.size(); i++) {
    bits[i] = img[i].real() > 127.5;
  }
  return bits;
}

fs::path SidecarPath(fs::path const &path)
{
  return fs::path(path.string() + ".json");
}

void WriteRawComplex(fs::path const &path, std::span<Cx const> data)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) { throw IoError("cannot write '" + path.string() + "'"); }
  for (auto const &v : data) {
    PutLittle(out, v.real());
    PutLittle(out, v.imag());
  }
}

std::vector<Cx> ReadRawComplex(fs::path const &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) { throw IoError("cannot open '" + path.string() + "'"); }
  std::vector<unsigned char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (raw.size() % 16 != 0) { throw IoError("'" + path.string() + "' is not a whole number of complex values"); }
  std::vector<Cx> data(raw.size() / 16);
  for (size_t i = 0; i < data.size(); i++) {
    data[i] = Cx(GetLittle(&raw[16 * i]), GetLittle(&raw[16 * i + 8]));
  }
  return data;
}

void WriteComplexArray(fs::path const &path, ComplexArrayHeader const &header, std::span<Cx const> data)
{
  WriteRawComplex(path, data);
  json meta{{"side", header.side}, {"mode", ToString(header.mode)}, {"description", header.description}};
  std::ofstream side(SidecarPath(path));
  if (!side) { throw IoError("cannot write '" + SidecarPath(path).string() + "'"); }
  side << meta.dump(2) << "\n";
}

std::vector<Cx> ReadComplexArray(fs::path const &path, ComplexArrayHeader &header)
{
  auto const sidecar = SidecarPath(path);
  std::ifstream meta_in(sidecar);
  if (!meta_in) { throw IoError("cannot open '" + sidecar.string() + "'"); }
  json meta;
  try {
    meta = json::parse(meta_in);
    header.side = meta.at("side").get<Index>();
    header.mode = ParseMode(meta.at("mode").get<std::string>());
    header.description = meta.value("description", "");
  } catch (json::exception const &e) {
    throw IoError("bad sidecar '" + sidecar.string() + "': " + e.what());
  }
  return ReadRawComplex(path);
}

void SaveComplexImage(ImageGrid const &img, fs::path const &path, std::string const &description)
{
  WriteComplexArray(path, {img.side(), img.mode(), description}, img.pixels());
}

ImageGrid LoadComplexImage(fs::path const &path)
{
  ComplexArrayHeader header;
  auto data = ReadComplexArray(path, header);
  if (static_cast<Index>(data.size()) != header.side * header.side) {
    throw IoError("'" + path.string() + "' holds " + std::to_string(data.size()) + " values, expected side^2");
  }
  return ImageGrid(header.side, std::move(data), header.mode);
}

} // namespace bpmri
