#include "bpmri/fft.hpp"

#include "bpmri/error.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>

namespace bpmri {

namespace {

// FFTW's planner is not re-entrant; execution with the new-array interface is.
// FFTW_ESTIMATE keeps the chosen algorithm, and so the rounding, independent of timing.
class PlanCache
{
public:
  ~PlanCache()
  {
    for (auto &[key, plan] : plans_) {
      fftw_destroy_plan(plan);
    }
  }

  fftw_plan get(Index side, int sign)
  {
    std::lock_guard lock(mutex_);
    auto const key = std::make_pair(side, sign);
    if (auto it = plans_.find(key); it != plans_.end()) { return it->second; }
    auto *scratch = fftw_alloc_complex(static_cast<size_t>(side * side));
    auto plan = fftw_plan_dft_2d(
      static_cast<int>(side), static_cast<int>(side), scratch, scratch, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(scratch);
    if (!plan) { throw Error("FFTW failed to create a plan"); }
    plans_.emplace(key, plan);
    return plan;
  }

private:
  std::mutex mutex_;
  std::map<std::pair<Index, int>, fftw_plan> plans_;
};

PlanCache &Plans()
{
  static PlanCache cache;
  return cache;
}

void Transform(std::span<Cx> data, Index side, int sign)
{
  if (static_cast<Index>(data.size()) != side * side) {
    throw DimensionMismatch("FFT buffer does not match side");
  }
  auto plan = Plans().get(side, sign);
  auto *ptr = reinterpret_cast<fftw_complex *>(data.data());
  fftw_execute_dft(plan, ptr, ptr);
  double const scale = 1.0 / static_cast<double>(side);
  for (auto &v : data) {
    v *= scale;
  }
}

} // namespace

void Fft2InPlace(std::span<Cx> data, Index side)
{
  Transform(data, side, FFTW_FORWARD);
}

void Ifft2InPlace(std::span<Cx> data, Index side)
{
  Transform(data, side, FFTW_BACKWARD);
}

ImageGrid fft2(ImageGrid const &img)
{
  ImageGrid out(img.side(), std::vector<Cx>(img.pixels().begin(), img.pixels().end()), Mode::Complex);
  Fft2InPlace(out.pixels(), out.side());
  return out;
}

ImageGrid ifft2(ImageGrid const &kspace, Mode mode)
{
  ImageGrid out(kspace.side(), std::vector<Cx>(kspace.pixels().begin(), kspace.pixels().end()), Mode::Complex);
  Ifft2InPlace(out.pixels(), out.side());
  out.setMode(mode);
  return out;
}

} // namespace bpmri
