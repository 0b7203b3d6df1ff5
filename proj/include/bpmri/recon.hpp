#pragma once

#include "bpfa.hpp"
#include "difference.hpp"
#include "sampling.hpp"
#include "tv.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <limits>
#include <optional>

namespace bpmri {

enum class ReportedImage
{
  Consistent, // x: agrees with the measured k-space
  Denoised    // x_bpfa: the dictionary's denoised proposal
};

char const *ToString(ReportedImage which);
ReportedImage ParseReportedImage(std::string_view text);

struct ReconConfig
{
  double lambda = std::numeric_limits<double>::infinity(); // data fidelity; infinity fixes measured k-space
  double lambda_g = 10.0;                                   // TV weight; 0 switches TV off entirely
  double rho = 1000.0;
  // The solver works on intensities divided by `scale` (255: [0,255] data runs on [0,1]).
  // Inputs and outputs stay in the caller's units.
  double scale = 255.0;
  Index iterations = 1000;
  bool use_dictionary = true; // false: TV-only (dictionary term weight 0)
  HyperParams hp;
  PatchConfig patch;
  std::uint64_t seed = 0;
  Mode mode = Mode::Real;
  ReportedImage output = ReportedImage::Consistent;

  bool tvEnabled() const { return lambda_g > 0.0; }
  bool exactData() const { return std::isinf(lambda); }
  void validate() const;
};

void to_json(nlohmann::json &j, ReconConfig const &cfg);
void from_json(nlohmann::json const &j, ReconConfig &cfg);

ReportedImage denoised_output_select(ReconConfig const &cfg);

struct P3Result
{
  ImageGrid x;
  std::vector<Cx> kspace; // theta, unshifted; exactly y at measured positions when lambda = infinity
};

/*
 * Closed-form x update, coefficient-wise in k-space:
 *   theta = [rho F Psi^T(beta - u) + gamma_eps P F x_bpfa + lambda F F_u^H y]
 *         / [rho Lambda + gamma_eps P + lambda 1{measured}].
 * TV terms drop out when lambda_g = 0, dictionary terms when use_dictionary is false.
 * In real mode the minimiser over real images is returned: a measurement at k
 * also constrains -k through conjugate symmetry.
 */
P3Result P3Solve(KSpaceData const &y,
                 ImageGrid const &x_bpfa,
                 TVState const &st,
                 double gamma_eps,
                 ReconConfig const &cfg,
                 DifferenceOperator const &eig);

ImageGrid p3_solve(KSpaceData const &y,
                   ImageGrid const &x_bpfa,
                   TVState const &st,
                   double gamma_eps,
                   ReconConfig const &cfg,
                   DifferenceOperator const &eig);

struct IterationRecord
{
  Index iter = 0;
  double psnr = std::numeric_limits<double>::quiet_NaN();      // reported image vs ground truth
  double psnr_x = std::numeric_limits<double>::quiet_NaN();
  double psnr_bpfa = std::numeric_limits<double>::quiet_NaN();
  double gamma_eps = std::numeric_limits<double>::quiet_NaN();
  double tv_value = 0;
  double primal_residual = std::numeric_limits<double>::quiet_NaN(); // ||Psi x - beta||_2
  Index atoms_in_use = 0;
  double log_joint = std::numeric_limits<double>::quiet_NaN();
  double kspace_error = 0; // max |theta_i - y_i| over measured i
  double seconds = 0;
};

using IterationLog = std::vector<IterationRecord>;

struct ReconResult
{
  ImageGrid image; // as selected by cfg.output
  ImageGrid x;
  ImageGrid x_bpfa;
  std::vector<Cx> kspace; // theta in the caller's units; equals y at measured positions when lambda = infinity
  IterationLog log;
  std::optional<BpfaDiagnostics> diagnostics;
};

using IterationCallback = std::function<void(IterationRecord const &)>;

/*
 * Zero-fill, then per iteration: shrinkage (P1), one Gibbs sweep on the
 * current image's patches (P2), the Fourier-domain solve (P3) and the dual
 * update. `on_iteration` sees each record as soon as it is complete.
 */
ReconResult reconstruct(KSpaceData const &y,
                        ReconConfig const &cfg,
                        ImageGrid const *ground_truth = nullptr,
                        IterationCallback const &on_iteration = {});

} // namespace bpmri
