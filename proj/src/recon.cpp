#include "bpmri/recon.hpp"

#include "bpmri/bpfa_io.hpp"
#include "bpmri/error.hpp"
#include "bpmri/fft.hpp"
#include "bpmri/metrics.hpp"
#include "bpmri/patches.hpp"

#include <chrono>
#include <cmath>

namespace bpmri {

using json = nlohmann::json;

char const *ToString(ReportedImage which)
{
  return which == ReportedImage::Consistent ? "consistent" : "denoised";
}

ReportedImage ParseReportedImage(std::string_view text)
{
  if (text == "consistent" || text == "x") { return ReportedImage::Consistent; }
  if (text == "denoised" || text == "x_bpfa") { return ReportedImage::Denoised; }
  throw InvalidConfig("output must be 'consistent' or 'denoised', got '" + std::string(text) + "'");
}

void ReconConfig::validate() const
{
  if (!(lambda > 0.0)) { throw InvalidConfig("lambda must be > 0 or infinity"); }
  if (!(lambda_g >= 0.0) || !std::isfinite(lambda_g)) { throw InvalidConfig("lambda_g must be finite and >= 0"); }
  if (!(rho > 0.0) || !std::isfinite(rho)) { throw InvalidConfig("rho must be finite and > 0"); }
  if (!(scale > 0.0) || !std::isfinite(scale)) { throw InvalidConfig("scale must be finite and > 0"); }
  if (iterations < 1) { throw InvalidConfig("iterations must be >= 1"); }
  if (patch.patch_side < 1) { throw InvalidConfig("patch side must be >= 1"); }
  if (!use_dictionary && !tvEnabled() && exactData()) {
    throw InvalidConfig("with neither dictionary nor TV the unmeasured k-space is undetermined");
  }
  hp.validate();
}

void to_json(json &j, ReconConfig const &cfg)
{
  j = json{{"lambda", cfg.exactData() ? json("infinity") : json(cfg.lambda)},
           {"lambda_g", cfg.lambda_g},
           {"rho", cfg.rho},
           {"scale", cfg.scale},
           {"iterations", cfg.iterations},
           {"use_dictionary", cfg.use_dictionary},
           {"hyperparams", cfg.hp},
           {"patch_side", cfg.patch.patch_side},
           {"seed", cfg.seed},
           {"mode", ToString(cfg.mode)},
           {"output", ToString(cfg.output)}};
}

void from_json(json const &j, ReconConfig &cfg)
{
  ReconConfig const defaults;
  if (j.contains("lambda")) {
    auto const &l = j.at("lambda");
    if (l.is_string()) {
      if (l.get<std::string>() != "infinity") { throw InvalidConfig("lambda must be a number or \"infinity\""); }
      cfg.lambda = std::numeric_limits<double>::infinity();
    } else {
      cfg.lambda = l.get<double>();
    }
  }
  cfg.lambda_g = j.value("lambda_g", defaults.lambda_g);
  cfg.rho = j.value("rho", defaults.rho);
  cfg.scale = j.value("scale", defaults.scale);
  cfg.iterations = j.value("iterations", defaults.iterations);
  cfg.use_dictionary = j.value("use_dictionary", defaults.use_dictionary);
  if (j.contains("hyperparams")) { cfg.hp = j.at("hyperparams").get<HyperParams>(); }
  cfg.patch.patch_side = j.value("patch_side", defaults.patch.patch_side);
  cfg.seed = j.value("seed", defaults.seed);
  cfg.mode = ParseMode(j.value("mode", std::string(ToString(defaults.mode))));
  cfg.output = ParseReportedImage(j.value("output", std::string(ToString(defaults.output))));
}

ReportedImage denoised_output_select(ReconConfig const &cfg)
{
  return cfg.output;
}

P3Result P3Solve(KSpaceData const &y,
                 ImageGrid const &x_bpfa,
                 TVState const &st,
                 double gamma_eps,
                 ReconConfig const &cfg,
                 DifferenceOperator const &eig)
{
  Index const n = y.mask.side;
  Index const N = n * n;
  bool const tv = cfg.tvEnabled();
  bool const dict = cfg.use_dictionary;
  if (eig.side != n) { throw DimensionMismatch("eigenvalues were computed for a different side"); }
  if (dict && x_bpfa.side() != n) { throw DimensionMismatch("x_bpfa side does not match the k-space data"); }
  if (tv) {
    st.validate(n);
    if (st.rho != cfg.rho) { throw InvalidConfig("TV state rho differs from the configuration"); }
  }

  std::vector<Cx> tv_term;
  if (tv) {
    TvCoefficients diff(st.beta.size());
    for (size_t j = 0; j < diff.size(); j++) {
      diff[j] = st.beta[j] - st.u[j];
    }
    auto img = psi_transpose_apply(diff, n, Mode::Complex);
    tv_term.assign(img.pixels().begin(), img.pixels().end());
    Fft2InPlace(tv_term, n);
  }
  std::vector<Cx> dict_term;
  double dict_weight = 0.0;
  if (dict) {
    if (!(gamma_eps > 0.0)) { throw InvalidConfig("gamma_eps must be > 0"); }
    dict_term.assign(x_bpfa.pixels().begin(), x_bpfa.pixels().end());
    Fft2InPlace(dict_term, n);
    dict_weight = gamma_eps * static_cast<double>(cfg.patch.dim());
  }

  auto const yk = ScatterKSpace(y);
  std::vector<std::uint8_t> measured(N, 0);
  for (Index i = 0; i < N; i++) {
    if (y.mask.selected[i]) { measured[CenteredToFft(i, n)] = 1; }
  }

  bool const real = cfg.mode == Mode::Real;
  bool const exact = cfg.exactData();
  P3Result out;
  out.kspace.resize(N);
  for (Index k1 = 0; k1 < n; k1++) {
    for (Index k2 = 0; k2 < n; k2++) {
      Index const k = k1 * n + k2;
      Index const mirror = ((n - k1) % n) * n + (n - k2) % n;
      Cx num{0};
      double den = 0.0;
      if (tv) {
        num += cfg.rho * tv_term[k];
        den += cfg.rho * eig.eigenvalues[k];
      }
      if (dict) {
        num += dict_weight * dict_term[k];
        den += dict_weight;
      }
      Cx theta;
      if (exact) {
        if (measured[k]) {
          theta = yk[k];
        } else if (real && measured[mirror]) {
          theta = std::conj(yk[mirror]);
        } else {
          theta = den > 0.0 ? num / den : Cx{0};
        }
      } else {
        double weight;
        Cx data;
        if (real) {
          // A real image ties theta(-k) = conj(theta(k)), so each measurement counts for both.
          weight = 0.5 * cfg.lambda * (measured[k] + measured[mirror]);
          data = 0.5 * cfg.lambda *
                 (static_cast<double>(measured[k]) * yk[k] + static_cast<double>(measured[mirror]) * std::conj(yk[mirror]));
        } else {
          weight = cfg.lambda * measured[k];
          data = cfg.lambda * static_cast<double>(measured[k]) * yk[k];
        }
        theta = den + weight > 0.0 ? (num + data) / (den + weight) : Cx{0};
      }
      out.kspace[k] = theta;
    }
  }
  out.x = ifft2(ImageGrid(n, out.kspace, Mode::Complex), cfg.mode);
  return out;
}

ImageGrid p3_solve(KSpaceData const &y,
                   ImageGrid const &x_bpfa,
                   TVState const &st,
                   double gamma_eps,
                   ReconConfig const &cfg,
                   DifferenceOperator const &eig)
{
  return P3Solve(y, x_bpfa, st, gamma_eps, cfg, eig).x;
}

namespace {

double KSpaceError(KSpaceData const &y, std::vector<Cx> const &theta)
{
  Index const n = y.mask.side;
  double worst = 0.0;
  size_t next = 0;
  for (Index i = 0; i < n * n; i++) {
    if (!y.mask.selected[i]) { continue; }
    worst = std::max(worst, std::abs(theta[CenteredToFft(i, n)] - y.values[next++]));
  }
  return worst;
}

ImageGrid Scaled(ImageGrid img, double s)
{
  for (auto &v : img.pixels()) {
    v *= s;
  }
  return img;
}

template <typename Scalar>
ReconResult ReconstructWith(KSpaceData const &y_in,
                            ReconConfig const &cfg,
                            ImageGrid const *truth,
                            IterationCallback const &on_iteration)
{
  using Clock = std::chrono::steady_clock;
  Index const n = y_in.mask.side;
  double const s = cfg.scale;
  auto y = y_in;
  for (auto &v : y.values) {
    v /= s;
  }
  ReconResult result;
  auto x = zero_fill(y, cfg.mode);
  auto const eig = laplacian_eigenvalues(n);
  TVState tv;
  if (cfg.tvEnabled()) { tv = TVState::Init(x, cfg.rho, cfg.lambda_g); }

  std::optional<BpfaModel<Scalar>> model;
  Matrix<Scalar> X;
  if (cfg.use_dictionary) {
    X = extract_patches<Scalar>(x, cfg.patch);
    model = init_state<Scalar>(X, cfg.hp, cfg.seed);
  }
  ImageGrid x_bpfa = x;
  std::vector<Cx> theta;

  for (Index it = 1; it <= cfg.iterations; it++) {
    auto const start = Clock::now();
    if (cfg.tvEnabled()) { tv.beta = shrink_update(x, tv); }
    double gamma_eps = 0.0;
    if (model) {
      X = extract_patches<Scalar>(x, cfg.patch);
      x_bpfa = gibbs_sweep<Scalar>(X, *model, cfg.patch);
      x_bpfa.setMode(cfg.mode);
      gamma_eps = model->state.gamma_eps;
    }
    auto p3 = P3Solve(y, x_bpfa, tv, gamma_eps, cfg, eig);
    x = std::move(p3.x);
    theta = std::move(p3.kspace);
    if (!model) { x_bpfa = x; }
    if (cfg.tvEnabled()) { tv.u = dual_update(x, tv); }

    IterationRecord rec;
    rec.iter = it;
    rec.tv_value = tv_value(x) * s;
    rec.kspace_error = KSpaceError(y, theta);
    if (cfg.tvEnabled()) { rec.primal_residual = primal_residual(x, tv) * s; }
    if (model) {
      auto const use = model->codes.usagePerAtom();
      rec.atoms_in_use = std::count_if(use.begin(), use.end(), [](Index u) { return u > 0; });
      rec.log_joint = log_joint(X, model->dict, model->codes, model->state);
    }
    if (model) { rec.gamma_eps = gamma_eps / (s * s); }
    if (truth) {
      rec.psnr_x = psnr(Scaled(x, s), *truth);
      rec.psnr_bpfa = psnr(Scaled(x_bpfa, s), *truth);
      rec.psnr = cfg.output == ReportedImage::Consistent ? rec.psnr_x : rec.psnr_bpfa;
    }
    rec.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    result.log.push_back(rec);
    if (on_iteration) { on_iteration(rec); }
  }

  // Back to the caller's units. Measured coefficients are restored from y itself
  // so they survive the rescaling bit for bit.
  for (auto &v : theta) {
    v *= s;
  }
  if (cfg.exactData()) {
    auto const yk = ScatterKSpace(y_in);
    std::vector<std::uint8_t> measured(n * n, 0);
    for (Index i = 0; i < n * n; i++) {
      if (y_in.mask.selected[i]) { measured[CenteredToFft(i, n)] = 1; }
    }
    for (Index k = 0; k < n * n; k++) {
      Index const mirror = ((n - k / n) % n) * n + (n - k % n) % n;
      if (measured[k]) {
        theta[k] = yk[k];
      } else if (cfg.mode == Mode::Real && measured[mirror]) {
        theta[k] = std::conj(yk[mirror]);
      }
    }
  }
  result.x = ifft2(ImageGrid(n, theta, Mode::Complex), cfg.mode);
  result.x_bpfa = model ? Scaled(std::move(x_bpfa), s) : result.x;
  result.kspace = std::move(theta);
  result.image = cfg.output == ReportedImage::Consistent ? result.x : result.x_bpfa;
  if (model) {
    result.diagnostics = Diagnose(*model);
    result.diagnostics->noise_std *= s;
  }
  return result;
}

} // namespace

ReconResult reconstruct(KSpaceData const &y,
                        ReconConfig const &cfg,
                        ImageGrid const *ground_truth,
                        IterationCallback const &on_iteration)
{
  cfg.validate();
  if (static_cast<Index>(y.values.size()) != y.mask.count()) {
    throw DimensionMismatch("k-space value count does not match the mask");
  }
  if (ground_truth && ground_truth->side() != y.mask.side) {
    throw DimensionMismatch("ground truth side does not match the k-space data");
  }
  if (cfg.patch.patch_side > y.mask.side) { throw InvalidConfig("patch side exceeds image side"); }
  if (cfg.mode == Mode::Real) { return ReconstructWith<double>(y, cfg, ground_truth, on_iteration); }
  return ReconstructWith<Cx>(y, cfg, ground_truth, on_iteration);
}

} // namespace bpmri
