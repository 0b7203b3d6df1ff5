#include "cli.hpp"

#include "bpmri/bpfa_io.hpp"
#include "bpmri/error.hpp"
#include "bpmri/harness.hpp"
#include "bpmri/metrics.hpp"
#include "bpmri/phantom.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <nlohmann/json.hpp>
#include <omp.h>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>

#ifndef BPMRI_VERSION
#define BPMRI_VERSION "unknown"
#endif

namespace bpmri::cli {

namespace {

using json = nlohmann::json;

// A flag whose value only replaces the config entry when given on the command line.
template <typename T>
struct Flag
{
  T value{};
  CLI::Option *opt = nullptr;

  bool given() const { return opt && opt->count() > 0; }
  void applyTo(T &dst) const
  {
    if (given()) { dst = value; }
  }
};

template <typename T>
void Add(CLI::App *app, Flag<T> &flag, std::string const &name, std::string const &help)
{
  flag.opt = app->add_option(name, flag.value, help);
}

double ParseLambda(std::string const &text)
{
  if (text == "inf" || text == "infinity") { return std::numeric_limits<double>::infinity(); }
  try {
    size_t used = 0;
    double const v = std::stod(text, &used);
    if (used == text.size()) { return v; }
  } catch (std::exception const &) {
  }
  throw InvalidConfig("lambda must be a positive number or 'infinity', got '" + text + "'");
}

struct HyperFlags
{
  Flag<Index> K;
  Flag<double> c, gamma, e0, f0, g0, h0;
  Flag<bool> data_noise_prior;

  void add(CLI::App *app)
  {
    Add(app, K, "--atoms", "dictionary size K");
    Add(app, c, "--bp-c", "beta process concentration c");
    Add(app, gamma, "--bp-gamma", "expected atoms per patch gamma");
    Add(app, e0, "--e0", "weight precision prior shape");
    Add(app, f0, "--f0", "weight precision prior rate");
    Add(app, g0, "--g0", "noise precision prior shape");
    Add(app, h0, "--h0", "noise precision prior rate");
    Add(app, data_noise_prior, "--data-noise-prior", "derive g0/h0 from the data (true/false)");
  }
  void applyTo(HyperParams &hp) const
  {
    K.applyTo(hp.K);
    c.applyTo(hp.c);
    gamma.applyTo(hp.gamma);
    e0.applyTo(hp.e0);
    f0.applyTo(hp.f0);
    g0.applyTo(hp.g0);
    h0.applyTo(hp.h0);
    data_noise_prior.applyTo(hp.data_noise_prior);
  }
};

struct ReconFlags
{
  Flag<std::string> lambda;
  Flag<double> lambda_g, rho, scale;
  Flag<Index> iterations, patch_side;
  Flag<bool> use_dictionary;
  Flag<std::uint64_t> seed;
  Flag<std::string> mode, output;
  HyperFlags hp;

  void add(CLI::App *app, bool with_iterations_and_seed = true)
  {
    Add(app, lambda, "--lambda", "data fidelity weight, or 'infinity'");
    Add(app, lambda_g, "--lambda-g", "TV weight; 0 disables TV");
    Add(app, rho, "--rho", "ADMM penalty");
    Add(app, scale, "--scale", "intensity divisor applied inside the solver");
    if (with_iterations_and_seed) {
      Add(app, iterations, "--iterations", "outer iterations");
      Add(app, seed, "--seed", "sampler seed");
    }
    Add(app, use_dictionary, "--use-dictionary", "include the dictionary term (true/false)");
    Add(app, patch_side, "--patch-side", "patch side length");
    Add(app, mode, "--mode", "real or complex");
    Add(app, output, "--output", "reported image: consistent or denoised");
    hp.add(app);
  }
  void applyTo(ReconConfig &cfg) const
  {
    if (lambda.given()) { cfg.lambda = ParseLambda(lambda.value); }
    lambda_g.applyTo(cfg.lambda_g);
    rho.applyTo(cfg.rho);
    scale.applyTo(cfg.scale);
    iterations.applyTo(cfg.iterations);
    use_dictionary.applyTo(cfg.use_dictionary);
    patch_side.applyTo(cfg.patch.patch_side);
    seed.applyTo(cfg.seed);
    if (mode.given()) { cfg.mode = ParseMode(mode.value); }
    if (output.given()) { cfg.output = ParseReportedImage(output.value); }
    hp.applyTo(cfg.hp);
  }
};

json ReadJson(fs::path const &path)
{
  std::ifstream in(path);
  if (!in) { throw IoError("cannot open '" + path.string() + "'"); }
  try {
    return json::parse(in);
  } catch (json::exception const &e) {
    throw InvalidConfig("bad JSON in '" + path.string() + "': " + e.what());
  }
}

// Explicit -o wins; otherwise a stamped directory under $BPMRI_OUTPUT_DIR (or ./runs).
fs::path OutputDir(std::string const &explicit_dir, std::string const &command, std::uint64_t seed)
{
  if (!explicit_dir.empty()) { return explicit_dir; }
  char const *env = std::getenv("BPMRI_OUTPUT_DIR");
  fs::path const base = env && *env ? fs::path(env) : fs::path("runs");
  auto const now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  localtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%d-%H%M%S", &tm);
  auto dir = base / fmt::format("{}-{}-s{}", command, stamp, seed);
  for (int k = 2; fs::exists(dir); k++) {
    dir = base / fmt::format("{}-{}-s{}-{}", command, stamp, seed, k);
  }
  return dir;
}

void WriteManifest(fs::path const &dir,
                   std::string const &command,
                   json const &config,
                   std::uint64_t seed,
                   int argc,
                   char const *const *argv)
{
  std::vector<std::string> args(argv, argv + argc);
  json m{{"command", command},
         {"config", config},
         {"seed", seed},
         {"version", BPMRI_VERSION},
         {"threads", omp_get_max_threads()},
         {"argv", args}};
  std::ofstream out(dir / "manifest.json");
  if (!out) { throw IoError("cannot write '" + (dir / "manifest.json").string() + "'"); }
  out << m.dump(2) << "\n";
}

ImageGrid LoadTruth(std::string const &source, Index side)
{
  if (fs::path(source).extension() == ".bin") { return LoadComplexImage(source); }
  return LoadSource(source, side);
}

// Accept either a mask directory or its mask.json/mask.png.
SamplingMask MaskFrom(fs::path const &p)
{
  return LoadMask(fs::is_directory(p) ? p : p.parent_path());
}

// Accept either a k-space file or a directory written by `sample`.
KSpaceData KSpaceFrom(fs::path const &p, SamplingMask const &mask)
{
  return LoadKSpace(fs::is_directory(p) ? p / "y.bin" : p, mask);
}

} // namespace

int ParseAndDispatch(int argc, char const *const *argv)
{
  return ParseAndDispatch(argc, argv, std::cout, std::cerr);
}

int ParseAndDispatch(int argc, char const *const *argv, std::ostream &out, std::ostream &err)
{
  CLI::App app{"Beta process dictionary learning with total variation for compressed sensing MRI"};
  app.name("bpmri");
  app.require_subcommand(1, 1);
  app.fallthrough();
  app.set_version_flag("--version", BPMRI_VERSION);
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (default: all logical cores)")->check(CLI::NonNegativeNumber);

  // mask
  auto *mask_cmd = app.add_subcommand("mask", "generate a k-space sampling mask");
  std::string mask_kind = "cartesian", mask_out;
  double mask_rate = 0.2;
  Index mask_side = 128;
  std::uint64_t mask_seed = 0;
  CartesianOptions cart;
  mask_cmd->add_option("--kind", mask_kind, "cartesian, radial, random or full")->capture_default_str();
  mask_cmd->add_option("--rate", mask_rate, "sampled fraction in (0,1]")->capture_default_str();
  mask_cmd->add_option("--side", mask_side, "image side")->capture_default_str();
  mask_cmd->add_option("--seed", mask_seed, "random seed")->capture_default_str();
  mask_cmd->add_option("--center-fraction", cart.center_fraction, "cartesian: share of lines in the central band")
    ->capture_default_str();
  mask_cmd->add_option("--density-power", cart.density_power, "cartesian: density decay exponent")
    ->capture_default_str();
  mask_cmd->add_option("-o,--out", mask_out, "output directory");

  // sample
  auto *sample_cmd = app.add_subcommand("sample", "apply a mask to an image and write k-space data");
  std::string sample_image = "phantom:ge-like", sample_mask, sample_out, sample_mode = "real";
  Index sample_side = 128;
  double sample_sigma = 0.0;
  std::uint64_t sample_seed = 0;
  sample_cmd->add_option("--image", sample_image, "image file or phantom:ge-like / phantom:shepp-like")
    ->capture_default_str();
  sample_cmd->add_option("--side", sample_side, "image side; files are box-averaged down to it")->capture_default_str();
  sample_cmd->add_option("--mask", sample_mask, "mask directory or its mask.json")->required();
  sample_cmd->add_option("--sigma", sample_sigma, "image-domain noise std")->capture_default_str();
  sample_cmd->add_option("--seed", sample_seed, "noise seed")->capture_default_str();
  sample_cmd->add_option("--mode", sample_mode, "real or complex")->capture_default_str();
  sample_cmd->add_option("-o,--out", sample_out, "output directory");

  // denoise
  auto *den_cmd = app.add_subcommand("denoise", "BPFA patch denoising of a noisy image");
  std::string den_input, den_out, den_config;
  Flag<double> den_sigma, den_scale;
  Flag<Index> den_sweeps, den_patch;
  Flag<std::uint64_t> den_seed;
  Flag<std::string> den_mode;
  HyperFlags den_hp;
  den_cmd->add_option("--input", den_input, "image file or phantom:<kind>")->required();
  Index den_side = 0;
  den_cmd->add_option("--side", den_side, "image side; files are box-averaged down to it, 0 keeps the file size (phantoms: 128)")->capture_default_str()->check(CLI::NonNegativeNumber);
  den_cmd->add_option("--config", den_config, "JSON config {sigma, sweeps, seed, mode, patch_side, scale, hyperparams}");
  Add(den_cmd, den_sigma, "--sigma", "std of noise added before denoising (0: input is already noisy)");
  Add(den_cmd, den_sweeps, "--sweeps", "Gibbs sweeps");
  Add(den_cmd, den_seed, "--seed", "seed for noise and sampler");
  Add(den_cmd, den_mode, "--mode", "real or complex");
  Add(den_cmd, den_patch, "--patch-side", "patch side length");
  Add(den_cmd, den_scale, "--scale", "intensity divisor applied inside the sampler");
  den_hp.add(den_cmd);
  den_cmd->add_option("-o,--out", den_out, "output directory");

  // recon
  auto *rec_cmd = app.add_subcommand("recon", "reconstruct an image from undersampled k-space");
  std::string rec_input, rec_mask, rec_config, rec_truth, rec_out;
  Index log_every = 10;
  ReconFlags rec_flags;
  rec_cmd->add_option("--input", rec_input, "k-space file (or directory) written by 'sample'")->required();
  rec_cmd->add_option("--mask", rec_mask, "mask directory or its mask.json")->required();
  rec_cmd->add_option("--config", rec_config, "JSON reconstruction config");
  rec_cmd->add_option("--truth", rec_truth, "ground truth (image, .bin or phantom:<kind>) for PSNR");
  rec_cmd->add_option("--log-every", log_every, "print every n-th iteration (0: quiet)")->capture_default_str();
  rec_flags.add(rec_cmd);
  rec_cmd->add_option("-o,--out", rec_out, "output directory");

  // sweep
  auto *sweep_cmd = app.add_subcommand("sweep", "run an experiment plan");
  std::string plan_path, sweep_out;
  Flag<std::vector<std::string>> sw_images, sw_masks, sw_variants;
  Flag<std::vector<double>> sw_rates;
  Flag<Index> sw_side, sw_replicates, sw_iterations;
  Flag<std::uint64_t> sw_seed;
  Flag<double> sw_noise, sw_center, sw_power;
  Flag<bool> sw_artifacts;
  ReconFlags sw_recon;
  sweep_cmd->add_option("--plan", plan_path, "JSON plan");
  Add(sweep_cmd, sw_images, "--images", "image files or phantom:<kind>");
  Add(sweep_cmd, sw_side, "--side", "image side (phantoms generated, files box-averaged)");
  Add(sweep_cmd, sw_masks, "--masks", "mask kinds");
  Add(sweep_cmd, sw_rates, "--rates", "sampling rates in (0,1]");
  Add(sweep_cmd, sw_variants, "--variants", "bpfa+tv, bpfa, tv, zero-fill");
  Add(sweep_cmd, sw_replicates, "--replicates", "seeds per cell");
  Add(sweep_cmd, sw_seed, "--seed", "base seed");
  Add(sweep_cmd, sw_iterations, "--iterations", "iterations per reconstruction");
  Add(sweep_cmd, sw_noise, "--noise-sigma", "image-domain noise std");
  Add(sweep_cmd, sw_center, "--center-fraction", "cartesian: share of lines in the central band");
  Add(sweep_cmd, sw_power, "--density-power", "cartesian: density decay exponent");
  Add(sweep_cmd, sw_artifacts, "--artifacts", "write per-cell artifacts (true/false)");
  sw_recon.add(sweep_cmd, false);
  sweep_cmd->add_option("-o,--out", sweep_out, "output directory");

  // dict-report
  auto *dict_cmd = app.add_subcommand("dict-report", "dictionary usage report from saved diagnostics");
  std::string diag_path, dict_out;
  dict_cmd->add_option("--diagnostics", diag_path, "diagnostics.json from denoise or recon")->required();
  dict_cmd->add_option("-o,--out", dict_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (CLI::ParseError const &e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  }
  if (threads > 0) { omp_set_num_threads(threads); }

  try {
    if (mask_cmd->parsed()) {
      auto const m = MakeMask(ParseMaskKind(mask_kind), mask_side, mask_rate, mask_seed, cart);
      auto const dir = OutputDir(mask_out, "mask", mask_seed);
      SaveMask(m, dir);
      WriteManifest(dir, "mask",
                    json{{"kind", mask_kind},
                         {"rate", mask_rate},
                         {"side", mask_side},
                         {"center_fraction", cart.center_fraction},
                         {"density_power", cart.density_power}},
                    mask_seed, argc, argv);
      fmt::print(out, "mask {} rate {:.4f} ({} of {}) -> {}\n", ToString(m.kind), m.rate, m.count(),
                 m.side * m.side, dir.string());
    } else if (sample_cmd->parsed()) {
      auto const mask = MaskFrom(sample_mask);
      auto truth = LoadSource(sample_image, sample_side);
      if (truth.side() != mask.side) {
        throw DimensionMismatch(fmt::format("image side {} != mask side {}", truth.side(), mask.side));
      }
      truth.setMode(ParseMode(sample_mode));
      auto const measured = sample_sigma > 0 ? add_noise(truth, sample_sigma, sample_seed) : truth;
      auto const y = apply_mask(measured, mask);
      auto const dir = OutputDir(sample_out, "sample", sample_seed);
      fs::create_directories(dir);
      SaveKSpace(y, dir / "y.bin");
      SaveComplexImage(truth, dir / "truth.bin", "ground truth");
      SavePng(truth, dir / "truth.png");
      auto const zf = zero_fill(y, truth.mode());
      SavePng(zf, dir / "zero_fill.png");
      WriteManifest(dir, "sample",
                    json{{"image", sample_image}, {"side", truth.side()}, {"mask", sample_mask},
                         {"sigma", sample_sigma}, {"mode", sample_mode}},
                    sample_seed, argc, argv);
      fmt::print(out, "zero-fill psnr {:.4f}\n", psnr(zf, truth));
      fmt::print(out, "wrote {}\n", (dir / "y.bin").string());
    } else if (den_cmd->parsed()) {
      json cfgj = den_config.empty() ? json::object() : ReadJson(den_config);
      HyperParams hp;
      hp.data_noise_prior = false;
      if (cfgj.contains("hyperparams")) {
        auto h = cfgj.at("hyperparams");
        if (!h.contains("data_noise_prior")) { h["data_noise_prior"] = false; }
        hp = h.get<HyperParams>();
      }
      den_hp.applyTo(hp);
      double sigma = cfgj.value("sigma", 0.0);
      Index sweeps = cfgj.value("sweeps", Index{200});
      std::uint64_t seed = cfgj.value("seed", std::uint64_t{0});
      std::string mode = cfgj.value("mode", std::string("real"));
      double scale = cfgj.value("scale", 255.0);
      den_scale.applyTo(scale);
      PatchConfig patch;
      patch.patch_side = cfgj.value("patch_side", patch.patch_side);
      den_sigma.applyTo(sigma);
      den_sweeps.applyTo(sweeps);
      den_seed.applyTo(seed);
      den_mode.applyTo(mode);
      den_patch.applyTo(patch.patch_side);
      if (!(sigma >= 0)) { throw InvalidConfig("sigma must be >= 0"); }
      if (sweeps < 1) { throw InvalidConfig("sweeps must be >= 1"); }
      hp.validate();

      auto clean = LoadSource(den_input, den_side == 0 && den_input.starts_with("phantom:") ? 128 : den_side);
      clean.setMode(ParseMode(mode));
      auto const noisy = sigma > 0 ? add_noise(clean, sigma, seed) : clean;
      auto const dir = OutputDir(den_out, "denoise", seed);
      fs::create_directories(dir);
      WriteManifest(dir, "denoise",
                    json{{"input", den_input}, {"sigma", sigma}, {"sweeps", sweeps}, {"mode", mode},
                         {"patch_side", patch.patch_side}, {"scale", scale}, {"hyperparams", hp}},
                    seed, argc, argv);
      auto const res = denoise(noisy, hp, sweeps, seed, patch, scale);
      SavePng(noisy, dir / "noisy.png");
      SavePng(res.image, dir / "denoised.png");
      SaveComplexImage(res.image, dir / "denoised.bin", "denoised");
      {
        std::ofstream trace(dir / "noise_trace.csv");
        trace << "sweep,noise_std\n";
        for (size_t s = 0; s < res.noise_trace.size(); s++) {
          trace << s + 1 << ',' << fmt::format("{}", res.noise_trace[s]) << '\n';
        }
      }
      SaveDiagnostics(res.diagnostics, dir / "diagnostics.json");
      dict_report(res.diagnostics, dir);
      fmt::print(out, "learned noise std {:.4f}\n", res.diagnostics.noise_std);
      fmt::print(out, "atoms with pi > 0.01: {}\n", AtomsAbove(res.diagnostics));
      if (sigma > 0) {
        fmt::print(out, "noisy psnr {:.4f}\n", psnr(noisy, clean));
        fmt::print(out, "denoised psnr {:.4f}\n", psnr(res.image, clean));
      }
      fmt::print(out, "output {}\n", dir.string());
    } else if (rec_cmd->parsed()) {
      ReconConfig cfg;
      if (!rec_config.empty()) { cfg = ReadJson(rec_config).get<ReconConfig>(); }
      rec_flags.applyTo(cfg);
      cfg.validate();
      auto const mask = MaskFrom(rec_mask);
      auto const y = KSpaceFrom(rec_input, mask);
      std::optional<ImageGrid> truth;
      if (!rec_truth.empty()) { truth = LoadTruth(rec_truth, mask.side); }
      auto const dir = OutputDir(rec_out, "recon", cfg.seed);
      fs::create_directories(dir);
      WriteManifest(dir, "recon", json(cfg), cfg.seed, argc, argv);
      std::ofstream log(dir / "iterations.csv");
      if (!log) { throw IoError("cannot write '" + (dir / "iterations.csv").string() + "'"); }
      WriteIterationHeader(log);
      auto const res = reconstruct(y, cfg, truth ? &*truth : nullptr, [&](IterationRecord const &r) {
        WriteIterationRow(log, r);
        if (log_every > 0 && (r.iter % log_every == 0 || r.iter == cfg.iterations)) {
          fmt::print(out, "iter {:5d}  psnr {:8.4f}  gamma_eps {:10.4g}  residual {:10.4g}  atoms {:4d}\n", r.iter,
                     r.psnr, r.gamma_eps, r.primal_residual, r.atoms_in_use);
        }
      });
      SavePng(res.image, dir / "recon.png");
      SaveComplexImage(res.image, dir / "recon.bin", "reconstruction");
      if (res.diagnostics) {
        SaveDiagnostics(*res.diagnostics, dir / "diagnostics.json");
        dict_report(*res.diagnostics, dir);
      }
      if (truth) {
        fmt::print(out, "zero-fill psnr {:.4f}\n", psnr(zero_fill(y, cfg.mode), *truth));
        fmt::print(out, "psnr {:.4f}\n", res.log.back().psnr);
      }
      fmt::print(out, "output {}\n", dir.string());
    } else if (sweep_cmd->parsed()) {
      ExperimentPlan plan;
      bool plan_names_dir = false;
      if (!plan_path.empty()) {
        auto const j = ReadJson(plan_path);
        plan = j.get<ExperimentPlan>();
        plan_names_dir = j.contains("output_dir");
      } else {
        plan.images = {"phantom:ge-like"};
      }
      sw_images.applyTo(plan.images);
      sw_side.applyTo(plan.side);
      if (sw_masks.given()) {
        plan.masks.clear();
        for (auto const &m : sw_masks.value) {
          plan.masks.push_back(ParseMaskKind(m));
        }
      }
      sw_rates.applyTo(plan.rates);
      if (sw_variants.given()) {
        plan.variants.clear();
        for (auto const &v : sw_variants.value) {
          plan.variants.push_back(ParseVariant(v));
        }
      }
      sw_replicates.applyTo(plan.replicates);
      sw_seed.applyTo(plan.seed);
      sw_iterations.applyTo(plan.iterations);
      sw_noise.applyTo(plan.noise_sigma);
      sw_center.applyTo(plan.cartesian.center_fraction);
      sw_power.applyTo(plan.cartesian.density_power);
      sw_artifacts.applyTo(plan.artifacts);
      sw_recon.applyTo(plan.recon);
      if (!sweep_out.empty() || !plan_names_dir) { plan.output_dir = OutputDir(sweep_out, "sweep", plan.seed); }
      plan.validate();
      fs::create_directories(plan.output_dir);
      WriteManifest(plan.output_dir, "sweep", json(plan), plan.seed, argc, argv);
      auto const report = run_sweep(plan);
      Index failed = 0;
      for (auto const &c : report.cells) {
        fmt::print(out, "{:<12} {:<9} {:4.0f}% {:<9} r{}  psnr {:8.4f}  {}\n", c.image, ToString(c.mask),
                   c.rate * 100, ToString(c.variant), c.replicate, c.psnr, c.status);
        failed += c.status != "ok";
      }
      fmt::print(out, "{} cells ({} failed) -> {}\n", report.cells.size(), failed, plan.output_dir.string());
    } else if (dict_cmd->parsed()) {
      auto const diag = LoadDiagnostics(diag_path);
      auto const dir = OutputDir(dict_out, "dict-report", 0);
      for (auto const &f : dict_report(diag, dir)) {
        fmt::print(out, "wrote {}\n", f.string());
      }
    }
  } catch (InvalidConfig const &e) {
    fmt::print(err, "error: {}\n", e.what());
    return kUsage;
  } catch (nlohmann::json::exception const &e) {
    fmt::print(err, "error: bad config value: {}\n", e.what());
    return kUsage;
  } catch (std::exception const &e) {
    fmt::print(err, "error: {}\n", e.what());
    return kRuntime;
  }
  return kOk;
}

} // namespace bpmri::cli
